#pragma once

#include "gipsi/dynamics.hpp"
#include "gipsi/experiments.hpp"
#include "gipsi/market.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace gipsi::config {

/// Malformed or out-of-domain configuration. The message names the field and, when it can be
/// located, the line in the source document.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    ModelParams model;
    experiments::NetworkSource network;
    ShockSpec shock;
    IntegratorConfig integrator;
    double relax_tol = 1e-6;
    bool emit_trajectory = true;
    bool emit_events = true;
    bool full = false;
};

/// Relative network file paths are resolved against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
experiments::SweepSpec parse_sweep_config(const std::string& text, const std::filesystem::path& base_dir = {});

std::string read_file(const std::filesystem::path& path);

} // namespace gipsi::config
