// gipsi command-line driver.

#include "gipsi/config.hpp"
#include "gipsi/dynamics.hpp"
#include "gipsi/experiments.hpp"
#include "gipsi/io.hpp"
#include "gipsi/meanfield.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gipsi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("gipsi");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    const char* env = std::getenv("GIPSI_LOG");
    const std::string level = env ? env : "info";
    if (level == "error")
        spdlog::set_level(spdlog::level::err);
    else if (level == "debug")
        spdlog::set_level(spdlog::level::debug);
    else
        spdlog::set_level(spdlog::level::info);
}

// Writes the whole file at once, after computation.
void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << body;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

MarketNetwork realize(const experiments::NetworkSource& source) {
    if (const auto* spec = std::get_if<SyntheticNetworkSpec>(&source)) return build_synthetic_network(*spec);
    return std::get<MarketNetwork>(source);
}

json complex_json(std::complex<double> z) { return {{"re", z.real()}, {"im", z.imag()}}; }

struct SimulateArgs {
    std::string config;
    std::string out = ".";
    bool full = false;
    std::string save_network;
};

int cmd_simulate(const SimulateArgs& args) {
    const fs::path config_path = args.config;
    const auto cfg = config::parse_run_config(config::read_file(config_path), config_path.parent_path());
    const MarketNetwork net = realize(cfg.network);
    const fs::path out = args.out;
    fs::create_directories(out);
    if (!args.save_network.empty()) io::save_network(net, args.save_network);

    spdlog::info("simulate: {} investors x {} assets, alpha={} beta={}", net.n_investors, net.n_assets,
                 cfg.model.alpha, cfg.model.beta);
    const Trajectory traj = integrate(apply_shock(net, cfg.shock, cfg.model), cfg.model, cfg.integrator);
    const double order = experiments::order_parameter(traj);
    const auto relax = experiments::relaxation_time(traj, cfg.relax_tol);

    if (cfg.emit_trajectory) {
        std::ostringstream csv;
        io::write_trajectory_csv(csv, traj, cfg.full || args.full);
        write_text(out / "trajectory.csv", csv.str());
    }
    if (cfg.emit_events) write_text(out / "events.json", io::events_to_json(traj.events) + "\n");

    json summary;
    summary["terminal"] = to_string(traj.terminal);
    summary["order_param"] = order;
    summary["relax_time"] = relax.value;
    summary["relax_censored"] = relax.censored;
    summary["n_events"] = traj.events.size();
    write_text(out / "summary.json", summary.dump(2) + "\n");
    spdlog::info("simulate: terminal={} order_param={}", to_string(traj.terminal), order);
    return traj.terminal == Terminal::Diverged ? kExitDiverged : kExitOk;
}

struct MeanfieldArgs {
    double alpha = 0.0;
    double beta = 0.0;
    double tau_a = 1.0;
    double tau_b = 1.0;
    double f0 = 0.0;
    std::optional<double> ap_over_e;
};

int cmd_meanfield(const MeanfieldArgs& args) {
    const ModelParams params{args.alpha, args.beta, args.tau_a, args.tau_b};
    if (!(std::isfinite(args.f0) && args.f0 > -1.0)) throw DomainError("f0: must be > -1");
    const double ap_over_e = args.ap_over_e.value_or(1.0 + args.f0);
    const auto reduced = meanfield::reduce(params, ap_over_e);
    const auto label = meanfield::classify(params, ap_over_e);

    json report;
    report["tau"] = reduced.tau;
    report["omega_sq"] = reduced.omega_sq;
    report["ap_over_e"] = ap_over_e;
    report["lambda_plus"] = complex_json(label.roots.plus);
    report["lambda_minus"] = complex_json(label.roots.minus);
    report["label"] = meanfield::to_string(label.regime);
    report["marginal"] = label.marginal;
    report["gamma"] = params.gamma();
    try {
        report["gamma_star"] = meanfield::transition_gamma(args.f0, args.beta);
    } catch (const meanfield::Degenerate&) {
        report["gamma_star"] = nullptr;
    }
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

struct SweepArgs {
    std::string config;
    std::string out = ".";
    unsigned jobs = 1;
};

int cmd_sweep(const SweepArgs& args) {
    const fs::path config_path = args.config;
    const auto spec = config::parse_sweep_config(config::read_file(config_path), config_path.parent_path());
    spdlog::info("sweep: {} x {} cells, {} repeat(s), jobs={}", spec.alpha_grid.size(), spec.beta_grid.size(),
                 spec.repeats, args.jobs);
    const auto map = experiments::run_sweep(spec, args.jobs);

    int failed = 0;
    for (const auto& cell : map.cells) {
        if (cell.label != experiments::CellLabel::Failed) continue;
        ++failed;
        spdlog::error("sweep: cell alpha={} beta={} failed: {}", cell.alpha, cell.beta, cell.failure);
    }

    const fs::path out = args.out;
    fs::create_directories(out);
    std::ostringstream map_csv, boundary_csv;
    io::write_phase_map_csv(map_csv, map);
    io::write_boundary_csv(boundary_csv, experiments::extract_boundary(map));
    write_text(out / "phase_map.csv", map_csv.str());
    write_text(out / "boundary.csv", boundary_csv.str());
    spdlog::info("sweep: wrote {} cells, {} failed", map.cells.size(), failed);
    return failed == 0 ? kExitOk : kExitError;
}

int cmd_check(const std::string& config_path_str) {
    const fs::path config_path = config_path_str;
    const auto cfg = config::parse_run_config(config::read_file(config_path), config_path.parent_path());
    const MarketNetwork net = realize(cfg.network);
    const auto report = halve_step_check(apply_shock(net, cfg.shock, cfg.model), cfg.model, cfg.integrator);
    json out;
    out["max_rel_deviation"] = report.max_rel_deviation;
    out["compared_until"] = report.compared_until;
    out["samples_compared"] = report.samples_compared;
    out["substeps"] = cfg.integrator.substeps;
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    configure_logging();

    CLI::App app{"gipsi: bipartite investor-asset market response simulator"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "shock a network and integrate the response");
    simulate->add_option("--config", sim.config, "run configuration (JSON)")->required();
    simulate->add_option("--out", sim.out, "output directory");
    simulate->add_flag("--full", sim.full, "include holdings, velocities and returns in trajectory.csv");
    simulate->add_option("--save-network", sim.save_network, "also write the realized network to this file");

    MeanfieldArgs mf;
    double ap_over_e = std::nan("");
    auto* meanfield = app.add_subcommand("meanfield", "closed-form report for the 1x1 reduction");
    meanfield->add_option("--alpha", mf.alpha)->required();
    meanfield->add_option("--beta", mf.beta)->required();
    meanfield->add_option("--tau-a", mf.tau_a);
    meanfield->add_option("--tau-b", mf.tau_b);
    meanfield->add_option("--f0", mf.f0, "shock magnitude");
    meanfield->add_option("--ap-over-e", ap_over_e, "override Ap/E (default 1 + f0)");

    SweepArgs sw;
    auto* sweep = app.add_subcommand("sweep", "order parameter and relaxation time over an (alpha, beta) grid");
    sweep->add_option("--config", sw.config, "sweep configuration (JSON)")->required();
    sweep->add_option("--out", sw.out, "output directory");
    sweep->add_option("--jobs", sw.jobs, "worker threads")->check(CLI::PositiveNumber);

    std::string check_config;
    auto* check = app.add_subcommand("check", "compare a run against one with half the step size");
    check->add_option("--config", check_config, "run configuration (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    }

    try {
        if (*simulate) return cmd_simulate(sim);
        if (*meanfield) {
            if (!std::isnan(ap_over_e)) mf.ap_over_e = ap_over_e;
            return cmd_meanfield(mf);
        }
        if (*sweep) return cmd_sweep(sw);
        if (*check) return cmd_check(check_config);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kExitError;
    }
    return kExitError;
}
