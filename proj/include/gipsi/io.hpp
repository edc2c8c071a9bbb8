#pragma once

#include "gipsi/dynamics.hpp"
#include "gipsi/experiments.hpp"
#include "gipsi/market.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace gipsi::io {

/// Network file: {n_investors, n_assets, holdings (row-major), prices, equities}.
std::string network_to_json(const MarketNetwork& network);
MarketNetwork network_from_json(const std::string& text);
void save_network(const MarketNetwork& network, const std::filesystem::path& path);
MarketNetwork load_network(const std::filesystem::path& path);

/// Header `t,p_0..p_{M-1},E_0..E_{N-1}`; `full` appends A_i_mu, V_i_mu and u_mu columns.
/// Floats use 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, bool full = false);

/// `[{"t": ..., "kind": "Bankruptcy" | "PriceFloor" | "Diverged", "index": n | null}]`
std::string events_to_json(const std::vector<Event>& events);

/// `alpha,beta,order_param,relax_time,censored,label`
void write_phase_map_csv(std::ostream& out, const experiments::PhaseMap& map);

/// `alpha,beta_star`
void write_boundary_csv(std::ostream& out, const std::vector<experiments::BoundaryPoint>& locus);

/// printf-style %.17g
std::string format_double(double x);

} // namespace gipsi::io
