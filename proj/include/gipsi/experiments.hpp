#pragma once

#include "gipsi/dynamics.hpp"
#include "gipsi/market.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace gipsi::experiments {

/// Sum over assets of p(t_end) / p(0), taken at the last finite sample.
double order_parameter(const Trajectory& trajectory);

struct RelaxationTime {
    double value = 0.0;
    bool censored = false; ///< never settled; value holds the horizon
};

/// Earliest sample time after which every |u| and every |dE/dt| / max(E, tol) stays below tol.
/// Censored at the last sample time when that never happens, and always for Diverged runs.
RelaxationTime relaxation_time(const Trajectory& trajectory, double tol);

enum class CellLabel { Settled, Collapsed, Diverged, Failed };

const char* to_string(CellLabel label);

struct PhaseCell {
    double alpha = 0.0;
    double beta = 0.0;
    double order_param = 0.0;
    RelaxationTime relax_time;
    CellLabel label = CellLabel::Settled;
    std::string failure; ///< set for Failed cells
};

/// Row-major over (alpha, beta): cells[ia * beta_grid.size() + ib].
struct PhaseMap {
    std::vector<double> alpha_grid;
    std::vector<double> beta_grid;
    std::size_t n_assets = 0;
    std::vector<PhaseCell> cells;

    const PhaseCell& at(std::size_t ia, std::size_t ib) const { return cells[ia * beta_grid.size() + ib]; }
};

using NetworkSource = std::variant<SyntheticNetworkSpec, MarketNetwork>;

struct SweepSpec {
    std::vector<double> alpha_grid;
    std::vector<double> beta_grid;
    double tau_a = 1.0;
    double tau_b = 1.0;
    ShockSpec shock;
    NetworkSource network = SyntheticNetworkSpec{};
    IntegratorConfig integrator;
    int repeats = 1;  ///< synthetic networks use seeds seed, seed + 1, ...
    double collapse_threshold = 0.1;
    double relax_tol = 1e-6;

    void validate() const;
};

/// Evaluates every (alpha, beta) cell independently on up to `jobs` threads.
/// The result does not depend on `jobs`.
PhaseMap run_sweep(const SweepSpec& spec, unsigned jobs = 1);

enum class ScanAxis { Beta, Alpha };

struct BoundaryPoint {
    double alpha = 0.0;
    double beta = 0.0;
};

/// For each alpha row (ScanAxis::Beta) or beta column (ScanAxis::Alpha), the linearly interpolated
/// point where the order parameter first crosses half of the line's settled value.
/// The settled value is the order parameter of the first Settled cell on the line.
/// Failed cells are bridged. Lines without a Settled cell or without a crossing are skipped.
std::vector<BoundaryPoint> extract_boundary(const PhaseMap& map, ScanAxis axis = ScanAxis::Beta);

/// Grid helper: start, start + step, ... up to stop inclusive (within half a step).
std::vector<double> linear_grid(double start, double stop, double step);

} // namespace gipsi::experiments
