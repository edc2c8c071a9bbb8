#pragma once

#include "gipsi/market.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gipsi {

/// Fixed-step integration settings. Output is sampled every dt; each sample takes `substeps` RK4 steps.
struct IntegratorConfig {
    double dt = 0.01;
    int substeps = 1;
    double t_max = 69.0;
    double bankrupt_eps = 1e-9;
    double price_floor_eps = 1e-9;
    double divergence_cap = 1e9;

    double step() const { return dt / substeps; }

    /// Also enforces the stability guard dt / substeps <= min(tau_a, tau_b) / 10.
    void validate(const ModelParams& params) const;
};

enum class NodeKind { Investor, Asset };

/// The right-hand side was asked to divide by a vanishing equity or aggregate holding.
class EvaluationAtSingularity : public std::runtime_error {
public:
    EvaluationAtSingularity(NodeKind kind, std::size_t index, double t);

    NodeKind kind() const { return kind_; }
    std::size_t index() const { return index_; }
    double time() const { return time_; }

private:
    NodeKind kind_;
    std::size_t index_;
    double time_;
};

enum class EventKind { Bankruptcy, PriceFloor, Diverged };

struct Event {
    double t = 0.0;
    EventKind kind = EventKind::Diverged;
    std::optional<std::size_t> index; ///< investor or asset; empty for Diverged
    std::string detail;
};

enum class Terminal { ReachedHorizon, Diverged, AllDead };

struct Trajectory {
    std::vector<MarketState> samples;
    std::vector<Event> events;
    Terminal terminal = Terminal::ReachedHorizon;

    const MarketState& initial() const { return samples.front(); }
    const MarketState& final() const { return samples.back(); }
};

std::string to_string(EventKind kind);
std::string to_string(Terminal terminal);

/// Time derivative of every field of a MarketState.
struct StateRate {
    Matrix holdings;          ///< dA/dt, equals the holdings velocity of alive investors
    Matrix holdings_velocity; ///< d2A/dt2
    std::vector<double> prices;
    std::vector<double> returns;
    std::vector<double> equities;
};

/// Response equations assembled as a first-order system.
///
///   dE_i/dt          = sum_mu A_{i mu} u_mu                        (alive investors)
///   tau_b dV_{i mu}/dt = -V_{i mu} + beta (dE_i/dt / E_i) A_{i mu}
///   tau_a du_mu/dt     = -u_mu + alpha (dA_mu/dt / A_mu) p_mu
///
/// with A_mu and dA_mu/dt aggregated over alive investors. Dead investors are frozen.
/// Throws EvaluationAtSingularity for an alive investor with zero equity, or an asset
/// with zero aggregate holdings that still receives trading pressure.
StateRate rhs(const MarketState& state, const ModelParams& params);

/// Classical RK4 with post-substep clamping of bankruptcies, price floors and divergence.
Trajectory integrate(const MarketState& initial, const ModelParams& params, const IntegratorConfig& config);

struct ConvergenceReport {
    double max_rel_deviation = 0.0;
    double compared_until = 0.0;
    std::size_t samples_compared = 0;
};

/// Integrates at `substeps` and `2 * substeps` and compares A, p and E on common output samples,
/// stopping at the earlier Diverged time.
ConvergenceReport halve_step_check(const MarketState& initial, const ModelParams& params,
                                   const IntegratorConfig& config);

} // namespace gipsi
