#include "gipsi/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace gipsi {

namespace {

// Flat state vector: [A (n*m) | V (n*m) | p (m) | u (m) | E (n)].
struct Layout {
    std::size_t n;
    std::size_t m;

    std::size_t A() const { return 0; }
    std::size_t V() const { return n * m; }
    std::size_t p() const { return 2 * n * m; }
    std::size_t u() const { return 2 * n * m + m; }
    std::size_t E() const { return 2 * n * m + 2 * m; }
    std::size_t size() const { return 2 * n * m + 2 * m + n; }
};

class RateKernel {
public:
    RateKernel(Layout layout, const ModelParams& params)
        : layout_(layout), params_(params), aggregate_(layout.m), aggregate_rate_(layout.m) {}

    void operator()(std::span<const double> y, const std::vector<bool>& alive, double t, std::span<double> dy) {
        const auto [n, m] = layout_;
        const double* A = y.data() + layout_.A();
        const double* V = y.data() + layout_.V();
        const double* p = y.data() + layout_.p();
        const double* u = y.data() + layout_.u();
        const double* E = y.data() + layout_.E();
        double* dA = dy.data() + layout_.A();
        double* dV = dy.data() + layout_.V();
        double* dp = dy.data() + layout_.p();
        double* du = dy.data() + layout_.u();
        double* dE = dy.data() + layout_.E();

        std::fill(aggregate_.begin(), aggregate_.end(), 0.0);
        std::fill(aggregate_rate_.begin(), aggregate_rate_.end(), 0.0);

        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t row = i * m;
            if (!alive[i]) {
                dE[i] = 0.0;
                std::fill(dA + row, dA + row + m, 0.0);
                std::fill(dV + row, dV + row + m, 0.0);
                continue;
            }
            double trade = 0.0;
            for (std::size_t mu = 0; mu < m; ++mu) trade += A[row + mu] * u[mu];
            dE[i] = trade;
            if (E[i] == 0.0) throw EvaluationAtSingularity(NodeKind::Investor, i, t);
            const double relative = trade / E[i];
            for (std::size_t mu = 0; mu < m; ++mu) {
                dA[row + mu] = V[row + mu];
                dV[row + mu] = (-V[row + mu] + params_.beta * relative * A[row + mu]) / params_.tau_b;
                aggregate_[mu] += A[row + mu];
                aggregate_rate_[mu] += V[row + mu];
            }
        }

        for (std::size_t mu = 0; mu < m; ++mu) {
            double pressure = 0.0;
            if (aggregate_[mu] != 0.0) {
                pressure = aggregate_rate_[mu] / aggregate_[mu];
            } else if (aggregate_rate_[mu] != 0.0 && p[mu] != 0.0 && params_.alpha != 0.0) {
                throw EvaluationAtSingularity(NodeKind::Asset, mu, t);
            }
            dp[mu] = u[mu];
            du[mu] = (-u[mu] + params_.alpha * pressure * p[mu]) / params_.tau_a;
        }
    }

private:
    Layout layout_;
    ModelParams params_;
    std::vector<double> aggregate_;
    std::vector<double> aggregate_rate_;
};

std::vector<double> pack(const MarketState& s, const Layout& layout) {
    std::vector<double> y(layout.size());
    std::copy(s.holdings.data().begin(), s.holdings.data().end(), y.begin() + layout.A());
    std::copy(s.holdings_velocity.data().begin(), s.holdings_velocity.data().end(), y.begin() + layout.V());
    std::copy(s.prices.begin(), s.prices.end(), y.begin() + layout.p());
    std::copy(s.returns.begin(), s.returns.end(), y.begin() + layout.u());
    std::copy(s.equities.begin(), s.equities.end(), y.begin() + layout.E());
    return y;
}

MarketState unpack(std::span<const double> y, std::span<const double> rate, const std::vector<bool>& alive,
                   const Layout& layout, double t) {
    const auto [n, m] = layout;
    MarketState s;
    s.t = t;
    s.holdings = Matrix(n, m);
    s.holdings_velocity = Matrix(n, m);
    std::copy_n(y.begin() + layout.A(), n * m, s.holdings.data().begin());
    std::copy_n(y.begin() + layout.V(), n * m, s.holdings_velocity.data().begin());
    s.prices.assign(y.begin() + layout.p(), y.begin() + layout.p() + m);
    s.returns.assign(y.begin() + layout.u(), y.begin() + layout.u() + m);
    s.equities.assign(y.begin() + layout.E(), y.begin() + layout.E() + n);
    s.equity_rate.assign(rate.begin() + layout.E(), rate.begin() + layout.E() + n);
    s.alive = alive;
    return s;
}

class Stepper {
public:
    Stepper(const MarketState& initial, const ModelParams& params, const IntegratorConfig& config)
        : layout_{initial.n_investors(), initial.n_assets()},
          config_(config),
          kernel_(layout_, params),
          y_(pack(initial, layout_)),
          alive_(initial.alive),
          floored_(layout_.m, false),
          k1_(layout_.size()),
          k2_(layout_.size()),
          k3_(layout_.size()),
          k4_(layout_.size()),
          tmp_(layout_.size()) {}

    // Clamps absorbing boundaries; returns false once the divergence cap is crossed.
    bool settle(double t, std::vector<Event>& events) {
        const auto [n, m] = layout_;
        double* A = y_.data() + layout_.A();
        double* V = y_.data() + layout_.V();
        double* p = y_.data() + layout_.p();
        double* u = y_.data() + layout_.u();
        double* E = y_.data() + layout_.E();

        for (std::size_t i = 0; i < n; ++i) {
            if (!alive_[i]) continue;
            for (std::size_t mu = 0; mu < m; ++mu) {
                const std::size_t k = i * m + mu;
                if (A[k] < 0.0) {
                    A[k] = 0.0;
                    V[k] = std::max(V[k], 0.0);
                }
            }
            if (E[i] <= config_.bankrupt_eps) {
                E[i] = 0.0;
                alive_[i] = false;
                std::fill(V + i * m, V + (i + 1) * m, 0.0);
                events.push_back({t, EventKind::Bankruptcy, i, "equity reached zero"});
            }
        }
        for (std::size_t mu = 0; mu < m; ++mu) {
            if (floored_[mu]) continue;
            if (p[mu] <= config_.price_floor_eps) {
                p[mu] = 0.0;
                u[mu] = 0.0;
                floored_[mu] = true;
                events.push_back({t, EventKind::PriceFloor, mu, "price absorbed at zero"});
            }
        }
        for (double x : y_) {
            if (!std::isfinite(x) || std::abs(x) > config_.divergence_cap) {
                events.push_back({t, EventKind::Diverged, std::nullopt, "state exceeded divergence cap"});
                return false;
            }
        }
        rate_valid_ = false;
        return true;
    }

    void step(double t, double h) {
        const std::size_t size = y_.size();
        if (!rate_valid_) kernel_(y_, alive_, t, k1_);
        for (std::size_t k = 0; k < size; ++k) tmp_[k] = y_[k] + 0.5 * h * k1_[k];
        kernel_(tmp_, alive_, t + 0.5 * h, k2_);
        for (std::size_t k = 0; k < size; ++k) tmp_[k] = y_[k] + 0.5 * h * k2_[k];
        kernel_(tmp_, alive_, t + 0.5 * h, k3_);
        for (std::size_t k = 0; k < size; ++k) tmp_[k] = y_[k] + h * k3_[k];
        kernel_(tmp_, alive_, t + h, k4_);
        for (std::size_t k = 0; k < size; ++k)
            y_[k] += h / 6.0 * (k1_[k] + 2.0 * k2_[k] + 2.0 * k3_[k] + k4_[k]);
        rate_valid_ = false;
    }

    MarketState snapshot(double t) {
        if (!rate_valid_) {
            kernel_(y_, alive_, t, k1_);
            rate_valid_ = true;
        }
        return unpack(y_, k1_, alive_, layout_, t);
    }

    // Snapshot without evaluating the right-hand side (used for states past the cap).
    MarketState raw_snapshot(double t) const {
        std::vector<double> rate(layout_.size(), 0.0);
        auto s = unpack(y_, rate, alive_, layout_, t);
        const std::size_t m = layout_.m;
        for (std::size_t i = 0; i < layout_.n; ++i) {
            if (!alive_[i]) continue;
            double trade = 0.0;
            for (std::size_t mu = 0; mu < m; ++mu) trade += s.holdings(i, mu) * s.returns[mu];
            s.equity_rate[i] = trade;
        }
        return s;
    }

    bool all_dead() const {
        return std::none_of(alive_.begin(), alive_.end(), [](bool a) { return a; });
    }

private:
    Layout layout_;
    IntegratorConfig config_;
    RateKernel kernel_;
    std::vector<double> y_;
    std::vector<bool> alive_;
    std::vector<bool> floored_;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
    bool rate_valid_ = false;
};

std::string node_name(NodeKind kind) { return kind == NodeKind::Investor ? "investor" : "asset"; }

} // namespace

EvaluationAtSingularity::EvaluationAtSingularity(NodeKind kind, std::size_t index, double t)
    : std::runtime_error("evaluation at singularity: " + node_name(kind) + " " + std::to_string(index) +
                         (kind == NodeKind::Investor ? " has zero equity" : " has zero aggregate holdings") +
                         " at t=" + std::to_string(t)),
      kind_(kind),
      index_(index),
      time_(t) {}

std::string to_string(EventKind kind) {
    switch (kind) {
    case EventKind::Bankruptcy: return "Bankruptcy";
    case EventKind::PriceFloor: return "PriceFloor";
    case EventKind::Diverged: return "Diverged";
    }
    return "?";
}

std::string to_string(Terminal terminal) {
    switch (terminal) {
    case Terminal::ReachedHorizon: return "ReachedHorizon";
    case Terminal::Diverged: return "Diverged";
    case Terminal::AllDead: return "AllDead";
    }
    return "?";
}

void IntegratorConfig::validate(const ModelParams& params) const {
    auto require = [](bool ok, const char* message) {
        if (!ok) throw DomainError(message);
    };
    require(std::isfinite(dt) && dt > 0.0, "integrator.dt: must be > 0");
    require(substeps >= 1, "integrator.substeps: must be >= 1");
    require(std::isfinite(t_max) && t_max > 0.0, "integrator.t_max: must be > 0");
    require(bankrupt_eps >= 0.0, "integrator.bankrupt_eps: must be >= 0");
    require(price_floor_eps >= 0.0, "integrator.price_floor_eps: must be >= 0");
    require(divergence_cap > 0.0, "integrator.divergence_cap: must be > 0");
    const double limit = std::min(params.tau_a, params.tau_b) / 10.0;
    require(step() <= limit * (1.0 + 1e-12), "integrator.dt: dt / substeps must be <= min(tau_a, tau_b) / 10");
}

StateRate rhs(const MarketState& state, const ModelParams& params) {
    params.validate();
    state.check_shape();
    const Layout layout{state.n_investors(), state.n_assets()};
    const auto y = pack(state, layout);
    std::vector<double> dy(layout.size());
    RateKernel kernel(layout, params);
    kernel(y, state.alive, state.t, dy);

    const auto [n, m] = layout;
    StateRate r;
    r.holdings = Matrix(n, m);
    r.holdings_velocity = Matrix(n, m);
    std::copy_n(dy.begin() + layout.A(), n * m, r.holdings.data().begin());
    std::copy_n(dy.begin() + layout.V(), n * m, r.holdings_velocity.data().begin());
    r.prices.assign(dy.begin() + layout.p(), dy.begin() + layout.p() + m);
    r.returns.assign(dy.begin() + layout.u(), dy.begin() + layout.u() + m);
    r.equities.assign(dy.begin() + layout.E(), dy.begin() + layout.E() + n);
    return r;
}

Trajectory integrate(const MarketState& initial, const ModelParams& params, const IntegratorConfig& config) {
    params.validate();
    config.validate(params);
    initial.check_shape();

    Trajectory traj;
    Stepper stepper(initial, params, config);
    const double t0 = initial.t;
    if (!stepper.settle(t0, traj.events)) {
        traj.samples.push_back(stepper.raw_snapshot(t0));
        traj.terminal = Terminal::Diverged;
        return traj;
    }
    traj.samples.push_back(stepper.snapshot(t0));

    const auto n_samples = static_cast<long long>(std::llround(config.t_max / config.dt));
    const double h = config.step();
    traj.samples.reserve(static_cast<std::size_t>(n_samples) + 1);
    for (long long k = 1; k <= n_samples; ++k) {
        for (int s = 1; s <= config.substeps; ++s) {
            const double t_start = t0 + static_cast<double>((k - 1) * config.substeps + (s - 1)) * h;
            const double t_end = t0 + static_cast<double>((k - 1) * config.substeps + s) * h;
            stepper.step(t_start, h);
            if (!stepper.settle(t_end, traj.events)) {
                traj.samples.push_back(stepper.raw_snapshot(t_end));
                traj.terminal = Terminal::Diverged;
                return traj;
            }
        }
        traj.samples.push_back(stepper.snapshot(t0 + static_cast<double>(k) * config.dt));
    }
    traj.terminal = stepper.all_dead() ? Terminal::AllDead : Terminal::ReachedHorizon;
    return traj;
}

ConvergenceReport halve_step_check(const MarketState& initial, const ModelParams& params,
                                   const IntegratorConfig& config) {
    IntegratorConfig fine = config;
    fine.substeps = 2 * config.substeps;
    const Trajectory coarse_run = integrate(initial, params, config);
    const Trajectory fine_run = integrate(initial, params, fine);

    // A Diverged run ends with an off-grid sample past the cap; it is not compared.
    auto grid_samples = [](const Trajectory& tr) {
        std::size_t count = tr.samples.size();
        if (tr.terminal == Terminal::Diverged) --count;
        return count;
    };
    const std::size_t common = std::min(grid_samples(coarse_run), grid_samples(fine_run));

    auto rel = [](double a, double b) {
        const double scale = std::max(std::abs(a), std::abs(b));
        return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
    };

    ConvergenceReport report;
    for (std::size_t k = 0; k < common; ++k) {
        const MarketState& a = coarse_run.samples[k];
        const MarketState& b = fine_run.samples[k];
        double worst = 0.0;
        for (std::size_t j = 0; j < a.holdings.data().size(); ++j)
            worst = std::max(worst, rel(a.holdings.data()[j], b.holdings.data()[j]));
        for (std::size_t j = 0; j < a.prices.size(); ++j) worst = std::max(worst, rel(a.prices[j], b.prices[j]));
        for (std::size_t j = 0; j < a.equities.size(); ++j)
            worst = std::max(worst, rel(a.equities[j], b.equities[j]));
        report.max_rel_deviation = std::max(report.max_rel_deviation, worst);
        report.compared_until = a.t;
        ++report.samples_compared;
    }
    return report;
}

} // namespace gipsi
