#include "gipsi/meanfield.hpp"

#include <algorithm>
#include <cmath>

namespace gipsi::meanfield {

ReducedParams reduce(const ModelParams& params, double ap_over_e) {
    params.validate();
    if (!(std::isfinite(ap_over_e) && ap_over_e > 0.0)) throw DomainError("ap_over_e: must be > 0");
    ReducedParams r;
    r.tau = params.tau_a * params.tau_b / (params.tau_a + params.tau_b);
    r.omega_sq = (1.0 - params.gamma() * ap_over_e) / (params.tau_a + params.tau_b);
    r.ap_over_e = ap_over_e;
    return r;
}

Eigenvalues eigenvalues(const ReducedParams& reduced) {
    const double tau = reduced.tau;
    const double disc = 1.0 - 4.0 * tau * reduced.omega_sq;
    Eigenvalues e;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        // (-1 + s) / (2 tau) rewritten to avoid cancellation when omega_sq is small.
        e.plus = -2.0 * reduced.omega_sq / (1.0 + s);
        e.minus = (-1.0 - s) / (2.0 * tau);
    } else {
        const double re = -1.0 / (2.0 * tau);
        const double im = std::sqrt(-disc) / (2.0 * tau);
        e.plus = {re, im};
        e.minus = {re, -im};
    }
    return e;
}

const char* to_string(Regime regime) {
    switch (regime) {
    case Regime::Oscillatory: return "Oscillatory";
    case Regime::StableDecay: return "StableDecay";
    case Regime::Unstable: return "Unstable";
    }
    return "?";
}

PhaseLabel classify(const ModelParams& params, double ap_over_e) {
    const ReducedParams r = reduce(params, ap_over_e);
    const double disc = 1.0 - 4.0 * r.tau * r.omega_sq;
    PhaseLabel label;
    label.roots = eigenvalues(r);
    if (disc < 0.0)
        label.regime = Regime::Oscillatory;
    else if (r.omega_sq < 0.0)
        label.regime = Regime::Unstable;
    else
        label.regime = Regime::StableDecay;
    label.marginal = r.omega_sq == 0.0 || disc == 0.0;
    return label;
}

double transition_gamma(double f0, double beta) {
    if (!(std::isfinite(f0) && f0 > -1.0)) throw DomainError("f0: must be > -1");
    const double denom = 1.0 - beta * f0;
    if (denom == 0.0) throw Degenerate("transition_gamma: 1 - beta f0 vanishes");
    return (1.0 + f0) / denom;
}

namespace {

void require_unit_system(const MarketState& s) {
    if (s.n_investors() != 1 || s.n_assets() != 1)
        throw DomainError("reduced equation: requires a 1 investor x 1 asset trajectory");
}

// tau_b w u / p - (tau_b / alpha) w^2 / p with w = (1 + tau_a d/dt) u.
// alpha = 0 freezes the price, so w vanishes identically and so does the second term.
double quadratic_terms(double u, double du, double p, const ModelParams& params) {
    const double w = u + params.tau_a * du;
    double value = params.tau_b * w * u / p;
    if (params.alpha != 0.0) value -= params.tau_b / params.alpha * w * w / p;
    return value;
}

} // namespace

std::vector<ResidualPoint> reduced_residual(const Trajectory& trajectory, const ModelParams& params) {
    params.validate();
    const auto& samples = trajectory.samples;
    if (samples.size() < 7) throw DomainError("reduced_residual: needs at least 7 samples");
    require_unit_system(samples.front());

    std::vector<ResidualPoint> out;
    out.reserve(samples.size());
    for (std::size_t k = 3; k + 3 < samples.size(); ++k) {
        const MarketState& prev = samples[k - 1];
        const MarketState& cur = samples[k];
        const MarketState& next = samples[k + 1];
        const double p = cur.prices[0];
        const double e = cur.equities[0];
        if (p == 0.0 || e == 0.0) continue;

        const double h = 0.5 * (next.t - prev.t);
        const double u = cur.returns[0];
        const double du = (next.returns[0] - prev.returns[0]) / (2.0 * h);
        const double d2u = (next.returns[0] - 2.0 * u + prev.returns[0]) / (h * h);
        const double ap_over_e = cur.holdings(0, 0) * p / e;

        ResidualPoint pt;
        pt.t = cur.t;
        pt.linear = params.tau_a * params.tau_b * d2u + (params.tau_a + params.tau_b) * du +
                    (1.0 - params.gamma() * ap_over_e) * u;
        pt.nonlinear = quadratic_terms(u, du, p, params);
        pt.residual = pt.linear - pt.nonlinear;
        out.push_back(pt);
    }
    return out;
}

double reduced_nonlinear_at(const MarketState& state, const ModelParams& params) {
    require_unit_system(state);
    const double p = state.prices[0];
    if (p == 0.0) throw DomainError("reduced_nonlinear_at: price is zero");
    const StateRate rate = rhs(state, params);
    return quadratic_terms(state.returns[0], rate.returns[0], p, params);
}

namespace {

double pick(const MarketState& s, Variable variable, std::size_t index) {
    switch (variable) {
    case Variable::Price: return s.prices.at(index);
    case Variable::Equity: return s.equities.at(index);
    case Variable::Holdings: return s.holdings.data().at(index);
    }
    return 0.0;
}

} // namespace

double fit_dominant_exponent(const Trajectory& trajectory, Variable variable, Window window, FitKind kind,
                             std::size_t index) {
    if (trajectory.samples.empty()) throw IllConditioned("fit_dominant_exponent: empty trajectory");
    const double reference = kind == FitKind::Growth ? 0.0 : pick(trajectory.final(), variable, index);

    double sum_t = 0.0, sum_y = 0.0, sum_tt = 0.0, sum_ty = 0.0;
    std::size_t count = 0;
    for (const MarketState& s : trajectory.samples) {
        if (s.t < window.t_lo || s.t > window.t_hi) continue;
        const double signal = std::abs(pick(s, variable, index) - reference);
        if (!std::isfinite(signal)) continue;
        if (signal < 1e-12) throw IllConditioned("fit_dominant_exponent: signal below 1e-12 in window");
        const double y = std::log(signal);
        sum_t += s.t;
        sum_y += y;
        sum_tt += s.t * s.t;
        sum_ty += s.t * y;
        ++count;
    }
    if (count < 10) throw IllConditioned("fit_dominant_exponent: fewer than 10 samples in window");

    const double n = static_cast<double>(count);
    const double mean_t = sum_t / n;
    const double mean_y = sum_y / n;
    const double sxx = sum_tt - n * mean_t * mean_t;
    const double sxy = sum_ty - n * mean_t * mean_y;
    if (sxx <= 0.0) throw IllConditioned("fit_dominant_exponent: window has no time spread");
    return sxy / sxx;
}

ExponentReport check_equal_exponents(const Trajectory& trajectory, Window window, FitKind kind,
                                     double threshold) {
    ExponentReport r;
    r.price = fit_dominant_exponent(trajectory, Variable::Price, window, kind);
    r.equity = fit_dominant_exponent(trajectory, Variable::Equity, window, kind);
    r.holdings = fit_dominant_exponent(trajectory, Variable::Holdings, window, kind);
    const double lo = std::min({r.price, r.equity, r.holdings});
    const double hi = std::max({r.price, r.equity, r.holdings});
    const double scale = std::max({std::abs(r.price), std::abs(r.equity), std::abs(r.holdings)});
    r.spread = scale == 0.0 ? 0.0 : (hi - lo) / scale;
    r.agree = r.spread < threshold;
    return r;
}

} // namespace gipsi::meanfield
