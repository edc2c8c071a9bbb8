#include "gipsi/market.hpp"

#include <cmath>
#include <random>

namespace gipsi {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw DomainError(message);
}

// Uniform double in [0, 1) from the top 53 bits, stable across standard libraries.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
}

} // namespace

void ModelParams::validate() const {
    require(std::isfinite(alpha), "alpha: must be finite");
    require(std::isfinite(beta), "beta: must be finite");
    require(std::isfinite(tau_a) && tau_a > 0.0, "tau_a: must be > 0");
    require(std::isfinite(tau_b) && tau_b > 0.0, "tau_b: must be > 0");
}

void MarketNetwork::validate() const {
    require(n_investors >= 1, "n_investors: must be >= 1");
    require(n_assets >= 1, "n_assets: must be >= 1");
    require(holdings.rows() == n_investors && holdings.cols() == n_assets,
            "holdings: shape must be n_investors x n_assets");
    require(prices.size() == n_assets, "prices: length must equal n_assets");
    require(equities.size() == n_investors, "equities: length must equal n_investors");

    auto nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
    for (double a : holdings.data()) require(nonneg(a), "holdings: entries must be finite and >= 0");
    for (double p : prices) require(nonneg(p), "prices: entries must be finite and >= 0");
    for (double e : equities) require(nonneg(e), "equities: entries must be finite and >= 0");

    for (std::size_t i = 0; i < n_investors; ++i) {
        bool any = false;
        for (double a : holdings.row(i)) any = any || a > 0.0;
        require(any, "holdings: investor " + std::to_string(i) + " has no holdings");
    }
    for (std::size_t mu = 0; mu < n_assets; ++mu) {
        bool any = false;
        for (std::size_t i = 0; i < n_investors; ++i) any = any || holdings(i, mu) > 0.0;
        require(any, "holdings: asset " + std::to_string(mu) + " has no holders");
    }
}

void MarketState::check_shape() const {
    const std::size_t n = equities.size();
    const std::size_t m = prices.size();
    require(holdings.rows() == n && holdings.cols() == m, "state: holdings shape mismatch");
    require(holdings_velocity.rows() == n && holdings_velocity.cols() == m,
            "state: holdings_velocity shape mismatch");
    require(returns.size() == m, "state: returns length mismatch");
    require(equity_rate.size() == n, "state: equity_rate length mismatch");
    require(alive.size() == n, "state: alive length mismatch");
}

MarketNetwork build_synthetic_network(const SyntheticNetworkSpec& spec) {
    const std::size_t n = spec.n_investors;
    const std::size_t m = spec.n_assets;
    require(n >= 1, "n_investors: must be >= 1");
    require(m >= 1, "n_assets: must be >= 1");
    require(spec.density > 0.0 && spec.density <= 1.0, "density: must be in (0, 1]");
    require(std::isfinite(spec.weight_scale) && spec.weight_scale > 0.0, "weight_scale: must be > 0");
    require(std::isfinite(spec.leverage) && spec.leverage > 0.0, "leverage: must be > 0");
    require(spec.density * static_cast<double>(n) * static_cast<double>(m) >=
                static_cast<double>(std::max(n, m)),
            "density: too sparse to connect every node");

    std::mt19937_64 rng(spec.seed);
    auto weight = [&] {
        const double u = uniform01(rng);
        return spec.unit_weights ? spec.weight_scale : spec.weight_scale * (1.0 - u);
    };

    MarketNetwork net;
    net.n_investors = n;
    net.n_assets = m;
    net.holdings = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t mu = 0; mu < m; ++mu)
            if (uniform01(rng) < spec.density) net.holdings(i, mu) = weight();

    auto investor_isolated = [&](std::size_t i) {
        for (double a : net.holdings.row(i))
            if (a > 0.0) return false;
        return true;
    };
    auto asset_isolated = [&](std::size_t mu) {
        for (std::size_t i = 0; i < n; ++i)
            if (net.holdings(i, mu) > 0.0) return false;
        return true;
    };

    const std::size_t max_attempts = 4 * (n + m);
    std::size_t attempts = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (investor_isolated(i)) {
            if (++attempts > max_attempts) throw DomainError("build_synthetic_network: repair failed");
            net.holdings(i, uniform_index(rng, m)) = weight();
        }
    }
    for (std::size_t mu = 0; mu < m; ++mu) {
        while (asset_isolated(mu)) {
            if (++attempts > max_attempts) throw DomainError("build_synthetic_network: repair failed");
            net.holdings(uniform_index(rng, n), mu) = weight();
        }
    }

    net.prices.assign(m, 1.0);
    net.equities.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double value = 0.0;
        for (std::size_t mu = 0; mu < m; ++mu) value += net.holdings(i, mu) * net.prices[mu];
        net.equities[i] = value / spec.leverage;
    }
    net.validate();
    return net;
}

MarketNetwork mean_field_network() {
    MarketNetwork net;
    net.n_investors = 1;
    net.n_assets = 1;
    net.holdings = Matrix(1, 1, 1.0);
    net.prices = {1.0};
    net.equities = {1.0};
    return net;
}

MarketState state_at_rest(const MarketNetwork& network) {
    network.validate();
    MarketState s;
    s.t = 0.0;
    s.holdings = network.holdings;
    s.holdings_velocity = Matrix(network.n_investors, network.n_assets);
    s.prices = network.prices;
    s.returns.assign(network.n_assets, 0.0);
    s.equities = network.equities;
    s.equity_rate.assign(network.n_investors, 0.0);
    s.alive.assign(network.n_investors, true);
    return s;
}

MarketState apply_shock(const MarketNetwork& network, const ShockSpec& shock, const ModelParams& params) {
    params.validate();
    require(std::isfinite(shock.magnitude) && shock.magnitude > -1.0, "shock.magnitude: must be > -1");
    require(shock.investor < network.n_investors, "shock.investor: index out of range");

    MarketState s = state_at_rest(network);
    const std::size_t i = shock.investor;
    const double log_jump = std::log1p(shock.magnitude);
    s.equities[i] = network.equities[i] * (1.0 + shock.magnitude);
    for (std::size_t mu = 0; mu < network.n_assets; ++mu)
        s.holdings_velocity(i, mu) = params.beta / params.tau_b * network.holdings(i, mu) * log_jump;
    return s;
}

std::vector<double> equity_bookkeeping_residual(const MarketState& state,
                                                std::span<const double> external_force) {
    state.check_shape();
    const std::size_t n = state.n_investors();
    require(external_force.size() == n, "external_force: length must equal n_investors");

    std::vector<double> residual(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!state.alive[i]) continue;
        double trade = 0.0;
        for (std::size_t mu = 0; mu < state.n_assets(); ++mu) trade += state.holdings(i, mu) * state.returns[mu];
        residual[i] = state.equity_rate[i] - trade - external_force[i];
    }
    return residual;
}

} // namespace gipsi
