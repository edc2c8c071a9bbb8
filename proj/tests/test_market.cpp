#include "doctest.h"

#include "gipsi/dynamics.hpp"
#include "gipsi/market.hpp"

#include <cmath>

using namespace gipsi;

TEST_CASE("unit network from a single forced-weight edge") {
    SyntheticNetworkSpec spec;
    spec.unit_weights = true;
    for (std::uint64_t seed : {0u, 5u, 99u}) {
        spec.seed = seed;
        const auto net = build_synthetic_network(spec);
        CHECK(net == mean_field_network());
    }
}

TEST_CASE("synthetic networks are deterministic per seed") {
    SyntheticNetworkSpec spec{2, 2, 1.0, 1.0, 1.0, 7};
    CHECK(build_synthetic_network(spec) == build_synthetic_network(spec));

    spec = {10, 5, 0.4, 1.0, 2.0, 1};
    const auto a = build_synthetic_network(spec);
    spec.seed = 2;
    CHECK_FALSE(build_synthetic_network(spec) == a);
}

TEST_CASE("equities follow the leverage rule exactly") {
    const auto net = build_synthetic_network({10, 5, 0.4, 1.0, 2.0, 1});
    for (std::size_t i = 0; i < net.n_investors; ++i) {
        double wealth = 0.0;
        for (std::size_t mu = 0; mu < net.n_assets; ++mu) wealth += net.holdings(i, mu) * net.prices[mu];
        CHECK(net.equities[i] == wealth / 2.0);
    }
}

TEST_CASE("no isolated nodes and non-negative weights") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto net = build_synthetic_network({12, 7, 0.15, 1.5, 3.0, seed});
        CHECK_NOTHROW(net.validate());
        for (double a : net.holdings.data()) CHECK(a >= 0.0);
        for (double p : net.prices) CHECK(p == 1.0);
    }
}

TEST_CASE("weight scale rescales holdings and equities but not prices") {
    auto net1 = build_synthetic_network({6, 4, 0.6, 1.0, 1.5, 3});
    auto net2 = build_synthetic_network({6, 4, 0.6, 2.0, 1.5, 3});
    for (std::size_t k = 0; k < net1.holdings.data().size(); ++k)
        CHECK(net2.holdings.data()[k] == 2.0 * net1.holdings.data()[k]);
    for (std::size_t i = 0; i < net1.n_investors; ++i) CHECK(net2.equities[i] == 2.0 * net1.equities[i]);
    CHECK(net1.prices == net2.prices);
}

TEST_CASE("invalid synthetic specs") {
    CHECK_THROWS_AS(build_synthetic_network({0, 1, 1.0, 1.0, 1.0, 0}), DomainError);
    CHECK_THROWS_AS(build_synthetic_network({1, 0, 1.0, 1.0, 1.0, 0}), DomainError);
    CHECK_THROWS_AS(build_synthetic_network({2, 2, 0.0, 1.0, 1.0, 0}), DomainError);
    CHECK_THROWS_AS(build_synthetic_network({2, 2, 1.5, 1.0, 1.0, 0}), DomainError);
    CHECK_THROWS_AS(build_synthetic_network({2, 2, 1.0, -1.0, 1.0, 0}), DomainError);
    CHECK_THROWS_AS(build_synthetic_network({2, 2, 1.0, 1.0, 0.0, 0}), DomainError);
}

TEST_CASE("model parameter validation names the field") {
    ModelParams p{0.5, 0.5, 1.0, 0.0};
    try {
        p.validate();
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("tau_b") != std::string::npos);
    }
    p = {std::nan(""), 0.5, 1.0, 1.0};
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = {0.5, 0.5, -1.0, 1.0};
    CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("shock on the unit network") {
    const ModelParams params{0.5, 1.0, 1.0, 1.0};
    const auto s = apply_shock(mean_field_network(), {0, 0.1}, params);
    CHECK(s.equities[0] == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(s.holdings_velocity(0, 0) == doctest::Approx(0.0953102).epsilon(1e-7));
    CHECK(s.returns[0] == 0.0);
    CHECK(s.t == 0.0);

    const auto down = apply_shock(mean_field_network(), {0, -0.5}, {0.5, 2.0, 1.0, 1.0});
    CHECK(down.equities[0] == 0.5);
    CHECK(down.holdings_velocity(0, 0) == doctest::Approx(-1.3862944).epsilon(1e-7));
}

TEST_CASE("shock touches only the shocked investor") {
    const auto net = build_synthetic_network({5, 3, 0.7, 1.0, 2.0, 11});
    const ModelParams params{1.0, 0.8, 1.0, 2.0};
    const auto s = apply_shock(net, {2, -0.3}, params);
    for (std::size_t i = 0; i < net.n_investors; ++i) {
        CHECK(s.alive[i]);
        if (i == 2) {
            CHECK(s.equities[i] == net.equities[i] * 0.7);
            for (std::size_t mu = 0; mu < net.n_assets; ++mu)
                CHECK(s.holdings_velocity(i, mu) ==
                      doctest::Approx(0.8 / 2.0 * net.holdings(i, mu) * std::log(0.7)).epsilon(1e-14));
        } else {
            CHECK(s.equities[i] == net.equities[i]);
            for (std::size_t mu = 0; mu < net.n_assets; ++mu) CHECK(s.holdings_velocity(i, mu) == 0.0);
        }
    }
    CHECK(s.holdings == net.holdings);
    CHECK(s.prices == net.prices);
    for (double u : s.returns) CHECK(u == 0.0);
}

TEST_CASE("zero shock equals the state at rest") {
    const auto net = build_synthetic_network({4, 4, 0.5, 1.0, 1.0, 4});
    CHECK(apply_shock(net, {1, 0.0}, {1.0, 1.0, 1.0, 1.0}) == state_at_rest(net));
}

TEST_CASE("shock rejects bad inputs") {
    const auto net = mean_field_network();
    CHECK_THROWS_AS(apply_shock(net, {1, 0.1}, {1, 1, 1, 1}), DomainError);
    CHECK_THROWS_AS(apply_shock(net, {0, -1.0}, {1, 1, 1, 1}), DomainError);
    CHECK_THROWS_AS(apply_shock(net, {0, -2.0}, {1, 1, 1, 1}), DomainError);
}

TEST_CASE("equity bookkeeping residual") {
    auto s = state_at_rest(mean_field_network());
    const std::vector<double> none{0.0};
    CHECK(equity_bookkeeping_residual(s, none)[0] == 0.0);

    s.holdings(0, 0) = 2.0;
    s.returns[0] = 0.5;
    s.equity_rate[0] = 1.0;
    CHECK(equity_bookkeeping_residual(s, none)[0] == 0.0);

    const std::vector<double> force{0.25};
    CHECK(equity_bookkeeping_residual(s, force)[0] == doctest::Approx(-0.25));

    s.alive[0] = false;
    s.equity_rate[0] = 7.0;
    CHECK(equity_bookkeeping_residual(s, none)[0] == 0.0);

    CHECK_THROWS_AS(equity_bookkeeping_residual(s, std::vector<double>{}), DomainError);
}

TEST_CASE("engine samples satisfy the bookkeeping identity") {
    const auto net = build_synthetic_network({6, 4, 0.6, 1.0, 2.0, 5});
    const ModelParams params{0.7, 0.9, 1.0, 1.0};
    IntegratorConfig cfg;
    cfg.t_max = 10.0;
    const auto tr = integrate(apply_shock(net, {3, -0.2}, params), params, cfg);
    const std::vector<double> none(net.n_investors, 0.0);
    for (const auto& s : tr.samples)
        for (double r : equity_bookkeeping_residual(s, none)) CHECK(std::abs(r) < 1e-12);
}
