#include "gipsi/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace gipsi::experiments {

double order_parameter(const Trajectory& trajectory) {
    if (trajectory.samples.empty()) throw DomainError("order_parameter: empty trajectory");
    const MarketState& first = trajectory.initial();

    auto all_finite = [](const MarketState& s) {
        return std::all_of(s.prices.begin(), s.prices.end(), [](double p) { return std::isfinite(p); });
    };
    auto last = trajectory.samples.rbegin();
    while (last != trajectory.samples.rend() && !all_finite(*last)) ++last;
    if (last == trajectory.samples.rend()) return 0.0;

    double sum = 0.0;
    for (std::size_t mu = 0; mu < first.n_assets(); ++mu)
        if (first.prices[mu] > 0.0) sum += last->prices[mu] / first.prices[mu];
    return sum;
}

RelaxationTime relaxation_time(const Trajectory& trajectory, double tol) {
    if (!(tol > 0.0)) throw DomainError("relaxation_time: tol must be > 0");
    if (trajectory.samples.empty()) throw DomainError("relaxation_time: empty trajectory");
    const double horizon = trajectory.final().t;
    if (trajectory.terminal == Terminal::Diverged) return {horizon, true};

    auto at_rest = [tol](const MarketState& s) {
        for (double u : s.returns)
            if (!(std::abs(u) < tol)) return false;
        for (std::size_t i = 0; i < s.n_investors(); ++i)
            if (!(std::abs(s.equity_rate[i]) / std::max(s.equities[i], tol) < tol)) return false;
        return true;
    };

    const auto& samples = trajectory.samples;
    std::size_t k = samples.size();
    while (k > 0 && at_rest(samples[k - 1])) --k;
    if (k == samples.size()) return {horizon, true};
    return {samples[k].t, false};
}

const char* to_string(CellLabel label) {
    switch (label) {
    case CellLabel::Settled: return "Settled";
    case CellLabel::Collapsed: return "Collapsed";
    case CellLabel::Diverged: return "Diverged";
    case CellLabel::Failed: return "Failed";
    }
    return "?";
}

void SweepSpec::validate() const {
    auto increasing = [](const std::vector<double>& g) {
        for (std::size_t k = 1; k < g.size(); ++k)
            if (!(g[k] > g[k - 1])) return false;
        return std::all_of(g.begin(), g.end(), [](double x) { return std::isfinite(x); });
    };
    if (alpha_grid.empty()) throw DomainError("alpha_grid: must be nonempty");
    if (beta_grid.empty()) throw DomainError("beta_grid: must be nonempty");
    if (!increasing(alpha_grid)) throw DomainError("alpha_grid: must be strictly increasing");
    if (!increasing(beta_grid)) throw DomainError("beta_grid: must be strictly increasing");
    if (repeats < 1) throw DomainError("repeats: must be >= 1");
    if (!(collapse_threshold >= 0.0)) throw DomainError("collapse_threshold: must be >= 0");
    if (!(relax_tol > 0.0)) throw DomainError("relax_tol: must be > 0");
    ModelParams probe{0.0, 0.0, tau_a, tau_b};
    probe.validate();
    integrator.validate(probe);
    if (!(shock.magnitude > -1.0)) throw DomainError("shock.magnitude: must be > -1");
}

namespace {

std::vector<MarketNetwork> realize_networks(const SweepSpec& spec) {
    std::vector<MarketNetwork> nets;
    nets.reserve(static_cast<std::size_t>(spec.repeats));
    for (int r = 0; r < spec.repeats; ++r) {
        if (const auto* syn = std::get_if<SyntheticNetworkSpec>(&spec.network)) {
            SyntheticNetworkSpec s = *syn;
            s.seed += static_cast<std::uint64_t>(r);
            nets.push_back(build_synthetic_network(s));
        } else {
            const auto& net = std::get<MarketNetwork>(spec.network);
            net.validate();
            nets.push_back(net);
        }
    }
    return nets;
}

PhaseCell evaluate_cell(const SweepSpec& spec, const std::vector<MarketNetwork>& nets, double alpha, double beta) {
    PhaseCell cell;
    cell.alpha = alpha;
    cell.beta = beta;
    const ModelParams params{alpha, beta, spec.tau_a, spec.tau_b};

    double order_sum = 0.0;
    double relax_sum = 0.0;
    int relax_count = 0;
    bool any_diverged = false;
    double horizon = spec.integrator.t_max;
    try {
        for (const MarketNetwork& net : nets) {
            const Trajectory traj = integrate(apply_shock(net, spec.shock, params), params, spec.integrator);
            order_sum += order_parameter(traj);
            const RelaxationTime rt = relaxation_time(traj, spec.relax_tol);
            if (!rt.censored) {
                relax_sum += rt.value;
                ++relax_count;
            }
            any_diverged = any_diverged || traj.terminal == Terminal::Diverged;
        }
    } catch (const std::exception& e) {
        cell.label = CellLabel::Failed;
        cell.failure = e.what();
        cell.relax_time = {horizon, true};
        return cell;
    }

    const double n_assets = static_cast<double>(nets.front().n_assets);
    cell.order_param = order_sum / static_cast<double>(nets.size());
    cell.relax_time = relax_count > 0 ? RelaxationTime{relax_sum / relax_count, false} : RelaxationTime{horizon, true};
    if (cell.order_param < spec.collapse_threshold * n_assets)
        cell.label = CellLabel::Collapsed;
    else if (any_diverged)
        cell.label = CellLabel::Diverged;
    else
        cell.label = CellLabel::Settled;
    return cell;
}

} // namespace

PhaseMap run_sweep(const SweepSpec& spec, unsigned jobs) {
    spec.validate();
    const std::vector<MarketNetwork> nets = realize_networks(spec);
    if (spec.shock.investor >= nets.front().n_investors) throw DomainError("shock.investor: index out of range");

    PhaseMap map;
    map.alpha_grid = spec.alpha_grid;
    map.beta_grid = spec.beta_grid;
    map.n_assets = nets.front().n_assets;
    const std::size_t nb = spec.beta_grid.size();
    const std::size_t total = spec.alpha_grid.size() * nb;
    map.cells.resize(total);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < total; k = next++)
            map.cells[k] = evaluate_cell(spec, nets, spec.alpha_grid[k / nb], spec.beta_grid[k % nb]);
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(total)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    return map;
}

std::vector<BoundaryPoint> extract_boundary(const PhaseMap& map, ScanAxis axis) {
    const bool along_beta = axis == ScanAxis::Beta;
    const std::size_t lines = along_beta ? map.alpha_grid.size() : map.beta_grid.size();
    const std::size_t length = along_beta ? map.beta_grid.size() : map.alpha_grid.size();
    const std::vector<double>& coord = along_beta ? map.beta_grid : map.alpha_grid;

    std::vector<BoundaryPoint> locus;
    for (std::size_t line = 0; line < lines; ++line) {
        auto cell = [&](std::size_t j) -> const PhaseCell& {
            return along_beta ? map.at(line, j) : map.at(j, line);
        };

        std::size_t start = 0;
        while (start < length && cell(start).label != CellLabel::Settled) ++start;
        if (start == length) continue;
        const double threshold = 0.5 * cell(start).order_param;

        // Failed cells are bridged: the crossing is interpolated between their valid neighbours.
        std::size_t prev = start;
        for (std::size_t j = start + 1; j < length; ++j) {
            const PhaseCell& b = cell(j);
            if (b.label == CellLabel::Failed) continue;
            const PhaseCell& a = cell(prev);
            const bool crosses = (a.order_param >= threshold) != (b.order_param >= threshold);
            if (crosses) {
                const double frac = (threshold - a.order_param) / (b.order_param - a.order_param);
                const double x = coord[prev] + frac * (coord[j] - coord[prev]);
                if (along_beta)
                    locus.push_back({map.alpha_grid[line], x});
                else
                    locus.push_back({x, map.beta_grid[line]});
                break;
            }
            prev = j;
        }
    }
    return locus;
}

std::vector<double> linear_grid(double start, double stop, double step) {
    if (!(step > 0.0) || !(stop >= start)) throw DomainError("linear_grid: need step > 0 and stop >= start");
    std::vector<double> grid;
    const auto count = static_cast<long long>(std::floor((stop - start) / step + 0.5));
    for (long long k = 0; k <= count; ++k) grid.push_back(start + static_cast<double>(k) * step);
    return grid;
}

} // namespace gipsi::experiments
