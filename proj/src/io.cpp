#include "gipsi/io.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace gipsi::io {

using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string network_to_json(const MarketNetwork& network) {
    json j;
    j["n_investors"] = network.n_investors;
    j["n_assets"] = network.n_assets;
    j["holdings"] = network.holdings.data();
    j["prices"] = network.prices;
    j["equities"] = network.equities;
    return j.dump(2);
}

MarketNetwork network_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DomainError(std::string("network file: ") + e.what());
    }
    auto field = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw DomainError(std::string("network file: missing key ") + key);
        return j.at(key);
    };

    MarketNetwork net;
    try {
        net.n_investors = field("n_investors").get<std::size_t>();
        net.n_assets = field("n_assets").get<std::size_t>();
        const auto flat = field("holdings").get<std::vector<double>>();
        if (flat.size() != net.n_investors * net.n_assets)
            throw DomainError("network file: holdings must have n_investors * n_assets entries");
        net.holdings = Matrix(net.n_investors, net.n_assets);
        net.holdings.data() = flat;
        net.prices = field("prices").get<std::vector<double>>();
        net.equities = field("equities").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw DomainError(std::string("network file: ") + e.what());
    }
    net.validate();
    return net;
}

void save_network(const MarketNetwork& network, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << network_to_json(network) << '\n';
}

MarketNetwork load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return network_from_json(buf.str());
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, bool full) {
    if (trajectory.samples.empty()) return;
    const MarketState& first = trajectory.initial();
    const std::size_t n = first.n_investors();
    const std::size_t m = first.n_assets();

    out << 't';
    for (std::size_t mu = 0; mu < m; ++mu) out << ",p_" << mu;
    for (std::size_t i = 0; i < n; ++i) out << ",E_" << i;
    if (full) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t mu = 0; mu < m; ++mu) out << ",A_" << i << '_' << mu;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t mu = 0; mu < m; ++mu) out << ",V_" << i << '_' << mu;
        for (std::size_t mu = 0; mu < m; ++mu) out << ",u_" << mu;
    }
    out << '\n';

    for (const MarketState& s : trajectory.samples) {
        out << format_double(s.t);
        for (double p : s.prices) out << ',' << format_double(p);
        for (double e : s.equities) out << ',' << format_double(e);
        if (full) {
            for (double a : s.holdings.data()) out << ',' << format_double(a);
            for (double v : s.holdings_velocity.data()) out << ',' << format_double(v);
            for (double u : s.returns) out << ',' << format_double(u);
        }
        out << '\n';
    }
}

std::string events_to_json(const std::vector<Event>& events) {
    json list = json::array();
    for (const Event& e : events) {
        json item;
        item["t"] = e.t;
        item["kind"] = to_string(e.kind);
        item["index"] = e.index ? json(*e.index) : json(nullptr);
        list.push_back(item);
    }
    return list.dump(2);
}

void write_phase_map_csv(std::ostream& out, const experiments::PhaseMap& map) {
    out << "alpha,beta,order_param,relax_time,censored,label\n";
    for (const auto& c : map.cells) {
        out << format_double(c.alpha) << ',' << format_double(c.beta) << ',' << format_double(c.order_param) << ','
            << format_double(c.relax_time.value) << ',' << (c.relax_time.censored ? "true" : "false") << ','
            << experiments::to_string(c.label) << '\n';
    }
}

void write_boundary_csv(std::ostream& out, const std::vector<experiments::BoundaryPoint>& locus) {
    out << "alpha,beta_star\n";
    for (const auto& b : locus) out << format_double(b.alpha) << ',' << format_double(b.beta) << '\n';
}

} // namespace gipsi::io
