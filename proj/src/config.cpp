#include "gipsi/config.hpp"

#include "gipsi/io.hpp"
#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace gipsi::config {

using nlohmann::json;

namespace {

// 1-based line of the first occurrence of "key" in the document, 0 if absent.
std::size_t line_of(const std::string& text, const std::string& key) {
    const auto pos = text.find('"' + key + '"');
    if (pos == std::string::npos) return 0;
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

class Reader {
public:
    explicit Reader(const std::string& text) : text_(text) {
        try {
            root_ = json::parse(text);
        } catch (const json::parse_error& e) {
            std::size_t line = 1, col = 1;
            for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
                if (text[k] == '\n') {
                    ++line;
                    col = 1;
                } else {
                    ++col;
                }
            }
            throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) +
                              ": invalid JSON: " + e.what());
        }
        if (!root_.is_object()) throw ConfigError("line 1: configuration must be a JSON object");
    }

    const json& root() const { return root_; }

    [[noreturn]] void fail(const std::string& path, const std::string& message) const {
        const auto leaf = path.substr(path.rfind('.') == std::string::npos ? 0 : path.rfind('.') + 1);
        const std::size_t line = line_of(text_, leaf);
        std::string where = line ? "line " + std::to_string(line) + ": " : std::string{};
        throw ConfigError(where + path + ": " + message);
    }

    const json& child(const json& obj, const std::string& key, const std::string& path) const {
        if (!obj.is_object() || !obj.contains(key)) fail(path, "missing required field");
        return obj.at(key);
    }

    double number(const json& obj, const std::string& key, const std::string& path) const {
        const json& v = child(obj, key, path);
        if (!v.is_number()) fail(path, "must be a number");
        return v.get<double>();
    }

    double number_or(const json& obj, const std::string& key, const std::string& path, double fallback) const {
        return obj.contains(key) ? number(obj, key, path) : fallback;
    }

    std::uint64_t count(const json& obj, const std::string& key, const std::string& path) const {
        const json& v = child(obj, key, path);
        if (!v.is_number_integer() || v.get<long long>() < 0) fail(path, "must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool flag_or(const json& obj, const std::string& key, const std::string& path, bool fallback) const {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_boolean()) fail(path, "must be true or false");
        return v.get<bool>();
    }

private:
    std::string text_;
    json root_;
};

// Re-raises a domain violation as a config error anchored at the named field.
template <typename F>
void checked(const Reader& r, const std::string& prefix, F&& validate) {
    try {
        validate();
    } catch (const DomainError& e) {
        const std::string msg = e.what();
        const auto colon = msg.find(':');
        const std::string field = colon == std::string::npos ? prefix : msg.substr(0, colon);
        const bool qualified = prefix.empty() || field.rfind(prefix, 0) == 0;
        const std::string path = qualified ? field : prefix + "." + field;
        r.fail(path, colon == std::string::npos ? msg : msg.substr(colon + 2));
    }
}

ModelParams read_model(const Reader& r, const json& obj) {
    ModelParams m;
    m.alpha = r.number(obj, "alpha", "model.alpha");
    m.beta = r.number(obj, "beta", "model.beta");
    m.tau_a = r.number(obj, "tau_a", "model.tau_a");
    m.tau_b = r.number(obj, "tau_b", "model.tau_b");
    checked(r, "model", [&] { m.validate(); });
    return m;
}

ShockSpec read_shock(const Reader& r, const json& root) {
    const json& obj = r.child(root, "shock", "shock");
    ShockSpec s;
    s.investor = static_cast<std::size_t>(r.count(obj, "investor", "shock.investor"));
    s.magnitude = r.number(obj, "magnitude", "shock.magnitude");
    if (!(s.magnitude > -1.0)) r.fail("shock.magnitude", "must be > -1");
    return s;
}

IntegratorConfig read_integrator(const Reader& r, const json& root) {
    IntegratorConfig c;
    if (!root.contains("integrator")) return c;
    const json& obj = root.at("integrator");
    c.dt = r.number_or(obj, "dt", "integrator.dt", c.dt);
    if (obj.contains("substeps")) c.substeps = static_cast<int>(r.count(obj, "substeps", "integrator.substeps"));
    c.t_max = r.number_or(obj, "t_max", "integrator.t_max", c.t_max);
    c.bankrupt_eps = r.number_or(obj, "bankrupt_eps", "integrator.bankrupt_eps", c.bankrupt_eps);
    c.price_floor_eps = r.number_or(obj, "price_floor_eps", "integrator.price_floor_eps", c.price_floor_eps);
    c.divergence_cap = r.number_or(obj, "divergence_cap", "integrator.divergence_cap", c.divergence_cap);
    return c;
}

experiments::NetworkSource read_network(const Reader& r, const json& root, const std::filesystem::path& base) {
    const json& obj = r.child(root, "network", "network");
    if (obj.is_string() && obj.get<std::string>() == "mean_field") return mean_field_network();
    if (obj.is_object() && obj.contains("file")) {
        if (!obj.at("file").is_string()) r.fail("network.file", "must be a path string");
        std::filesystem::path path = obj.at("file").get<std::string>();
        if (path.is_relative()) path = base / path;
        if (!std::filesystem::exists(path)) r.fail("network.file", "no such file: " + path.string());
        try {
            return io::load_network(path);
        } catch (const std::exception& e) {
            r.fail("network.file", e.what());
        }
    }
    if (obj.is_object() && obj.contains("synthetic")) {
        const json& s = obj.at("synthetic");
        SyntheticNetworkSpec spec;
        spec.n_investors = static_cast<std::size_t>(r.count(s, "n_investors", "network.synthetic.n_investors"));
        spec.n_assets = static_cast<std::size_t>(r.count(s, "n_assets", "network.synthetic.n_assets"));
        spec.density = r.number(s, "density", "network.synthetic.density");
        spec.weight_scale = r.number(s, "weight_scale", "network.synthetic.weight_scale");
        spec.leverage = r.number(s, "leverage", "network.synthetic.leverage");
        spec.seed = r.count(s, "seed", "network.synthetic.seed");
        spec.unit_weights = r.flag_or(s, "unit_weights", "network.synthetic.unit_weights", false);
        checked(r, "network.synthetic", [&] { build_synthetic_network(spec); });
        return spec;
    }
    r.fail("network", "expected \"mean_field\", {\"file\": path} or {\"synthetic\": {...}}");
}

std::vector<double> read_grid(const Reader& r, const json& root, const std::string& key) {
    const json& g = r.child(root, key, key);
    if (g.is_array()) {
        std::vector<double> out;
        for (const json& x : g) {
            if (!x.is_number()) r.fail(key, "entries must be numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }
    if (g.is_object()) {
        const double start = r.number(g, "start", key + ".start");
        const double stop = r.number(g, "stop", key + ".stop");
        const double step = r.number(g, "step", key + ".step");
        if (!(step > 0.0)) r.fail(key + ".step", "must be > 0");
        if (!(stop >= start)) r.fail(key + ".stop", "must be >= start");
        return experiments::linear_grid(start, stop, step);
    }
    r.fail(key, "expected an array or {start, stop, step}");
}

std::size_t investors_of(const experiments::NetworkSource& source) {
    if (const auto* s = std::get_if<SyntheticNetworkSpec>(&source)) return s->n_investors;
    return std::get<MarketNetwork>(source).n_investors;
}

} // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
    const Reader r(text);
    const json& root = r.root();
    RunConfig c;
    c.model = read_model(r, r.child(root, "model", "model"));
    c.network = read_network(r, root, base_dir);
    c.shock = read_shock(r, root);
    if (c.shock.investor >= investors_of(c.network)) r.fail("shock.investor", "index out of range");
    c.integrator = read_integrator(r, root);
    checked(r, "integrator", [&] { c.integrator.validate(c.model); });
    c.relax_tol = r.number_or(root, "relax_tol", "relax_tol", c.relax_tol);
    if (!(c.relax_tol > 0.0)) r.fail("relax_tol", "must be > 0");
    if (root.contains("output")) {
        const json& out = root.at("output");
        c.emit_trajectory = r.flag_or(out, "trajectory", "output.trajectory", c.emit_trajectory);
        c.emit_events = r.flag_or(out, "events", "output.events", c.emit_events);
        c.full = r.flag_or(out, "full", "output.full", c.full);
    }
    return c;
}

experiments::SweepSpec parse_sweep_config(const std::string& text, const std::filesystem::path& base_dir) {
    const Reader r(text);
    const json& root = r.root();
    experiments::SweepSpec s;
    s.alpha_grid = read_grid(r, root, "alpha_grid");
    s.beta_grid = read_grid(r, root, "beta_grid");
    s.tau_a = r.number_or(root, "tau_a", "tau_a", s.tau_a);
    s.tau_b = r.number_or(root, "tau_b", "tau_b", s.tau_b);
    s.shock = read_shock(r, root);
    s.network = read_network(r, root, base_dir);
    if (s.shock.investor >= investors_of(s.network)) r.fail("shock.investor", "index out of range");
    s.integrator = read_integrator(r, root);
    if (root.contains("repeats")) s.repeats = static_cast<int>(r.count(root, "repeats", "repeats"));
    s.collapse_threshold = r.number_or(root, "collapse_threshold", "collapse_threshold", s.collapse_threshold);
    s.relax_tol = r.number_or(root, "relax_tol", "relax_tol", s.relax_tol);
    checked(r, "", [&] { s.validate(); });
    return s;
}

} // namespace gipsi::config
