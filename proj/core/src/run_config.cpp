#include "mfa/run_config.hpp"

#include <fstream>
#include <sstream>

namespace mfa {

using nlohmann::json;

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig cfg;
    try {
        cfg.doc_ = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!cfg.doc_.is_object()) throw ConfigError("config must be a JSON object");
    if (cfg.doc_.value("schema_version", 0) != 1)
        throw ConfigError("config schema_version must be 1");
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string RunConfig::serialize() const { return doc_.dump(2); }

const json& RunConfig::section(const std::string& name) const {
    auto it = doc_.find(name);
    if (it == doc_.end()) throw ConfigError("missing config section: " + name);
    return *it;
}

namespace {

double get_num(const json& j, const std::string& key, double lo, double hi,
               const double* fallback = nullptr) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError("missing numeric field: " + key);
    }
    if (!j[key].is_number()) throw ConfigError("field must be numeric: " + key);
    const double v = j[key].get<double>();
    if (v < lo || v > hi) throw ConfigError("field out of range: " + key);
    return v;
}

std::vector<double> get_vec(const json& j, const std::string& key) {
    if (!j.contains(key) || !j[key].is_array())
        throw ConfigError("missing array field: " + key);
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) throw ConfigError("array field must be numeric: " + key);
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

BranchSystem RunConfig::make_map() const {
    const json& m = section("map");
    const std::string family = m.value("family", "");
    try {
        if (family == "doubling") return BranchSystem::doubling();
        if (family == "linear_lengths") return BranchSystem::linear_lengths(get_vec(m, "lengths"));
        if (family == "linear_intervals") {
            std::vector<std::pair<double, double>> iv;
            if (!m.contains("intervals") || !m["intervals"].is_array())
                throw ConfigError("linear_intervals needs intervals");
            for (const auto& p : m["intervals"]) {
                if (!p.is_array() || p.size() != 2) throw ConfigError("bad interval entry");
                iv.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
            return BranchSystem::linear_intervals(iv);
        }
        if (family == "manneville_pomeau")
            return BranchSystem::manneville_pomeau(get_num(m, "gamma", 1e-6, 1.0));
        if (family == "double_parabolic")
            return BranchSystem::double_parabolic(get_num(m, "gamma", 1e-6, 1.0));
        if (family == "custom") {
            if (!m.contains("branches") || !m["branches"].is_array() || m["branches"].empty())
                throw ConfigError("custom map needs branches");
            std::vector<PolyBranch> br;
            for (const auto& b : m["branches"]) {
                PolyBranch pb;
                pb.a = get_num(b, "a", 0.0, 1.0);
                pb.b = get_num(b, "b", 0.0, 1.0);
                pb.coeffs = get_vec(b, "coeffs");
                br.push_back(std::move(pb));
            }
            return BranchSystem::custom(br);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid map: ") + e.what());
    }
    throw ConfigError("unknown map family: " + family);
}

PotentialTable RunConfig::make_potential(const BranchSystem& map) const {
    const json& p = section("potential");
    const std::string kind = p.value("kind", "");
    const double one = 1.0;
    const int depth = static_cast<int>(get_num(p, "depth", 1, 12, &one));
    try {
        if (kind == "digit_indicator") {
            const int digit = static_cast<int>(get_num(p, "digit", 1, map.branch_count()));
            if (depth == 1) return PotentialTable::digit_indicator(map.branch_count(), digit);
            AnalyticSource src;
            src.id = AnalyticSource::Id::digit_indicator;
            src.digit = digit;
            return map.discretize_analytic(src, depth);
        }
        if (kind == "coordinate") {
            AnalyticSource src;
            src.id = AnalyticSource::Id::coordinate;
            return map.discretize_analytic(src, depth);
        }
        if (kind == "affine") {
            AnalyticSource src;
            src.id = AnalyticSource::Id::affine;
            src.a = get_vec(p, "a");
            src.b = get_vec(p, "b");
            return map.discretize_analytic(src, depth);
        }
        if (kind == "table") {
            const int dim = static_cast<int>(get_num(p, "dim", 1, 6));
            return PotentialTable(map.branch_count(), dim, depth, get_vec(p, "values"));
        }
        if (kind == "constant") {
            return PotentialTable::constant(map.branch_count(), get_vec(p, "values"), depth);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid potential: ") + e.what());
    }
    throw ConfigError("unknown potential kind: " + kind);
}

SolverOptions RunConfig::make_solver() const {
    SolverOptions opts;
    if (doc_.contains("solver")) {
        const json& s = doc_["solver"];
        const double dk = opts.k, dtol = opts.tol, dcap = opts.q_cap;
        opts.k = static_cast<int>(get_num(s, "k", 1, 16, &dk));
        opts.tol = get_num(s, "tol", 1e-12, 0.1, &dtol);
        opts.q_cap = get_num(s, "q_cap", 1.0, 1e9, &dcap);
        if (s.contains("sweep_run_caps")) {
            opts.sweep_run_caps.clear();
            for (double v : get_vec(s, "sweep_run_caps"))
                opts.sweep_run_caps.push_back(static_cast<int>(v));
            if (opts.sweep_run_caps.empty()) throw ConfigError("sweep_run_caps must be nonempty");
        }
    }
    opts.threads = threads();
    return opts;
}

std::vector<Vec> RunConfig::spectrum_grid_points(int dim) const {
    const json& s = section("spectrum");
    std::vector<Vec> grid;
    auto push_point = [&](const json& a) {
        Vec v;
        if (a.is_number()) {
            v.push_back(a.get<double>());
        } else if (a.is_array()) {
            for (const auto& x : a) v.push_back(x.get<double>());
        } else {
            throw ConfigError("alpha entries must be numbers or arrays");
        }
        if (static_cast<int>(v.size()) != dim)
            throw ConfigError("alpha dimension does not match the potential");
        grid.push_back(std::move(v));
    };
    if (s.contains("alphas"))
        for (const auto& a : s["alphas"]) push_point(a);
    if (s.contains("grid")) {
        const json& g = s["grid"];
        const std::vector<double> from = get_vec(g, "from");
        const std::vector<double> to = get_vec(g, "to");
        const int count = static_cast<int>(get_num(g, "count", 1, 100000));
        if (static_cast<int>(from.size()) != dim || static_cast<int>(to.size()) != dim)
            throw ConfigError("grid endpoints do not match the potential dimension");
        for (int i = 0; i < count; ++i) {
            const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            Vec v(dim);
            for (int j = 0; j < dim; ++j) v[j] = from[j] + t * (to[j] - from[j]);
            grid.push_back(std::move(v));
        }
    }
    if (grid.empty()) throw ConfigError("empty grid");
    return grid;
}

std::uint64_t RunConfig::base_seed() const {
    if (!doc_.contains("seed")) return 1;
    if (!doc_["seed"].is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
    return doc_["seed"].get<std::uint64_t>();
}

int RunConfig::threads() const {
    if (!doc_.contains("threads")) return 1;
    const int t = doc_["threads"].get<int>();
    if (t < 1 || t > 256) throw ConfigError("threads out of range");
    return t;
}

std::string RunConfig::out_dir() const { return doc_.value("out", std::string("out")); }

void RunConfig::validate() const {
    const BranchSystem map = make_map();
    const PotentialTable f = make_potential(map);
    (void)f;
    (void)make_solver();
    (void)base_seed();
    (void)threads();
}

}  // namespace mfa
