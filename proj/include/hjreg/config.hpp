#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "hamiltonian.hpp"
#include "solver.hpp"

namespace hjreg {

inline const std::vector<std::string>& model_families() {
    static const std::vector<std::string> f{"power-norm",         "power-norm-drift", "degenerate-drift",
                                            "scalar-coefficient", "exponential",      "log-growth"};
    return f;
}

inline const std::vector<std::string>& hypothesis_names() {
    static const std::vector<std::string> h{"H0", "H1", "H2", "H3"};
    return h;
}

inline const std::vector<std::string>& estimate_names() {
    static const std::vector<std::string> e{"theorem_main", "ut_bound", "corollary_capped", "corollary_decay",
                                            "gradient_bound"};
    return e;
}

struct ModelConfig {
    std::string family = "power-norm";
    int dim = 1;
    double m = 2.0;
    ScalarField alpha = ScalarField::constant(1.0);
    Vec diag = Vec(1.0, 1.0);
    ScalarField f = ScalarField::constant(1.0);
    std::optional<ScalarField> a;
    std::optional<VectorField> b;
    std::optional<VectorField> c;
    bool coercive = true;
    std::optional<double> c0, c1, c2, kappa, gamma;
};

struct GridConfig {
    int N = 1;
    int n = 200;
    double L = 1.0;
};

/// Periodic initial data on [0, L)^N.
///   distance: offset + amplitude * (periodic distance to the origin)
///   cosine:   offset + amplitude * (1 - cos(2 pi x0 / L))
///   constant: offset
struct InitialConfig {
    std::string kind = "distance";
    double amplitude = 1.0;
    double offset = 0.0;
};

struct TimeConfig {
    double t_end = 1.0;
    double cfl = 0.9;
    Scheme scheme = Scheme::lax_friedrichs;
    double theta_safety = 1.2;
};

struct ChecksConfig {
    std::vector<std::string> hypotheses = hypothesis_names();
    bool g_lemma = true;
    bool integrability = true;
    std::vector<std::string> estimates = estimate_names();
    int samples = 10000;
    std::uint64_t seed = 0;
    double rel_tol = 1e-8;
    double C_tol = 10.0;
    double s_min_steps = 10.0;
    double eta_scale = 1.0;
    SampleBox box{};
    std::vector<double> radii{1, 2, 4, 8, 16, 32, 64};
    double divergence_threshold = 100.0;
    /// "analytic" uses the family's phi and falls back to "empirical".
    std::string phi = "analytic";
    std::vector<double> phi_levels;
    double gradient_t_lo = 0.1;
    double gradient_t_hi = std::numeric_limits<double>::infinity();
    bool refine = true;
};

struct OutputConfig {
    std::string dir = "out";
    std::vector<std::string> formats{"json", "csv", "trace"};

    bool wants(const std::string& fmt) const {
        return std::find(formats.begin(), formats.end(), fmt) != formats.end();
    }
};

struct ScenarioConfig {
    std::string name = "scenario";
    ModelConfig model;
    GridConfig grid;
    InitialConfig initial;
    TimeConfig time;
    ChecksConfig checks;
    OutputConfig output;
};

namespace detail {

class TomlReader {
public:
    explicit TomlReader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const toml::source_region& where, const std::string& key, const std::string& msg) const {
        throw ConfigError(source_ + ":" + std::to_string(where.begin.line) + ":" + std::to_string(where.begin.column) +
                          ": key '" + key + "': " + msg);
    }
    [[noreturn]] void fail(const toml::node& node, const std::string& key, const std::string& msg) const {
        fail(node.source(), key, msg);
    }

    /// Rejects keys of tbl outside allowed.
    void strict(const toml::table& tbl, const std::string& path, const std::set<std::string>& allowed) const {
        for (auto&& [k, v] : tbl) {
            const std::string key(k.str());
            if (!allowed.count(key)) {
                std::string list;
                for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
                fail(k.source(), join(path, key), "unknown key (allowed: " + list + ")");
            }
        }
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    const toml::table* section(const toml::table& root, const std::string& name) const {
        const auto* node = root.get(name);
        if (!node) return nullptr;
        if (!node->is_table()) fail(*node, name, "expected a section");
        return node->as_table();
    }

    double number(const toml::node& v, const std::string& key) const {
        if (auto d = v.value_exact<double>()) return *d;
        if (auto i = v.value_exact<std::int64_t>()) return static_cast<double>(*i);
        fail(v, key, "expected a number");
    }

    std::int64_t integer(const toml::node& v, const std::string& key) const {
        if (auto i = v.value_exact<std::int64_t>()) return *i;
        fail(v, key, "expected an integer");
    }

    bool boolean(const toml::node& v, const std::string& key) const {
        if (auto b = v.value_exact<bool>()) return *b;
        fail(v, key, "expected true or false");
    }

    std::string string(const toml::node& v, const std::string& key) const {
        if (auto s = v.value_exact<std::string>()) return *s;
        fail(v, key, "expected a string");
    }

    std::string choice(const toml::node& v, const std::string& key, const std::vector<std::string>& options) const {
        const auto s = string(v, key);
        if (std::find(options.begin(), options.end(), s) == options.end()) {
            std::string list;
            for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
            fail(v, key, "'" + s + "' is not one of " + list);
        }
        return s;
    }

    std::vector<double> numbers(const toml::node& v, const std::string& key) const {
        const auto* arr = v.as_array();
        if (!arr) fail(v, key, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(number((*arr)[i], key + "[" + std::to_string(i) + "]"));
        return out;
    }

    std::vector<std::string> choices(const toml::node& v, const std::string& key,
                                     const std::vector<std::string>& options) const {
        const auto* arr = v.as_array();
        if (!arr) fail(v, key, "expected an array of strings");
        std::vector<std::string> out;
        for (std::size_t i = 0; i < arr->size(); ++i)
            out.push_back(choice((*arr)[i], key + "[" + std::to_string(i) + "]", options));
        return out;
    }

    /// A bare number is a constant; otherwise an inline table with a kind.
    ScalarField field(const toml::node& v, const std::string& key) const {
        if (v.is_number()) return ScalarField::constant(number(v, key));
        const auto* t = v.as_table();
        if (!t) fail(v, key, "expected a number or a table with 'kind'");
        const auto* kind_node = t->get("kind");
        if (!kind_node) fail(v, key, "missing 'kind'");
        static const std::map<std::string, std::vector<std::string>> params{
            {"constant", {"value"}},
            {"quadratic", {"coef", "offset", "time_slope"}},
            {"separable", {"coef", "offset", "time_rate"}},
            {"positive_squared", {"coef"}},
            {"quartic", {"coef", "offset"}},
            {"sine", {"offset", "amp", "freq", "time_rate"}},
        };
        std::vector<std::string> kinds;
        for (const auto& [k, _] : params) kinds.push_back(k);
        const auto kind = choice(*kind_node, join(key, "kind"), kinds);
        const auto& names = params.at(kind);
        std::set<std::string> allowed(names.begin(), names.end());
        allowed.insert("kind");
        strict(*t, key, allowed);
        std::array<double, 4> a{};
        for (std::size_t i = 0; i < names.size(); ++i)
            if (const auto* n = t->get(names[i])) a[i] = number(*n, join(key, names[i]));
        if (kind == "constant") return ScalarField::constant(a[0]);
        if (kind == "quadratic") return ScalarField::quadratic(a[0], a[1], a[2]);
        if (kind == "separable") return ScalarField::separable(a[0], a[1], a[2]);
        if (kind == "positive_squared") return ScalarField::positive_squared(a[0]);
        if (kind == "quartic") return ScalarField::quartic(a[0], a[1]);
        return ScalarField::sine(a[0], a[1], a[2], a[3]);
    }

    VectorField vector_field(const toml::node& v, const std::string& key) const {
        const auto* arr = v.as_array();
        if (!arr || arr->empty() || arr->size() > 2) fail(v, key, "expected an array of one or two fields");
        VectorField out = VectorField::constant(0.0, 0.0);
        for (std::size_t i = 0; i < arr->size(); ++i) out.comp[i] = field((*arr)[i], key + "[" + std::to_string(i) + "]");
        return out;
    }

private:
    std::string source_;
};

inline std::set<std::string> model_keys(const std::string& family) {
    std::set<std::string> k{"family", "dim", "thresholds"};
    if (family == "exponential" || family == "log-growth") return k;
    k.insert({"m", "alpha", "diag", "f", "coercive"});
    if (family == "power-norm-drift") k.insert("b");
    if (family == "degenerate-drift") k.insert("c");
    if (family == "scalar-coefficient") k.insert("a");
    return k;
}

inline void read_model(const TomlReader& r, const toml::table& t, ModelConfig& m) {
    if (const auto* fam = t.get("family")) m.family = r.choice(*fam, "model.family", model_families());
    r.strict(t, "model", model_keys(m.family));
    if (m.family == "scalar-coefficient") m.f = ScalarField::constant(0.0);
    for (auto&& [k, v] : t) {
        const std::string key(k.str()), path = "model." + key;
        if (key == "family" || key == "thresholds") continue;
        if (key == "dim") {
            const auto d = r.integer(v, path);
            if (d != 1 && d != 2) r.fail(v, path, "dimension must be 1 or 2");
            m.dim = static_cast<int>(d);
        } else if (key == "m") {
            m.m = r.number(v, path);
        } else if (key == "alpha") {
            m.alpha = r.field(v, path);
        } else if (key == "diag") {
            const auto d = r.numbers(v, path);
            if (d.empty() || d.size() > 2) r.fail(v, path, "expected one or two entries");
            m.diag = Vec(d[0], d.size() > 1 ? d[1] : d[0]);
        } else if (key == "f") {
            m.f = r.field(v, path);
        } else if (key == "a") {
            m.a = r.field(v, path);
        } else if (key == "b") {
            m.b = r.vector_field(v, path);
        } else if (key == "c") {
            m.c = r.vector_field(v, path);
        } else if (key == "coercive") {
            m.coercive = r.boolean(v, path);
        }
    }
    if (m.family == "scalar-coefficient" && !m.a) r.fail(t, "model.a", "scalar-coefficient family needs 'a'");
    if (m.family == "power-norm-drift" && !m.b) r.fail(t, "model.b", "power-norm-drift family needs 'b'");
    if (m.family == "degenerate-drift" && !m.c) r.fail(t, "model.c", "degenerate-drift family needs 'c'");
    if (const auto* th = t.get("thresholds")) {
        const auto* tt = th->as_table();
        if (!tt) r.fail(*th, "model.thresholds", "expected a section");
        r.strict(*tt, "model.thresholds", {"c0", "c1", "c2", "kappa", "gamma"});
        auto opt = [&](const char* name, std::optional<double>& out) {
            if (const auto* n = tt->get(name)) {
                out = r.number(*n, std::string("model.thresholds.") + name);
                if (*out < 0.0) r.fail(*n, std::string("model.thresholds.") + name, "must be nonnegative");
            }
        };
        opt("c0", m.c0);
        opt("c1", m.c1);
        opt("c2", m.c2);
        opt("kappa", m.kappa);
        opt("gamma", m.gamma);
    }
}

}  // namespace detail

/// Parses a scenario from TOML text. Unknown sections and keys are errors;
/// every diagnostic carries source:line:column and the dotted key.
inline ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>") {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        const auto& b = e.source().begin;
        throw ConfigError(source + ":" + std::to_string(b.line) + ":" + std::to_string(b.column) + ": " +
                          std::string(e.description()));
    }
    const detail::TomlReader r(source);
    r.strict(root, "", {"name", "model", "grid", "initial", "time", "checks", "output"});
    ScenarioConfig cfg;
    if (const auto* n = root.get("name")) cfg.name = r.string(*n, "name");

    if (const auto* t = r.section(root, "model")) detail::read_model(r, *t, cfg.model);

    if (const auto* t = r.section(root, "grid")) {
        r.strict(*t, "grid", {"N", "n", "L"});
        if (const auto* v = t->get("N")) {
            const auto d = r.integer(*v, "grid.N");
            if (d != 1 && d != 2) r.fail(*v, "grid.N", "dimension must be 1 or 2");
            cfg.grid.N = static_cast<int>(d);
        }
        if (const auto* v = t->get("n")) {
            const auto n = r.integer(*v, "grid.n");
            if (n < 16) r.fail(*v, "grid.n", "at least 16 nodes per axis");
            cfg.grid.n = static_cast<int>(n);
        }
        if (const auto* v = t->get("L")) {
            cfg.grid.L = r.number(*v, "grid.L");
            if (!(cfg.grid.L > 0.0)) r.fail(*v, "grid.L", "must be positive");
        }
    }
    const auto* dim_node = root["model"]["dim"].node();
    const auto* N_node = root["grid"]["N"].node();
    if (dim_node && N_node && cfg.model.dim != cfg.grid.N)
        r.fail(*N_node, "grid.N", "differs from model.dim = " + std::to_string(cfg.model.dim));
    if (N_node) cfg.model.dim = cfg.grid.N;
    else cfg.grid.N = cfg.model.dim;

    if (const auto* t = r.section(root, "initial")) {
        r.strict(*t, "initial", {"kind", "amplitude", "offset"});
        if (const auto* v = t->get("kind")) cfg.initial.kind = r.choice(*v, "initial.kind", {"distance", "cosine", "constant"});
        if (const auto* v = t->get("amplitude")) cfg.initial.amplitude = r.number(*v, "initial.amplitude");
        if (const auto* v = t->get("offset")) cfg.initial.offset = r.number(*v, "initial.offset");
    }

    if (const auto* t = r.section(root, "time")) {
        r.strict(*t, "time", {"t_end", "cfl", "scheme", "theta_safety"});
        if (const auto* v = t->get("t_end")) {
            cfg.time.t_end = r.number(*v, "time.t_end");
            if (!(cfg.time.t_end > 0.0)) r.fail(*v, "time.t_end", "must be positive");
        }
        if (const auto* v = t->get("cfl")) {
            cfg.time.cfl = r.number(*v, "time.cfl");
            if (!(cfg.time.cfl > 0.0 && cfg.time.cfl <= 1.0)) r.fail(*v, "time.cfl", "must lie in (0, 1]");
        }
        if (const auto* v = t->get("scheme"))
            cfg.time.scheme = parse_scheme(r.choice(*v, "time.scheme", {"lax-friedrichs", "tvd-rk2"}));
        if (const auto* v = t->get("theta_safety")) {
            cfg.time.theta_safety = r.number(*v, "time.theta_safety");
            if (!(cfg.time.theta_safety >= 1.0)) r.fail(*v, "time.theta_safety", "must be at least 1");
        }
    }

    if (const auto* t = r.section(root, "checks")) {
        auto& c = cfg.checks;
        r.strict(*t, "checks",
                 {"hypotheses", "g_lemma", "integrability", "estimates", "samples", "seed", "rel_tol", "C_tol",
                  "s_min_steps", "eta_scale", "box", "radii", "divergence_threshold", "phi", "phi_levels",
                  "gradient_window", "refine"});
        for (auto&& [k, v] : *t) {
            const std::string key(k.str()), path = "checks." + key;
            if (key == "hypotheses") {
                c.hypotheses = r.choices(v, path, hypothesis_names());
            } else if (key == "g_lemma") {
                c.g_lemma = r.boolean(v, path);
            } else if (key == "integrability") {
                c.integrability = r.boolean(v, path);
            } else if (key == "estimates") {
                c.estimates = r.choices(v, path, estimate_names());
            } else if (key == "samples") {
                const auto n = r.integer(v, path);
                if (n < 1) r.fail(v, path, "must be positive");
                c.samples = static_cast<int>(n);
            } else if (key == "seed") {
                const auto s = r.integer(v, path);
                if (s < 0) r.fail(v, path, "must be nonnegative");
                c.seed = static_cast<std::uint64_t>(s);
            } else if (key == "rel_tol") {
                c.rel_tol = r.number(v, path);
            } else if (key == "C_tol") {
                c.C_tol = r.number(v, path);
            } else if (key == "s_min_steps") {
                c.s_min_steps = r.number(v, path);
                if (!(c.s_min_steps >= 1.0)) r.fail(v, path, "must be at least 1");
            } else if (key == "eta_scale") {
                c.eta_scale = r.number(v, path);
            } else if (key == "box") {
                const auto* bt = v.as_table();
                if (!bt) r.fail(v, path, "expected a table");
                r.strict(*bt, path, {"x_lo", "x_hi", "t_lo", "t_hi", "p_max"});
                auto set = [&](const char* name, double& out) {
                    if (const auto* n = bt->get(name)) out = r.number(*n, path + "." + name);
                };
                set("x_lo", c.box.x_lo);
                set("x_hi", c.box.x_hi);
                set("t_lo", c.box.t_lo);
                set("t_hi", c.box.t_hi);
                set("p_max", c.box.p_max);
                if (!(c.box.x_lo < c.box.x_hi && c.box.t_lo <= c.box.t_hi && c.box.p_max > 0.0))
                    r.fail(v, path, "needs x_lo < x_hi, t_lo <= t_hi, p_max > 0");
            } else if (key == "radii") {
                c.radii = r.numbers(v, path);
                for (std::size_t i = 1; i < c.radii.size(); ++i)
                    if (!(c.radii[i] > c.radii[i - 1])) r.fail(v, path, "radii must increase");
            } else if (key == "divergence_threshold") {
                c.divergence_threshold = r.number(v, path);
            } else if (key == "phi") {
                c.phi = r.choice(v, path, {"analytic", "empirical"});
            } else if (key == "phi_levels") {
                c.phi_levels = r.numbers(v, path);
            } else if (key == "gradient_window") {
                const auto w = r.numbers(v, path);
                if (w.size() != 2 || !(w[0] < w[1])) r.fail(v, path, "expected [t_lo, t_hi] with t_lo < t_hi");
                c.gradient_t_lo = w[0];
                c.gradient_t_hi = w[1];
            } else if (key == "refine") {
                c.refine = r.boolean(v, path);
            }
        }
    }

    if (const auto* t = r.section(root, "output")) {
        r.strict(*t, "output", {"dir", "formats"});
        if (const auto* v = t->get("dir")) cfg.output.dir = r.string(*v, "output.dir");
        if (const auto* v = t->get("formats")) cfg.output.formats = r.choices(*v, "output.formats", {"json", "csv", "trace"});
    }
    return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

inline HamiltonianModel build_model(const ModelConfig& m) {
    HamiltonianModel model;
    if (m.family == "exponential") {
        model = make_exponential(m.dim);
    } else if (m.family == "log-growth") {
        model = make_log_growth(m.dim);
    } else {
        PowerNormParams p;
        p.dim = m.dim;
        p.m = m.m;
        p.alpha = m.alpha;
        p.diag = m.diag;
        p.f = m.f;
        p.a = m.a;
        p.b = m.b;
        p.c = m.c;
        p.coercive = m.coercive;
        p.kappa = m.kappa;
        p.gamma = m.gamma;
        p.c1 = m.c1;
        p.c2 = m.c2;
        model = make_power_norm(p);
    }
    if (m.c0) {
        model.c0 = *m.c0;
        if (model.phi) model.phi->c0 = *m.c0;
    }
    if (m.c1) model.c1 = *m.c1;
    if (m.c2) model.c2 = *m.c2;
    if (m.kappa) model.kappa = *m.kappa;
    if (m.gamma) model.gamma = m.gamma;
    return model;
}

inline GridField build_initial(const ScenarioConfig& cfg) {
    const auto& ic = cfg.initial;
    const double L = cfg.grid.L;
    return GridField::from_function(cfg.grid.N, cfg.grid.n, L, [&](const Vec& x) {
        if (ic.kind == "constant") return ic.offset;
        if (ic.kind == "cosine") return ic.offset + ic.amplitude * (1.0 - std::cos(2.0 * std::numbers::pi * x[0] / L));
        double d2 = 0.0;
        for (int i = 0; i < cfg.grid.N; ++i) {
            const double d = std::min(x[i], L - x[i]);
            d2 += d * d;
        }
        return ic.offset + ic.amplitude * std::sqrt(d2);
    });
}

namespace detail {

inline nlohmann::ordered_json field_json(const ScalarField& f) {
    static const char* names[] = {"constant", "quadratic", "separable", "positive_squared", "quartic", "sine"};
    nlohmann::ordered_json j;
    j["kind"] = names[static_cast<int>(f.kind())];
    j["params"] = f.params();
    j["describe"] = f.describe();
    return j;
}

}  // namespace detail

/// The resolved scenario with every default made explicit.
inline nlohmann::ordered_json to_json(const ScenarioConfig& cfg) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["name"] = cfg.name;
    const auto& m = cfg.model;
    ordered_json model;
    model["family"] = m.family;
    model["dim"] = m.dim;
    if (m.family != "exponential" && m.family != "log-growth") {
        model["m"] = m.m;
        model["alpha"] = detail::field_json(m.alpha);
        model["diag"] = {m.diag[0], m.diag[1]};
        model["f"] = detail::field_json(m.f);
        if (m.a) model["a"] = detail::field_json(*m.a);
        if (m.b) model["b"] = {detail::field_json(m.b->comp[0]), detail::field_json(m.b->comp[1])};
        if (m.c) model["c"] = {detail::field_json(m.c->comp[0]), detail::field_json(m.c->comp[1])};
        model["coercive"] = m.coercive;
    }
    ordered_json th = ordered_json::object();
    auto opt = [&](const char* k, const std::optional<double>& v) {
        if (v) th[k] = *v;
    };
    opt("c0", m.c0);
    opt("c1", m.c1);
    opt("c2", m.c2);
    opt("kappa", m.kappa);
    opt("gamma", m.gamma);
    model["thresholds"] = th;
    j["model"] = model;
    j["grid"] = {{"N", cfg.grid.N}, {"n", cfg.grid.n}, {"L", cfg.grid.L}};
    j["initial"] = {{"kind", cfg.initial.kind}, {"amplitude", cfg.initial.amplitude}, {"offset", cfg.initial.offset}};
    j["time"] = {{"t_end", cfg.time.t_end},
                 {"cfl", cfg.time.cfl},
                 {"scheme", to_string(cfg.time.scheme)},
                 {"theta_safety", cfg.time.theta_safety}};
    const auto& c = cfg.checks;
    ordered_json checks;
    checks["hypotheses"] = c.hypotheses;
    checks["g_lemma"] = c.g_lemma;
    checks["integrability"] = c.integrability;
    checks["estimates"] = c.estimates;
    checks["samples"] = c.samples;
    checks["seed"] = c.seed;
    checks["rel_tol"] = c.rel_tol;
    checks["C_tol"] = c.C_tol;
    checks["s_min_steps"] = c.s_min_steps;
    checks["eta_scale"] = c.eta_scale;
    checks["box"] = {{"x_lo", c.box.x_lo}, {"x_hi", c.box.x_hi}, {"t_lo", c.box.t_lo},
                     {"t_hi", c.box.t_hi}, {"p_max", c.box.p_max}};
    checks["radii"] = c.radii;
    checks["divergence_threshold"] = c.divergence_threshold;
    checks["phi"] = c.phi;
    checks["phi_levels"] = c.phi_levels;
    checks["gradient_window"] = {c.gradient_t_lo, std::isfinite(c.gradient_t_hi) ? ordered_json(c.gradient_t_hi)
                                                                                    : ordered_json("t_end")};
    checks["refine"] = c.refine;
    j["checks"] = checks;
    j["output"] = {{"dir", cfg.output.dir}, {"formats", cfg.output.formats}};
    return j;
}

}  // namespace hjreg
