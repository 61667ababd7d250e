#pragma once

// Run configuration: INI text (sections, key = value, ';' or '#' comments)
// read with Boost.PropertyTree, then checked key by key. Unknown sections and
// keys are errors, as are duplicates and keys outside a section.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "cfet/expm.hpp"
#include "cfet/models.hpp"
#include "cfet/propagators.hpp"

namespace cfet::harness
{

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

enum class ModelKind
{
    Spin,
    DissipativeSpin,
    Dicke
};

inline const char* to_string(ModelKind k)
{
    switch (k) {
    case ModelKind::Spin: return "spin";
    case ModelKind::DissipativeSpin: return "dissipative-spin";
    case ModelKind::Dicke: return "dicke";
    }
    return "?";
}

struct ModelConfig
{
    ModelKind kind = ModelKind::Spin;
    SpinModelParams spin;
    DickeParams dicke;
    /// up | down | ground
    std::string initial = "down";

    bool dissipative() const { return kind != ModelKind::Spin; }
};

struct RunSection
{
    std::optional<SchemeKind> scheme;
    EngineKind engine = EngineKind::ChebyshevShifted;
    double tolerance = 1e-12;
    std::optional<double> dt;
    double t_start = 0.0;
    std::optional<double> t_end;
    std::size_t stride = 1;
    std::vector<std::string> observables;
    std::uint64_t seed = 20240611;
    bool deterministic = false;
};

struct BenchSection
{
    std::vector<SchemeKind> schemes;
    std::vector<double> dts;
    /// dts_<scheme> overrides the shared list for one scheme
    std::map<SchemeKind, std::vector<double>> scheme_dts;
    /// reference accepted once two successive halvings agree to this
    double reference_tol = 1e-12;
    /// first reference step; default a quarter of the smallest bench step
    std::optional<double> reference_dt;
    int max_halvings = 6;
    /// state dimension up to which the reference uses dense exponentials
    Index dense_limit = 256;

    const std::vector<double>& steps(SchemeKind k) const
    {
        auto it = scheme_dts.find(k);
        return it == scheme_dts.end() ? dts : it->second;
    }

    double smallest_step() const
    {
        double m = std::numeric_limits<double>::infinity();
        for (auto k : schemes)
            for (double dt : steps(k))
                m = std::min(m, dt);
        return m;
    }
};

enum class SweepParameter
{
    OmegaP,
    Lambda0
};

struct SweepSection
{
    SweepParameter parameter = SweepParameter::OmegaP;
    std::vector<double> values;
    bool spectrum = false;
    double settle_tol = 1e-9;
    int max_periods = 4000;
    int samples = 64;
    int harmonics = 6;
};

struct SpectrumSection
{
    double omega_min = 0.0;
    std::optional<double> omega_max;
    std::size_t n_omega = 2001;
    std::optional<double> dtau;
    std::optional<double> tau_max;
    int n_phase = 16;
    bool extend = false;
    std::optional<double> tau_limit;
    /// fraction of the largest value of S(w)
    double peak_prominence = 1e-3;
    double settle_tol = 1e-9;
    int max_periods = 4000;
};

struct RunConfig
{
    ModelConfig model;
    RunSection run;
    std::optional<BenchSection> bench;
    std::optional<SweepSection> sweep;
    SpectrumSection spectrum;
    bool has_spectrum = false;
    std::string source; // file name, for messages
};

namespace detail
{

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Keys of one section, consumed as they are read so leftovers can be reported.
class Section
{
public:
    Section(std::string name, const boost::property_tree::ptree& tree) : name_(std::move(name))
    {
        for (const auto& [k, v] : tree) {
            if (!v.empty())
                throw ConfigError("[" + name_ + "] " + k + ": nested keys are not supported");
            values_[k] = trim(v.data());
        }
    }

    const std::string& name() const { return name_; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> take(const std::string& key)
    {
        auto it = values_.find(key);
        if (it == values_.end())
            return std::nullopt;
        std::string v = it->second;
        values_.erase(it);
        return v;
    }

    std::string require(const std::string& key)
    {
        auto v = take(key);
        if (!v)
            throw ConfigError("[" + name_ + "] missing required key '" + key + "'");
        return *v;
    }

    double number(const std::string& key, const std::string& text) const
    {
        double x = 0.0;
        const char* b = text.data();
        const char* e = b + text.size();
        auto [p, ec] = std::from_chars(b, e, x);
        if (ec != std::errc() || p != e || text.empty())
            throw ConfigError("[" + name_ + "] " + key + ": '" + text + "' is not a number");
        return x;
    }

    long long integer(const std::string& key, const std::string& text) const
    {
        long long x = 0;
        const char* b = text.data();
        const char* e = b + text.size();
        auto [p, ec] = std::from_chars(b, e, x);
        if (ec != std::errc() || p != e || text.empty())
            throw ConfigError("[" + name_ + "] " + key + ": '" + text + "' is not an integer");
        return x;
    }

    bool boolean(const std::string& key, const std::string& text) const
    {
        if (text == "true" || text == "yes" || text == "on" || text == "1")
            return true;
        if (text == "false" || text == "no" || text == "off" || text == "0")
            return false;
        throw ConfigError("[" + name_ + "] " + key + ": '" + text + "' is not a boolean");
    }

    std::vector<std::string> list(const std::string& text) const
    {
        std::vector<std::string> out;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ','))
            if (auto t = trim(item); !t.empty())
                out.push_back(t);
        return out;
    }

    double get(const std::string& key, double fallback)
    {
        auto v = take(key);
        return v ? number(key, *v) : fallback;
    }

    std::optional<double> get_opt(const std::string& key)
    {
        auto v = take(key);
        return v ? std::optional<double>(number(key, *v)) : std::nullopt;
    }

    double need(const std::string& key) { return number(key, require(key)); }

    long long get_int(const std::string& key, long long fallback, long long lo)
    {
        auto v = take(key);
        const long long x = v ? integer(key, *v) : fallback;
        if (x < lo)
            throw ConfigError("[" + name_ + "] " + key + " must be >= " + std::to_string(lo));
        return x;
    }

    bool get_bool(const std::string& key, bool fallback)
    {
        auto v = take(key);
        return v ? boolean(key, *v) : fallback;
    }

    std::vector<double> numbers(const std::string& key, const std::string& text) const
    {
        std::vector<double> out;
        for (const auto& s : list(text))
            out.push_back(number(key, s));
        if (out.empty())
            throw ConfigError("[" + name_ + "] " + key + ": empty list");
        return out;
    }

    void finish() const
    {
        if (!values_.empty())
            throw ConfigError("[" + name_ + "] unknown key '" + values_.begin()->first + "'");
    }

private:
    std::string name_;
    std::map<std::string, std::string> values_;
};

template <typename F>
auto wrap(const std::string& where, F&& f)
{
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

inline std::optional<FrequencyRamp> parse_ramp(std::optional<Section>& s)
{
    if (!s)
        return std::nullopt;
    FrequencyRamp r;
    r.w0 = s->need("w0");
    r.w1 = s->need("w1");
    r.t0 = s->get("t0", 0.0);
    r.duration = s->need("duration");
    s->finish();
    wrap("[ramp]", [&] { r.validate(); return 0; });
    return r;
}

inline ModelConfig parse_model(Section& m, std::optional<Section>& ramp, std::optional<Section>& init)
{
    ModelConfig mc;
    const std::string kind = m.require("kind");
    if (kind == "spin")
        mc.kind = ModelKind::Spin;
    else if (kind == "dissipative-spin")
        mc.kind = ModelKind::DissipativeSpin;
    else if (kind == "dicke")
        mc.kind = ModelKind::Dicke;
    else
        throw ConfigError("[model] kind: unknown model '" + kind + "' (spin, dissipative-spin, dicke)");

    if (mc.kind == ModelKind::Dicke) {
        auto& p = mc.dicke;
        p.j = m.need("j");
        if (!m.has("n_max"))
            throw ConfigError("[model] missing required key 'n_max'");
        p.n_max = static_cast<int>(m.get_int("n_max", 0, 1));
        p.delta = m.need("delta");
        p.Omega = m.need("Omega");
        p.lambda0 = m.need("lambda0");
        p.dlambda = m.need("dlambda");
        p.omega_p = m.need("omega_p");
        p.kappa = m.need("kappa");
        p.ramp = parse_ramp(ramp);
        wrap("[model]", [&] { p.validate(); return 0; });
        mc.initial = "ground";
    } else {
        auto& p = mc.spin;
        p.j = m.need("j");
        p.delta = m.need("delta");
        p.V = m.need("V");
        p.omega = m.need("omega");
        if (mc.kind == ModelKind::DissipativeSpin)
            p.gamma = m.need("gamma");
        p.ramp = parse_ramp(ramp);
        wrap("[model]", [&] { p.validate(); return 0; });
    }
    m.finish();

    if (init) {
        mc.initial = init->require("state");
        init->finish();
    }
    const bool ok = mc.kind == ModelKind::Dicke ? mc.initial == "ground"
                                                : (mc.initial == "up" || mc.initial == "down");
    if (!ok)
        throw ConfigError("[initial] state: '" + mc.initial + "' is not available for model " + to_string(mc.kind) +
                          (mc.kind == ModelKind::Dicke ? " (ground)" : " (up, down)"));
    return mc;
}

inline const std::set<std::string>& observable_names(ModelKind k)
{
    static const std::set<std::string> spin{"jx", "jy", "jz", "iz", "omega_drive"};
    static const std::set<std::string> dicke{"jx", "jy", "jz", "iz", "nb", "omega_drive"};
    return k == ModelKind::Dicke ? dicke : spin;
}

inline RunSection parse_run(Section& s, ModelKind kind)
{
    RunSection r;
    if (auto v = s.take("scheme"))
        r.scheme = wrap("[run] scheme", [&] { return scheme_from_string(*v); });
    if (auto v = s.take("engine"))
        r.engine = wrap("[run] engine", [&] { return engine_from_string(*v); });
    r.tolerance = s.get("tolerance", r.tolerance);
    if (!(r.tolerance > 0.0 && r.tolerance < 1.0))
        throw ConfigError("[run] tolerance must lie in (0, 1)");
    r.dt = s.get_opt("dt");
    if (r.dt && !(*r.dt > 0.0 && std::isfinite(*r.dt)))
        throw ConfigError("[run] dt must be positive");
    r.t_start = s.get("t_start", 0.0);
    r.t_end = s.get_opt("t_end");
    if (r.t_end && !(*r.t_end >= r.t_start))
        throw ConfigError("[run] t_end must not precede t_start");
    r.stride = static_cast<std::size_t>(s.get_int("stride", 1, 1));
    if (auto v = s.take("observables")) {
        r.observables = s.list(*v);
        for (const auto& o : r.observables)
            if (!observable_names(kind).count(o))
                throw ConfigError("[run] observables: '" + o + "' is not available for model " + to_string(kind));
    } else {
        r.observables = kind == ModelKind::Dicke ? std::vector<std::string>{"iz", "nb"}
                                                 : std::vector<std::string>{"jz"};
    }
    r.seed = static_cast<std::uint64_t>(s.get_int("seed", static_cast<long long>(r.seed), 0));
    r.deterministic = s.get_bool("deterministic", false);
    s.finish();
    return r;
}

inline BenchSection parse_bench(Section& s)
{
    BenchSection b;
    for (const auto& name : s.list(s.require("schemes")))
        b.schemes.push_back(wrap("[bench] schemes", [&] { return scheme_from_string(name); }));
    if (b.schemes.empty())
        throw ConfigError("[bench] schemes: empty list");
    for (auto k : b.schemes)
        if (auto v = s.take(std::string("dts_") + to_string(k)))
            b.scheme_dts[k] = s.numbers(std::string("dts_") + to_string(k), *v);
    if (auto v = s.take("dts"))
        b.dts = s.numbers("dts", *v);
    for (auto k : b.schemes) {
        if (b.scheme_dts.count(k) == 0 && b.dts.empty())
            throw ConfigError(std::string("[bench] no dts for scheme ") + to_string(k));
        for (double dt : b.steps(k))
            if (!(dt > 0.0))
                throw ConfigError("[bench] time steps must be positive");
    }
    b.reference_tol = s.get("reference_tol", b.reference_tol);
    if (!(b.reference_tol > 0.0))
        throw ConfigError("[bench] reference_tol must be positive");
    b.reference_dt = s.get_opt("reference_dt");
    if (b.reference_dt && !(*b.reference_dt > 0.0))
        throw ConfigError("[bench] reference_dt must be positive");
    b.max_halvings = static_cast<int>(s.get_int("max_halvings", b.max_halvings, 1));
    b.dense_limit = static_cast<Index>(s.get_int("dense_limit", b.dense_limit, 0));
    s.finish();
    return b;
}

inline SweepSection parse_sweep(Section& s, ModelKind kind)
{
    if (kind != ModelKind::Dicke)
        throw ConfigError("[sweep] needs model kind dicke");
    SweepSection w;
    const std::string par = s.require("parameter");
    if (par == "omega_p")
        w.parameter = SweepParameter::OmegaP;
    else if (par == "lambda0")
        w.parameter = SweepParameter::Lambda0;
    else
        throw ConfigError("[sweep] parameter: '" + par + "' (omega_p, lambda0)");
    if (auto v = s.take("values")) {
        if (s.has("start") || s.has("stop") || s.has("count"))
            throw ConfigError("[sweep] give either values or start/stop/count");
        w.values = s.numbers("values", *v);
    } else {
        const double a = s.need("start"), b = s.need("stop");
        if (!s.has("count"))
            throw ConfigError("[sweep] missing required key 'count'");
        const auto n = s.get_int("count", 0, 1);
        for (long long i = 0; i < n; ++i)
            w.values.push_back(n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    w.spectrum = s.get_bool("spectrum", false);
    w.settle_tol = s.get("settle_tol", w.settle_tol);
    w.max_periods = static_cast<int>(s.get_int("max_periods", w.max_periods, 1));
    w.samples = static_cast<int>(s.get_int("samples", w.samples, 1));
    w.harmonics = static_cast<int>(s.get_int("harmonics", w.harmonics, -1));
    s.finish();
    return w;
}

inline SpectrumSection parse_spectrum(Section& s)
{
    SpectrumSection p;
    p.omega_min = s.get("omega_min", p.omega_min);
    p.omega_max = s.get_opt("omega_max");
    p.n_omega = static_cast<std::size_t>(s.get_int("n_omega", static_cast<long long>(p.n_omega), 2));
    p.dtau = s.get_opt("dtau");
    p.tau_max = s.get_opt("tau_max");
    p.n_phase = static_cast<int>(s.get_int("n_phase", p.n_phase, 1));
    p.extend = s.get_bool("extend", false);
    p.tau_limit = s.get_opt("tau_limit");
    p.peak_prominence = s.get("peak_prominence", p.peak_prominence);
    p.settle_tol = s.get("settle_tol", p.settle_tol);
    p.max_periods = static_cast<int>(s.get_int("max_periods", p.max_periods, 1));
    s.finish();
    if (p.omega_max && !(*p.omega_max > p.omega_min))
        throw ConfigError("[spectrum] omega_max must exceed omega_min");
    if (p.dtau && !(*p.dtau > 0.0))
        throw ConfigError("[spectrum] dtau must be positive");
    if (p.tau_max && !(*p.tau_max > 0.0))
        throw ConfigError("[spectrum] tau_max must be positive");
    return p;
}

} // namespace detail

/// Parses and validates INI text. Throws ConfigError.
inline RunConfig parse_config(std::istream& in, const std::string& source = "<config>")
{
    namespace pt = boost::property_tree;
    std::map<std::string, std::optional<detail::Section>> sections{
        {"model", {}}, {"ramp", {}}, {"initial", {}}, {"run", {}}, {"bench", {}}, {"sweep", {}}, {"spectrum", {}}};

    // the INI reader drops sections without keys, so headers are checked here
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    {
        std::istringstream lines(text);
        std::string line;
        for (int no = 1; std::getline(lines, line); ++no) {
            const auto t = detail::trim(line);
            if (t.size() > 1 && t.front() == '[' && t.back() == ']' &&
                !sections.count(detail::trim(t.substr(1, t.size() - 2))))
                throw ConfigError(source + ":" + std::to_string(no) + ": unknown section " + t);
        }
    }
    pt::ptree tree;
    try {
        std::istringstream body(text);
        pt::read_ini(body, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& [name, sub] : tree) {
        // an empty section and a bare key look alike in the tree; only the key has data
        if (sub.empty() && !sub.data().empty())
            throw ConfigError(source + ": key '" + name + "' outside any section");
        auto it = sections.find(name);
        if (it == sections.end())
            throw ConfigError(source + ": unknown section [" + name + "]");
        it->second.emplace(name, sub);
    }
    if (!sections["model"])
        throw ConfigError(source + ": missing section [model]");

    try {
        RunConfig c;
        c.source = source;
        c.model = detail::parse_model(*sections["model"], sections["ramp"], sections["initial"]);
        if (sections["run"])
            c.run = detail::parse_run(*sections["run"], c.model.kind);
        else
            c.run.observables = c.model.kind == ModelKind::Dicke ? std::vector<std::string>{"iz", "nb"}
                                                                 : std::vector<std::string>{"jz"};
        if (sections["bench"])
            c.bench = detail::parse_bench(*sections["bench"]);
        if (sections["sweep"])
            c.sweep = detail::parse_sweep(*sections["sweep"], c.model.kind);
        if (sections["spectrum"]) {
            c.spectrum = detail::parse_spectrum(*sections["spectrum"]);
            c.has_spectrum = true;
        }
        return c;
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

inline RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>")
{
    std::istringstream in(text);
    return parse_config(in, source);
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

} // namespace cfet::harness
