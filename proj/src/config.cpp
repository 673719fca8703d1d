#include "lcflow/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "lcflow/error.hpp"

namespace lcflow {

ConfigError::ConfigError(const std::string& field, std::size_t line, const std::string& message)
    : std::runtime_error((line ? "line " + std::to_string(line) + ": " : std::string()) +
                         (field.empty() ? std::string() : field + ": ") + message),
      field_(field), line_(line) {}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::string fmt(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

template <class T>
std::string fmt_list(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>) {
            out += fmt(xs[i]);
        } else if constexpr (std::is_integral_v<T>) {
            out += std::to_string(xs[i]);
        } else {
            out += xs[i];
        }
    }
    return out;
}

struct Entry {
    std::string value;
    std::size_t line;
};

class Reader {
public:
    Reader(std::string section, std::map<std::string, Entry> entries)
        : section_(std::move(section)), entries_(std::move(entries)) {}

    bool has(const std::string& key) const { return entries_.count(key) > 0; }

    double real(const std::string& key, double fallback) {
        auto it = take(key);
        if (!it) return fallback;
        return parse_real(it->value, key, it->line);
    }
    long integer(const std::string& key, long fallback) {
        auto it = take(key);
        if (!it) return fallback;
        long v = 0;
        const auto& s = it->value;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail(key, it->line, "expected an integer, got '" + s + "'");
        return v;
    }
    bool boolean(const std::string& key, bool fallback) {
        auto it = take(key);
        if (!it) return fallback;
        if (it->value == "true") return true;
        if (it->value == "false") return false;
        fail(key, it->line, "expected true or false, got '" + it->value + "'");
        return false;
    }
    std::string word(const std::string& key, const std::string& fallback, const std::set<std::string>& allowed) {
        auto it = take(key);
        if (!it) return fallback;
        if (!allowed.count(it->value)) {
            std::string opts;
            for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
            fail(key, it->line, "'" + it->value + "' is not one of: " + opts);
        }
        return it->value;
    }
    std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) {
        auto it = take(key);
        if (!it) return fallback;
        std::vector<double> out;
        for (const auto& item : split_list(it->value)) out.push_back(parse_real(item, key, it->line));
        return out;
    }
    std::vector<int> integers(const std::string& key, const std::vector<int>& fallback) {
        auto it = take(key);
        if (!it) return fallback;
        std::vector<int> out;
        for (const auto& item : split_list(it->value)) {
            int v = 0;
            const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
            if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
                fail(key, it->line, "expected an integer list entry, got '" + item + "'");
            }
            out.push_back(v);
        }
        return out;
    }
    std::vector<std::string> words(const std::string& key, const std::vector<std::string>& fallback,
                                   const std::set<std::string>& allowed) {
        auto it = take(key);
        if (!it) return fallback;
        auto out = split_list(it->value);
        for (const auto& w : out) {
            if (!allowed.count(w)) fail(key, it->line, "unknown entry '" + w + "'");
        }
        return out;
    }
    std::string text(const std::string& key, const std::string& fallback) {
        auto it = take(key);
        return it ? it->value : fallback;
    }

    // Throws on any key nobody asked for.
    void finish() const {
        for (const auto& [key, e] : entries_) {
            if (!used_.count(key)) fail(key, e.line, "unknown key");
        }
    }

    [[noreturn]] void fail(const std::string& key, std::size_t line, const std::string& msg) const {
        throw ConfigError(section_ + "." + key, line, msg);
    }
    std::size_t line_of(const std::string& key) const {
        auto it = entries_.find(key);
        return it == entries_.end() ? 0 : it->second.line;
    }

private:
    const Entry* take(const std::string& key) {
        used_.insert(key);
        auto it = entries_.find(key);
        return it == entries_.end() ? nullptr : &it->second;
    }
    double parse_real(const std::string& s, const std::string& key, std::size_t line) const {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
            fail(key, line, "expected a finite number, got '" + s + "'");
        }
        return v;
    }

    std::string section_;
    std::map<std::string, Entry> entries_;
    std::set<std::string> used_;
};

const std::map<std::string, InitialKind> kInitialNames{
    {"zero", InitialKind::Zero}, {"smooth", InitialKind::SmoothField}, {"pole", InitialKind::ZeroLelongPole}};
const std::map<std::string, OuterMode> kOuterNames{
    {"initial", OuterMode::Initial}, {"value", OuterMode::Value},
    {"cusp_ke", OuterMode::CuspKE}, {"cone_ke", OuterMode::ConeKE}};
const std::map<std::string, DivisorKind> kDivisorNames{
    {"cusp", DivisorKind::Cusp}, {"conic", DivisorKind::Conic}, {"canonical", DivisorKind::Canonical}};
const std::map<std::string, ReferenceKind> kReferenceNames{
    {"flat", ReferenceKind::Flat}, {"cusp_ke", ReferenceKind::CuspKE}, {"cone_ke", ReferenceKind::ConeKE}};
const std::set<std::string> kAuditNames{"upper", "lower", "time_derivative", "trace",
                                        "l1_continuity", "normalized", "maximality"};

template <class E>
std::set<std::string> keys(const std::map<std::string, E>& m) {
    std::set<std::string> out;
    for (const auto& [k, v] : m) out.insert(k);
    return out;
}

template <class E>
std::string name_of(const std::map<std::string, E>& m, E value) {
    for (const auto& [k, v] : m) {
        if (v == value) return k;
    }
    return "?";
}

}  // namespace

CascadeSchedule CascadeConfig::schedule() const {
    CascadeSchedule s;
    s.v_seq = v_seq;
    s.epsj_seq = epsj_seq;
    s.epsk_seq = epsk_seq;
    s.u_seq = u_seq;
    s.l_seq = l_seq;
    s.snapshot_times = snapshot_times;
    return s;
}

ExperimentConfig parse_config(const std::string& text) {
    std::map<std::string, std::map<std::string, Entry>> sections;
    std::map<std::string, std::size_t> section_line;
    std::vector<std::string> order;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("", line_no, "malformed section header");
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty()) throw ConfigError("", line_no, "empty section name");
            if (sections.count(current)) throw ConfigError(current, line_no, "duplicate section");
            sections[current];
            section_line[current] = line_no;
            order.push_back(current);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(current, line_no, "expected 'key = value'");
        if (current.empty()) throw ConfigError("", line_no, "key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(current, line_no, "missing key");
        auto& sec = sections[current];
        if (sec.count(key)) throw ConfigError(current + "." + key, line_no, "duplicate key");
        sec[key] = Entry{trim(line.substr(eq + 1)), line_no};
    }

    ExperimentConfig cfg;
    std::set<std::string> known{"grid", "background", "flow", "cascade", "audit", "reference", "output"};
    std::size_t n_div = 0;
    for (const auto& name : order) {
        if (known.count(name)) continue;
        if (name.rfind("divisor.", 0) == 0) {
            ++n_div;
            continue;
        }
        throw ConfigError(name, section_line[name], "unknown section");
    }
    auto reader = [&](const std::string& name) { return Reader(name, sections.count(name) ? sections[name] : std::map<std::string, Entry>{}); };

    {
        Reader r = reader("grid");
        GridConfig& g = cfg.grid;
        g.s_min = r.real("s_min", g.s_min);
        g.s_max = r.real("s_max", g.s_max);
        const long n = r.integer("n_nodes", static_cast<long>(g.n_nodes));
        if (n < 8) r.fail("n_nodes", r.line_of("n_nodes"), "must be >= 8");
        g.n_nodes = static_cast<std::size_t>(n);
        g.inner = r.word("inner", "neumann", {"neumann", "dirichlet"}) == "neumann" ? BoundaryKind::NeumannZero
                                                                                  : BoundaryKind::Dirichlet;
        g.inner_value = r.real("inner_value", g.inner_value);
        g.outer = kOuterNames.at(r.word("outer", "initial", keys(kOuterNames)));
        g.outer_value = r.real("outer_value", g.outer_value);
        g.outer_beta = r.real("outer_beta", g.outer_beta);
        r.finish();
    }
    {
        Reader r = reader("background");
        BackgroundConfig& b = cfg.background;
        b.u = r.real("u", b.u);
        b.v = r.real("v", b.v);
        b.eta = r.real("eta", b.eta);
        b.delta = r.real("delta", b.delta);
        b.theta_scale = r.real("theta_scale", b.theta_scale);
        b.omega0_scale = r.real("omega0_scale", b.omega0_scale);
        const std::string st = r.text("stilde", "none");
        if (st != "none") {
            std::size_t idx = 0;
            const auto res = std::from_chars(st.data(), st.data() + st.size(), idx);
            if (res.ec != std::errc() || res.ptr != st.data() + st.size()) {
                r.fail("stilde", r.line_of("stilde"), "expected a divisor index or 'none'");
            }
            b.stilde = idx;
        }
        r.finish();
    }
    for (std::size_t k = 0; k < n_div; ++k) {
        const std::string name = "divisor." + std::to_string(k);
        if (!sections.count(name)) {
            throw ConfigError(name, 0, "divisor sections must be numbered 0.." + std::to_string(n_div - 1));
        }
        Reader r = reader(name);
        if (!r.has("kind")) throw ConfigError(name + ".kind", section_line[name], "missing required key");
        DivisorSpec d;
        d.kind = kDivisorNames.at(r.word("kind", "cusp", keys(kDivisorNames)));
        d.coefficient = r.real("coefficient", d.kind == DivisorKind::Conic ? 0.5 : 1.0);
        d.epsilon = r.real("epsilon", 0.0);
        d.hermitian_scale = r.real("scale", 1.0);
        r.finish();
        try {
            d.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(name, section_line[name], e.what());
        }
        cfg.divisors.push_back(d);
    }
    {
        Reader r = reader("flow");
        FlowConfig& f = cfg.flow;
        f.normalized = r.boolean("normalized", f.normalized);
        f.t_end = r.real("t_end", f.t_end);
        f.dt_init = r.real("dt_init", f.dt_init);
        f.dt_max = r.real("dt_max", f.dt_max);
        f.newton_tol = r.real("newton_tol", f.newton_tol);
        f.max_newton = static_cast<int>(r.integer("max_newton", f.max_newton));
        f.target_newton = static_cast<int>(r.integer("target_newton", f.target_newton));
        f.l_index = static_cast<int>(r.integer("l_index", f.l_index));
        f.initial = kInitialNames.at(r.word("initial", "zero", keys(kInitialNames)));
        f.pole_c = r.real("pole_c", f.pole_c);
        f.smooth_amplitude = r.real("smooth_amplitude", f.smooth_amplitude);
        f.output_times = r.reals("output_times", f.output_times);
        f.step_grid = r.word("step_grid", "adaptive", {"adaptive", "geometric"}) == "adaptive" ? StepGrid::Adaptive
                                                                                           : StepGrid::Geometric;
        r.finish();
    }
    {
        Reader r = reader("cascade");
        CascadeConfig& c = cfg.cascade;
        c.v_seq = r.reals("v_seq", c.v_seq);
        c.epsj_seq = r.reals("epsj_seq", c.epsj_seq);
        c.epsk_seq = r.reals("epsk_seq", c.epsk_seq);
        c.u_seq = r.reals("u_seq", c.u_seq);
        c.l_seq = r.integers("l_seq", c.l_seq);
        c.snapshot_times = r.reals("snapshot_times", c.snapshot_times);
        r.finish();
    }
    {
        Reader r = reader("audit");
        AuditConfig& a = cfg.audit;
        a.audits = r.words("audits", a.audits, kAuditNames);
        a.delta = r.real("delta", a.delta);
        a.tolerance = r.real("tolerance", a.tolerance);
        a.rate_fit_time = r.real("rate_fit_time", a.rate_fit_time);
        a.trace_fit_time = r.real("trace_fit_time", a.trace_fit_time);
        a.l1_times = r.reals("l1_times", a.l1_times);
        a.l1_threshold = r.real("l1_threshold", a.l1_threshold);
        a.l1_threshold_time = r.real("l1_threshold_time", a.l1_threshold_time);
        a.normalized_fit_time = r.real("normalized_fit_time", a.normalized_fit_time);
        r.finish();
    }
    {
        Reader r = reader("reference");
        ReferenceConfig& ref = cfg.reference;
        ref.kind = kReferenceNames.at(r.word("kind", "cusp_ke", keys(kReferenceNames)));
        ref.beta = r.real("beta", ref.beta);
        ref.window_lo = r.real("window_lo", ref.window_lo);
        ref.window_hi = r.real("window_hi", ref.window_hi);
        r.finish();
        if (ref.kind == ReferenceKind::ConeKE && !(ref.beta > 0.0 && ref.beta < 1.0)) {
            throw ConfigError("reference.beta", r.line_of("beta"), "cone beta must lie in (0,1)");
        }
    }
    {
        Reader r = reader("output");
        cfg.output_directory = r.text("directory", cfg.output_directory);
        r.finish();
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string emit_config(const ExperimentConfig& c) {
    std::ostringstream os;
    const auto& g = c.grid;
    os << "[grid]\n"
       << "s_min = " << fmt(g.s_min) << "\n"
       << "s_max = " << fmt(g.s_max) << "\n"
       << "n_nodes = " << g.n_nodes << "\n"
       << "inner = " << (g.inner == BoundaryKind::NeumannZero ? "neumann" : "dirichlet") << "\n"
       << "inner_value = " << fmt(g.inner_value) << "\n"
       << "outer = " << name_of(kOuterNames, g.outer) << "\n"
       << "outer_value = " << fmt(g.outer_value) << "\n"
       << "outer_beta = " << fmt(g.outer_beta) << "\n\n";
    const auto& b = c.background;
    os << "[background]\n"
       << "u = " << fmt(b.u) << "\n"
       << "v = " << fmt(b.v) << "\n"
       << "eta = " << fmt(b.eta) << "\n"
       << "delta = " << fmt(b.delta) << "\n"
       << "theta_scale = " << fmt(b.theta_scale) << "\n"
       << "omega0_scale = " << fmt(b.omega0_scale) << "\n"
       << "stilde = " << (b.stilde ? std::to_string(*b.stilde) : std::string("none")) << "\n\n";
    for (std::size_t k = 0; k < c.divisors.size(); ++k) {
        const auto& d = c.divisors[k];
        os << "[divisor." << k << "]\n"
           << "kind = " << name_of(kDivisorNames, d.kind) << "\n"
           << "coefficient = " << fmt(d.coefficient) << "\n"
           << "epsilon = " << fmt(d.epsilon) << "\n"
           << "scale = " << fmt(d.hermitian_scale) << "\n\n";
    }
    const auto& f = c.flow;
    os << "[flow]\n"
       << "normalized = " << (f.normalized ? "true" : "false") << "\n"
       << "t_end = " << fmt(f.t_end) << "\n"
       << "dt_init = " << fmt(f.dt_init) << "\n"
       << "dt_max = " << fmt(f.dt_max) << "\n"
       << "newton_tol = " << fmt(f.newton_tol) << "\n"
       << "max_newton = " << f.max_newton << "\n"
       << "target_newton = " << f.target_newton << "\n"
       << "l_index = " << f.l_index << "\n"
       << "initial = " << name_of(kInitialNames, f.initial) << "\n"
       << "pole_c = " << fmt(f.pole_c) << "\n"
       << "smooth_amplitude = " << fmt(f.smooth_amplitude) << "\n"
       << "output_times = " << fmt_list(f.output_times) << "\n"
       << "step_grid = " << (f.step_grid == StepGrid::Adaptive ? "adaptive" : "geometric") << "\n\n";
    const auto& cs = c.cascade;
    os << "[cascade]\n"
       << "v_seq = " << fmt_list(cs.v_seq) << "\n"
       << "epsj_seq = " << fmt_list(cs.epsj_seq) << "\n"
       << "epsk_seq = " << fmt_list(cs.epsk_seq) << "\n"
       << "u_seq = " << fmt_list(cs.u_seq) << "\n"
       << "l_seq = " << fmt_list(cs.l_seq) << "\n"
       << "snapshot_times = " << fmt_list(cs.snapshot_times) << "\n\n";
    const auto& a = c.audit;
    os << "[audit]\n"
       << "audits = " << fmt_list(a.audits) << "\n"
       << "delta = " << fmt(a.delta) << "\n"
       << "tolerance = " << fmt(a.tolerance) << "\n"
       << "rate_fit_time = " << fmt(a.rate_fit_time) << "\n"
       << "trace_fit_time = " << fmt(a.trace_fit_time) << "\n"
       << "l1_times = " << fmt_list(a.l1_times) << "\n"
       << "l1_threshold = " << fmt(a.l1_threshold) << "\n"
       << "l1_threshold_time = " << fmt(a.l1_threshold_time) << "\n"
       << "normalized_fit_time = " << fmt(a.normalized_fit_time) << "\n\n";
    const auto& r = c.reference;
    os << "[reference]\n"
       << "kind = " << name_of(kReferenceNames, r.kind) << "\n"
       << "beta = " << fmt(r.beta) << "\n"
       << "window_lo = " << fmt(r.window_lo) << "\n"
       << "window_hi = " << fmt(r.window_hi) << "\n\n";
    os << "[output]\n"
       << "directory = " << c.output_directory << "\n";
    return os.str();
}

std::string config_hash(const ExperimentConfig& config) {
    ExperimentConfig hashed = config;
    hashed.output_directory.clear();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : emit_config(hashed)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> preset_names() {
    return {"cusp-ke", "cone-ke", "lemma41", "pole-envelope", "smooth"};
}

namespace {

std::vector<double> decade_times() {
    std::vector<double> ts;
    for (int k = 0; k < 40; ++k) ts.push_back(std::pow(10.0, -4.0 + 0.1 * k));
    for (double t : {1e-4, 1e-3, 1e-2, 1e-1}) ts.push_back(t);  // exact decades
    ts.push_back(0.05);
    ts.push_back(1.0);
    std::sort(ts.begin(), ts.end());
    std::vector<double> out;
    for (double t : ts) {
        if (out.empty() || std::abs(t - out.back()) > 1e-9 * t) {
            out.push_back(t);
        } else if (t == 1e-4 || t == 1e-3 || t == 1e-2 || t == 1e-1) {
            out.back() = t;
        }
    }
    return out;
}

ExperimentConfig normalized_ke(const std::string& dir) {
    ExperimentConfig c;
    c.grid = GridConfig{-50.0, -2.0, 2048, BoundaryKind::NeumannZero, 0.0, OuterMode::CuspKE, 0.0, 0.5};
    c.background.omega0_scale = 1.0;
    c.background.stilde = 0;
    c.flow.normalized = true;
    c.flow.t_end = 20.0;
    c.flow.dt_init = 1e-3;
    c.flow.dt_max = 0.1;
    c.flow.output_times = {1e-3, 1e-2, 0.1};
    for (int k = 1; k <= 20; ++k) c.flow.output_times.push_back(k);
    c.audit.audits = {"upper", "lower", "time_derivative", "trace", "l1_continuity", "normalized"};
    c.audit.rate_fit_time = 1.0;
    c.audit.trace_fit_time = 1.0;
    c.audit.l1_times = {1e-3, 1e-2, 1e-1};
    c.output_directory = dir;
    return c;
}

}  // namespace

ExperimentConfig preset(const std::string& name) {
    if (name == "cusp-ke") {
        ExperimentConfig c = normalized_ke("out/cusp-ke");
        c.divisors = {DivisorSpec::cusp()};
        return c;
    }
    if (name == "cone-ke") {
        ExperimentConfig c = normalized_ke("out/cone-ke");
        c.grid.outer = OuterMode::ConeKE;
        c.grid.outer_beta = 0.5;
        c.divisors = {DivisorSpec::conic(0.5, 0.0)};
        c.background.eta = 1e-3;
        c.reference.kind = ReferenceKind::ConeKE;
        c.reference.beta = 0.5;
        return c;
    }
    if (name == "lemma41") {
        ExperimentConfig c;
        c.grid = GridConfig{-30.0, -1.0, 256, BoundaryKind::NeumannZero, 0.0, OuterMode::Initial, 0.0, 0.5};
        c.divisors = {DivisorSpec::cusp(), DivisorSpec::conic(0.5, 0.1), DivisorSpec::canonical(0.5, 0.1)};
        c.background.eta = 0.1;
        c.background.omega0_scale = 0.0;
        c.background.stilde = 0;
        c.flow.t_end = 1.0;
        c.flow.initial = InitialKind::ZeroLelongPole;
        c.flow.pole_c = 1.5;
        c.flow.step_grid = StepGrid::Geometric;
        c.flow.output_times = {0.01, 0.1, 0.5, 1.0};
        c.audit.audits = {"upper"};
        c.output_directory = "out/lemma41";
        return c;
    }
    if (name == "pole-envelope" || name == "smooth") {
        ExperimentConfig c;
        c.grid = GridConfig{-30.0, -1.0, 512, BoundaryKind::NeumannZero, 0.0, OuterMode::Initial, 0.0, 0.5};
        c.divisors = {DivisorSpec::cusp()};
        c.background.u = 1e-6;
        c.background.v = 1e-6;
        c.background.omega0_scale = 0.0;
        c.background.stilde = 0;
        c.flow.t_end = 1.0;
        c.flow.dt_init = 1e-6;
        c.flow.dt_max = 0.1;
        c.flow.output_times = decade_times();
        c.audit.audits = {"upper", "lower", "time_derivative", "trace", "l1_continuity"};
        c.audit.rate_fit_time = 1e-3;
        c.audit.trace_fit_time = 0.05;
        c.audit.l1_times = {1e-4, 1e-3, 1e-2, 1e-1};
        if (name == "pole-envelope") {
            c.flow.initial = InitialKind::ZeroLelongPole;
            c.flow.pole_c = 3.0;
            c.flow.l_index = 8;
            c.audit.l1_threshold = 5e-2;
            c.output_directory = "out/pole-envelope";
        } else {
            c.flow.initial = InitialKind::SmoothField;
            c.flow.smooth_amplitude = 1.0;
            c.audit.l1_threshold = 1e-2;
            c.output_directory = "out/smooth";
        }
        return c;
    }
    throw ConfigError("preset", 0, "unknown preset '" + name + "'");
}

RunSetup build_run(const ExperimentConfig& c) {
    try {
        const BoundaryCondition inner = c.grid.inner == BoundaryKind::NeumannZero
                                            ? BoundaryCondition::neumann_zero()
                                            : BoundaryCondition::dirichlet(c.grid.inner_value);
        double outer_value = 0.0;
        switch (c.grid.outer) {
        case OuterMode::Initial:
            break;
        case OuterMode::Value:
            outer_value = c.grid.outer_value;
            break;
        case OuterMode::CuspKE:
            outer_value = std::log(2.0);
            break;
        case OuterMode::ConeKE: {
            const double beta = c.grid.outer_beta;
            if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("outer_beta must lie in (0,1)");
            outer_value = std::log(2.0 * beta * beta) - 2.0 * std::log1p(-std::exp(beta * c.grid.s_max));
            break;
        }
        }
        RadialGrid grid = make_grid(c.grid.s_min, c.grid.s_max, c.grid.n_nodes, inner,
                                    BoundaryCondition::dirichlet(outer_value));

        FlowParams p;
        p.background.u = c.background.u;
        p.background.v = c.background.v;
        p.background.eta = c.background.eta;
        p.background.delta = c.background.delta;
        p.background.theta_scale = c.background.theta_scale;
        p.background.omega0_scale = c.background.omega0_scale;
        p.background.stilde_index = c.background.stilde;
        p.background.divisors = c.divisors;
        p.normalized = c.flow.normalized;
        p.l_index = c.flow.l_index;
        p.t_end = c.flow.t_end;
        p.dt_init = std::min(c.flow.dt_init, c.flow.t_end);
        p.dt_max = c.flow.dt_max;
        p.newton_tol = c.flow.newton_tol;
        p.max_newton = c.flow.max_newton;
        p.target_newton = c.flow.target_newton;
        p.output_times = c.flow.output_times;
        std::sort(p.output_times.begin(), p.output_times.end());
        if (c.flow.step_grid == StepGrid::Geometric) {
            p.step_times = cascade_time_grid(p.t_end, 14, p.output_times);
        }
        p.validate();

        InitialData data;
        switch (c.flow.initial) {
        case InitialKind::Zero:
            break;
        case InitialKind::SmoothField: {
            const double a = c.flow.smooth_amplitude;
            data = InitialData::smooth(Field::from_function(grid, [a](double s) { return a * std::exp(s); }));
            break;
        }
        case InitialKind::ZeroLelongPole:
            data = InitialData::zero_lelong_pole(c.flow.pole_c);
            break;
        }
        Field initial = make_initial(data, p.l_index, p.background_spec(), grid);
        if (c.grid.outer == OuterMode::Initial) grid = pin_outer_to(initial);
        initial = Field(grid, initial.values);
        return RunSetup{p, data, grid, initial};
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config", 0, e.what());
    } catch (const PositivityError& e) {
        throw ConfigError("config", 0, e.what());
    }
}

}  // namespace lcflow
