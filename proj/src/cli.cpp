#include "lcflow/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "lcflow/audits.hpp"
#include "lcflow/cascade.hpp"
#include "lcflow/config.hpp"
#include "lcflow/flow.hpp"
#include "lcflow/reference.hpp"

namespace lcflow::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Artifact missing or unreadable.
class MissingArtifact : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

void write_table(const fs::path& path, const Table& t) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t c = 0; c < t.header.size(); ++c) os << (c ? "," : "") << t.header[c];
    os << "\n";
    const std::size_t rows = t.columns.empty() ? 0 : t.columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << fmt(t.columns[c][r]);
        os << "\n";
    }
}

Table read_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("missing run artifact " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw MissingArtifact("empty run artifact " + path.string());
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    t.columns.resize(t.header.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= t.columns.size()) throw MissingArtifact(path.string() + ": too many cells on row " + std::to_string(row));
            t.columns[c++].push_back(std::strtod(cell.c_str(), nullptr));
        }
        if (c != t.columns.size()) throw MissingArtifact(path.string() + ": short row " + std::to_string(row));
    }
    return t;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << "\n";
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifact("missing run artifact " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig resolve_config(const Options& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = load_config(opts.config_path);
    } else if (!opts.preset.empty()) {
        cfg = preset(opts.preset);
    }
    if (!opts.out_dir.empty()) cfg.output_directory = opts.out_dir;
    return cfg;
}

fs::path prepare_dir(const ExperimentConfig& cfg) {
    const fs::path dir = cfg.output_directory.empty() ? fs::path("out") : fs::path(cfg.output_directory);
    fs::create_directories(dir);
    return dir;
}

unsigned thread_count(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string time_label(double t) { return "t=" + fmt(t); }

double parse_time_label(const std::string& label, const fs::path& path) {
    if (label.rfind("t=", 0) != 0) throw MissingArtifact(path.string() + ": bad column '" + label + "'");
    return std::strtod(label.c_str() + 2, nullptr);
}

/// fields.csv, rates.csv, metric.csv and diagnostics.csv of one run.
void write_run(const fs::path& dir, const FlowState& state, const std::string& prefix = "") {
    const RadialGrid& grid = state.u.grid;
    Table fields, rates, metric;
    for (Table* t : {&fields, &rates, &metric}) {
        t->header.push_back("s");
        t->columns.push_back(grid.nodes());
    }
    for (const auto& snap : state.snapshots) {
        fields.header.push_back(time_label(snap.t));
        fields.columns.push_back(snap.u.values);
        if (snap.udot) {
            rates.header.push_back(time_label(snap.t));
            rates.columns.push_back(snap.udot->values);
        }
        if (snap.metric) {
            metric.header.push_back(time_label(snap.t));
            metric.columns.push_back(snap.metric->values);
        }
    }
    write_table(dir / (prefix + "fields.csv"), fields);
    if (!prefix.empty()) return;
    write_table(dir / "rates.csv", rates);
    write_table(dir / "metric.csv", metric);

    Table diag;
    diag.header = {"t", "sup_u", "inf_u", "sup_udot", "inf_udot", "min_metric"};
    diag.columns.resize(6);
    for (const auto& row : state.diagnostics) {
        diag.columns[0].push_back(row.t);
        diag.columns[1].push_back(row.sup_u);
        diag.columns[2].push_back(row.inf_u);
        diag.columns[3].push_back(row.sup_udot);
        diag.columns[4].push_back(row.inf_udot);
        diag.columns[5].push_back(row.min_metric);
    }
    write_table(dir / "diagnostics.csv", diag);
}

/// Inverse of write_run. The grid comes from the configuration with the
/// outer Dirichlet value taken from the recorded data.
FlowState read_run(const fs::path& dir, const RadialGrid& config_grid, bool full = true,
                   const std::string& prefix = "") {
    const Table fields = read_table(dir / (prefix + "fields.csv"));
    if (fields.columns.size() < 2) throw MissingArtifact("fields.csv has no snapshot columns");
    if (fields.columns[0].size() != config_grid.size()) {
        throw MissingArtifact("fields.csv does not match the configured grid");
    }
    RadialGrid grid = config_grid.with_outer(BoundaryCondition::dirichlet(fields.columns[1].back()));
    if (grid.inner().kind == BoundaryKind::Dirichlet) {
        grid = grid.with_inner(BoundaryCondition::dirichlet(fields.columns[1].front()));
    }

    FlowState state{Field(grid), 0.0, 0, {}, {}};
    for (std::size_t c = 1; c < fields.columns.size(); ++c) {
        const double t = parse_time_label(fields.header[c], dir / "fields.csv");
        state.snapshots.push_back(Snapshot{t, Field(grid, fields.columns[c]), std::nullopt, std::nullopt});
    }
    state.u = state.snapshots.back().u;
    state.t = state.snapshots.back().t;
    if (!full) return state;

    auto attach = [&](const std::string& name, std::optional<Field> Snapshot::*member) {
        const Table t = read_table(dir / name);
        for (std::size_t c = 1; c < t.columns.size(); ++c) {
            const double time = parse_time_label(t.header[c], dir / name);
            auto it = std::find_if(state.snapshots.begin(), state.snapshots.end(),
                                   [&](const Snapshot& s) { return s.t == time; });
            if (it == state.snapshots.end()) throw MissingArtifact(name + ": time " + fmt(time) + " not in fields.csv");
            (*it).*member = Field(grid, t.columns[c]);
        }
    };
    attach("rates.csv", &Snapshot::udot);
    attach("metric.csv", &Snapshot::metric);

    const Table diag = read_table(dir / "diagnostics.csv");
    if (diag.columns.size() != 6) throw MissingArtifact("diagnostics.csv must have 6 columns");
    for (std::size_t r = 0; r < diag.columns[0].size(); ++r) {
        state.diagnostics.push_back(DiagnosticRow{diag.columns[0][r], diag.columns[1][r], diag.columns[2][r],
                                                  diag.columns[3][r], diag.columns[4][r], diag.columns[5][r]});
    }
    state.step_count = state.diagnostics.empty() ? 0 : state.diagnostics.size() - 1;
    return state;
}

/// Parameters of the terminal cascade member.
FlowParams apply_tuple(FlowParams p, const CascadeTuple& tp) {
    p.background.v = tp.v;
    p.background.u = tp.u;
    p.l_index = tp.l;
    for (auto& d : p.background.divisors) {
        if (d.kind == DivisorKind::Conic) d.epsilon = tp.eps_j;
        if (d.kind == DivisorKind::Canonical) d.epsilon = tp.eps_k;
    }
    return p;
}

json tuple_json(const CascadeTuple& tp) {
    return json{{"v", tp.v}, {"eps_j", tp.eps_j}, {"eps_k", tp.eps_k}, {"u", tp.u}, {"l", tp.l}};
}

AuditReport merge_half_delta(AuditReport full, const AuditReport& half) {
    for (const auto& [k, v] : half.fitted_constants) full.fitted_constants[k + "_half_delta"] = v;
    for (std::size_t i = 0; i < full.margin_field.size(); ++i) {
        full.margin_field[i] = std::min(full.margin_field[i], half.margin_field[i]);
    }
    full.min_margin = std::min(full.min_margin, half.min_margin);
    full.pass = full.pass && half.pass;
    if (!half.notes.empty()) full.notes += (full.notes.empty() ? "" : "; ") + std::string("half delta: ") + half.notes;
    return full;
}

std::vector<AuditReport> run_audits(const ExperimentConfig& cfg, const FlowState& state,
                                    const FlowParams& params, const FlowState* partner) {
    const AuditConfig& a = cfg.audit;
    const double tol = a.tolerance;
    std::vector<AuditReport> out;
    for (const auto& name : a.audits) {
        auto with_delta = [&](double delta) -> AuditReport {
            if (name == "lower") return audit_lower(state, params, delta, tol);
            if (name == "time_derivative") return audit_time_derivative(state, params, delta, tol, a.rate_fit_time);
            if (name == "trace") return audit_trace(state, params, delta, tol, a.trace_fit_time);
            if (name == "l1_continuity") {
                return audit_l1_continuity(state, params, delta, a.l1_times, a.l1_threshold,
                                           a.l1_threshold_time, tol, a.rate_fit_time);
            }
            return audit_normalized(state, params, delta, tol, a.normalized_fit_time);
        };
        if (name == "upper") {
            const AuditSubject subject{&state, &params};
            out.push_back(audit_upper(std::span<const AuditSubject>(&subject, 1), tol));
        } else if (name == "maximality") {
            if (partner) {
                out.push_back(audit_maximality(state, *partner, tol));
            } else {
                out.push_back(AuditReport{"maximality", Field(state.u.grid), {}, false,
                                          -std::numeric_limits<double>::infinity(), tol,
                                          "needs a cascade run directory (partner_fields.csv)"});
            }
        } else {
            out.push_back(merge_half_delta(with_delta(a.delta), with_delta(0.5 * a.delta)));
        }
    }
    return out;
}

double final_reference_error(const ExperimentConfig& cfg, const FlowState& state) {
    for (auto it = state.snapshots.rbegin(); it != state.snapshots.rend(); ++it) {
        if (!it->metric) continue;
        const ReferenceMetric ref = reference(cfg.reference.kind, state.u.grid, cfg.reference.beta);
        return compare_metrics_on(metric_coefficient(*it->metric), ref.coefficient, cfg.reference.window_lo,
                                  cfg.reference.window_hi);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

template <class F>
int guarded(const char* what, std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << what << ": config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const CascadeStepFailure& e) {
        err << what << ": step failure in member " << e.tuple().describe() << ": " << e.what() << "\n";
        return kStepFailure;
    } catch (const StepFailure& e) {
        err << what << ": step failure at t = " << e.time() << ", node " << e.node() << ": " << e.what() << "\n";
        return kStepFailure;
    } catch (const MissingArtifact& e) {
        err << what << ": " << e.what() << "\n";
        return kMissingArtifact;
    } catch (const std::invalid_argument& e) {
        err << what << ": config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const PositivityError& e) {
        err << what << ": config error: " << e.what() << "\n";
        return kConfigError;
    }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int cmd_run(const Options& opts, std::ostream& out, std::ostream& err) {
    return guarded("run", err, [&] {
        const ExperimentConfig cfg = resolve_config(opts);
        const RunSetup setup = build_run(cfg);
        const std::string hash = config_hash(cfg);
        const fs::path dir = prepare_dir(cfg);
        {
            std::ofstream os(dir / "config.ini");
            os << emit_config(cfg);
        }

        const auto t0 = std::chrono::steady_clock::now();
        const MaFlow flow(setup.params, setup.grid);
        const FlowState state = flow.run(setup.initial);
        const double runtime = seconds_since(t0);
        write_run(dir, state);

        json summary;
        summary["config_hash"] = hash;
        summary["t_final"] = state.t;
        summary["steps"] = state.step_count;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        summary["steady_residual"] = num(cfg.flow.normalized ? steady_residual(state, setup.params, flow.weights()) : nan);
        summary["reference_error"] = num(cfg.flow.normalized ? final_reference_error(cfg, state) : nan);
        summary["sup_u"] = max_value(state.u);
        summary["inf_u"] = min_value(state.u);
        summary["runtime_seconds"] = runtime;
        write_json(dir / "summary.json", summary);
        out << "run: " << state.step_count << " steps to t = " << state.t << ", wrote " << dir.string() << "\n";
        return kOk;
    });
}

int cmd_cascade(const Options& opts, std::ostream& out, std::ostream& err) {
    return guarded("cascade", err, [&] {
        const ExperimentConfig cfg = resolve_config(opts);
        const RunSetup setup = build_run(cfg);
        const CascadeSchedule schedule = cfg.cascade.schedule();
        try {
            schedule.validate(setup.params.t_end);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("cascade", 0, e.what());
        }
        const std::string hash = config_hash(cfg);
        const fs::path dir = prepare_dir(cfg);
        {
            std::ofstream os(dir / "config.ini");
            os << emit_config(cfg);
        }

        const auto t0 = std::chrono::steady_clock::now();
        FlowParams base = setup.params;
        base.step_times.clear();
        const CascadeResult result = run_cascade(schedule, base, setup.data, setup.grid, thread_count(opts.threads));
        const double runtime = seconds_since(t0);
        const double tol = cfg.audit.tolerance;

        const std::array<std::size_t, 5> lengths{schedule.v_seq.size(), schedule.epsj_seq.size(),
                                                 schedule.epsk_seq.size(), schedule.u_seq.size(),
                                                 schedule.l_seq.size()};
        json records = json::array();
        json notes = json::array();
        for (Ordering o : kOrderings) {
            const std::size_t a = static_cast<std::size_t>(o);
            if (lengths[a] < 2) continue;
            const double m = result.monotonicity_margins[a];
            records.push_back(json{{"ordering", to_string(o)},
                                   {"verdict", m >= -tol ? "pass" : "fail"},
                                   {"min_margin", num(m)},
                                   {"tolerance", tol},
                                   {"stage_differences", result.stage_differences[a]},
                                   {"config_hash", hash}});
        }
        if (records.empty()) notes.push_back("single-stage schedule: no orderings to check");
        const LimitEstimate limit = limit_extract(result, result.times.back());
        write_json(dir / "monotonicity_margins.json",
                   json{{"config_hash", hash}, {"records", records}, {"notes", notes},
                        {"limit_error", num(limit.error)}});

        // Stage CSVs: one parameter varies, the others sit at their terminal values.
        static const char* kAxisNames[5] = {"v", "eps_j", "eps_k", "u", "l"};
        std::array<std::size_t, 5> last{};
        for (std::size_t a = 0; a < 5; ++a) last[a] = lengths[a] - 1;
        for (std::size_t a = 0; a < 5; ++a) {
            Table t;
            t.header.push_back("s");
            t.columns.push_back(setup.grid.nodes());
            for (std::size_t k = 0; k < lengths[a]; ++k) {
                auto idx = last;
                idx[a] = k;
                const CascadeRun& run = result.run_at(idx);
                const double value = a == 0 ? run.tuple.v : a == 1 ? run.tuple.eps_j : a == 2 ? run.tuple.eps_k
                                   : a == 3 ? run.tuple.u : run.tuple.l;
                for (const auto& snap : run.state.snapshots) {
                    t.header.push_back(std::string(kAxisNames[a]) + "=" + fmt(value) + "@" + time_label(snap.t));
                    t.columns.push_back(snap.u.values);
                }
            }
            write_table(dir / ("stage_" + std::string(kAxisNames[a]) + ".csv"), t);
        }

        // Uniform upper bound over every member, and maximality of the terminal member
        // against the one with v, u and l at their first values.
        std::vector<AuditSubject> subjects;
        for (const auto& run : result.runs) subjects.push_back(AuditSubject{&run.state, &run.params});
        std::vector<AuditReport> reports;
        reports.push_back(audit_upper(subjects, tol));
        auto partner_idx = last;
        partner_idx[0] = partner_idx[3] = partner_idx[4] = 0;
        const CascadeRun& partner = result.run_at(partner_idx);
        reports.push_back(audit_maximality(result.terminal().state, partner.state, tol));
        write_json(dir / "cascade_audits.json", nlohmann::ordered_json::parse(audits_to_json(reports, hash)));

        // Terminal member with full diagnostics, for cmd_audit.
        const CascadeRun& term = result.terminal();
        const Field initial = make_initial(setup.data, term.params.l_index, term.params.background_spec(), setup.grid);
        const RadialGrid pinned = pin_outer_to(initial);
        const MaFlow flow(term.params, pinned);
        const FlowState state = flow.run(Field(pinned, initial.values));
        write_run(dir, state);
        write_run(dir, partner.state, "partner_");

        json summary;
        summary["config_hash"] = hash;
        summary["runs"] = result.runs.size();
        summary["terminal"] = tuple_json(term.tuple);
        summary["partner"] = tuple_json(partner.tuple);
        summary["limit_error"] = num(limit.error);
        summary["steady_residual"] = num(term.params.normalized ? steady_residual(state, term.params, flow.weights())
                                                                : std::numeric_limits<double>::quiet_NaN());
        summary["runtime_seconds"] = runtime;
        write_json(dir / "summary.json", summary);
        out << "cascade: " << result.runs.size() << " runs, wrote " << dir.string() << "\n";
        return kOk;
    });
}

int cmd_audit(const Options& opts, std::ostream& out, std::ostream& err) {
    return guarded("audit", err, [&] {
        const ExperimentConfig cfg = resolve_config(opts);
        const RunSetup setup = build_run(cfg);
        const std::string hash = config_hash(cfg);
        const fs::path dir = cfg.output_directory.empty() ? fs::path("out") : fs::path(cfg.output_directory);

        const json summary = json::parse(read_text(dir / "summary.json"), nullptr, false);
        if (summary.is_discarded()) throw MissingArtifact("summary.json is not valid JSON");
        FlowParams params = setup.params;
        std::optional<FlowState> partner;
        if (summary.contains("terminal")) {
            const auto& j = summary["terminal"];
            CascadeTuple tp;
            tp.v = j.at("v");
            tp.eps_j = j.at("eps_j");
            tp.eps_k = j.at("eps_k");
            tp.u = j.at("u");
            tp.l = j.at("l");
            params = apply_tuple(params, tp);
            partner = read_run(dir, setup.grid, false, "partner_");
        }
        const FlowState state = read_run(dir, setup.grid);
        const auto reports = run_audits(cfg, state, params, partner ? &*partner : nullptr);
        {
            std::ofstream os(dir / "audits.json");
            os << audits_to_json(reports, hash) << "\n";
        }
        std::size_t passed = 0;
        for (const auto& r : reports) passed += r.pass ? 1 : 0;
        out << "audit: " << passed << "/" << reports.size() << " pass, wrote " << (dir / "audits.json").string() << "\n";
        return kOk;
    });
}

int cmd_reference(const Options& opts, std::ostream& out, std::ostream& err) {
    return guarded("reference", err, [&] {
        ExperimentConfig cfg = resolve_config(opts);
        if (!opts.kind.empty()) {
            if (opts.kind == "flat") cfg.reference.kind = ReferenceKind::Flat;
            else if (opts.kind == "cusp_ke") cfg.reference.kind = ReferenceKind::CuspKE;
            else if (opts.kind == "cone_ke") cfg.reference.kind = ReferenceKind::ConeKE;
            else throw ConfigError("--kind", 0, "unknown reference kind '" + opts.kind + "'");
        }
        if (opts.beta) cfg.reference.beta = *opts.beta;
        if (opts.nodes) cfg.grid.n_nodes = *opts.nodes;
        const std::string hash = config_hash(cfg);
        const RadialGrid grid = make_grid(cfg.grid.s_min, cfg.grid.s_max, cfg.grid.n_nodes,
                                          BoundaryCondition::neumann_zero(), BoundaryCondition::dirichlet(0.0));
        const ReferenceMetric ref = reference(cfg.reference.kind, grid, cfg.reference.beta);
        const CurvatureReport curv = ricci_fd(ref);
        const fs::path dir = prepare_dir(cfg);

        Table t;
        t.header = {"s", "g", "ricci"};
        t.columns = {grid.nodes(), ref.coefficient.values, curv.ricci_coefficient.values};
        write_table(dir / "reference.csv", t);
        static const char* kNames[3] = {"flat", "cusp_ke", "cone_ke"};
        json j;
        j["kind"] = kNames[static_cast<int>(cfg.reference.kind)];
        j["beta"] = cfg.reference.beta;
        j["s_min"] = cfg.grid.s_min;
        j["s_max"] = cfg.grid.s_max;
        j["n_nodes"] = cfg.grid.n_nodes;
        j["einstein_residual"] = num(curv.einstein_residual);
        j["config_hash"] = hash;
        write_json(dir / "reference.json", j);
        out << "reference: einstein residual " << curv.einstein_residual << ", wrote " << dir.string() << "\n";
        return kOk;
    });
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Radial Monge-Ampere flow experiments"};
    app.require_subcommand(1);
    Options opts;
    auto common = [&](CLI::App* sub) {
        auto* cfg = sub->add_option("--config", opts.config_path, "config file");
        sub->add_option("--preset", opts.preset, "built-in configuration")->excludes(cfg);
        sub->add_option("--out", opts.out_dir, "output directory (overrides [output] directory)");
        sub->add_option("--threads", opts.threads, "worker threads, 0 for all cores");
    };
    auto* run = app.add_subcommand("run", "single flow run");
    auto* cascade = app.add_subcommand("cascade", "regularization cascade");
    auto* audit = app.add_subcommand("audit", "audits over a recorded run directory");
    auto* ref = app.add_subcommand("reference", "reference metric and curvature");
    for (auto* sub : {run, cascade, audit, ref}) common(sub);
    ref->add_option("--kind", opts.kind, "flat | cusp_ke | cone_ke");
    ref->add_option("--beta", opts.beta, "cone parameter in (0,1)");
    ref->add_option("--nodes", opts.nodes, "grid size override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }
    if (!opts.preset.empty()) {
        const auto names = preset_names();
        if (std::find(names.begin(), names.end(), opts.preset) == names.end()) {
            err << "unknown preset '" << opts.preset << "'\n";
            return kConfigError;
        }
    }
    if (*run) return cmd_run(opts, out, err);
    if (*cascade) return cmd_cascade(opts, out, err);
    if (*audit) return cmd_audit(opts, out, err);
    return cmd_reference(opts, out, err);
}

}  // namespace lcflow::cli
