#include "lcflow/audits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lcflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NodeRange {
    std::size_t first;
    std::size_t last;  // inclusive
};

NodeRange free_nodes(const RadialGrid& g) {
    return {g.inner().kind == BoundaryKind::NeumannZero ? std::size_t{0} : std::size_t{1}, g.size() - 2};
}

// log|S̃|², or 0 without a barrier divisor.
std::vector<double> barrier_log(const BackgroundSpec& spec, const RadialGrid& g) {
    std::vector<double> b(g.size(), 0.0);
    if (!spec.stilde_index) return b;
    const auto& d = spec.divisors.at(*spec.stilde_index);
    for (std::size_t i = 0; i < g.size(); ++i) b[i] = d.log_norm2(g.node(i));
    return b;
}

// Σ_k a_k log(|S_k|² + ε_k²).
std::vector<double> canonical_log(const BackgroundSpec& spec, const RadialGrid& g) {
    std::vector<double> k(g.size(), 0.0);
    for (const auto& d : spec.divisors) {
        if (d.kind != DivisorKind::Canonical) continue;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = g.node(i);
            const double e2 = d.epsilon * d.epsilon;
            k[i] += d.coefficient * (e2 > 0.0 ? std::log(d.hermitian_scale * std::exp(s) + e2)
                                              : d.log_norm2(s));
        }
    }
    return k;
}

// Σ_i log|S_i|² over all divisors.
std::vector<double> divisor_log(const BackgroundSpec& spec, const RadialGrid& g) {
    std::vector<double> k(g.size(), 0.0);
    for (const auto& d : spec.divisors) {
        for (std::size_t i = 0; i < g.size(); ++i) k[i] += d.log_norm2(g.node(i));
    }
    return k;
}

std::vector<const Snapshot*> positive_snapshots(const FlowState& run) {
    std::vector<const Snapshot*> out;
    for (const auto& s : run.snapshots) {
        if (s.t > 0.0) out.push_back(&s);
    }
    std::sort(out.begin(), out.end(), [](auto* a, auto* b) { return a->t < b->t; });
    return out;
}

const Snapshot* initial_snapshot(const FlowState& run) {
    for (const auto& s : run.snapshots) {
        if (s.t == 0.0) return &s;
    }
    return nullptr;
}

// Largest Dirichlet value plus the largest oscillation of A over `times`.
double structural_bound(const FlowState& run, const FlowParams& params, const std::vector<double>& times) {
    const RadialGrid& g = run.u.grid;
    double boundary = g.outer().value;
    if (g.inner().kind == BoundaryKind::Dirichlet) boundary = std::max(boundary, g.inner().value);
    const BackgroundFamily family(params.background_spec(), g);
    double osc = 0.0;
    for (double t : times) {
        const Background bg = family.at(t);
        osc = std::max(osc, max_value(bg.potential) - min_value(bg.potential));
    }
    return boundary + osc;
}

std::vector<double> audit_times(const FlowState& run, double t_end) {
    std::vector<double> ts{0.0, t_end};
    for (const auto& s : run.snapshots) ts.push_back(s.t);
    return ts;
}

void finish(AuditReport& r, double tolerance) {
    r.tolerance = tolerance;
    r.min_margin = kInf;
    for (std::size_t i = 0; i < r.margin_field.size(); ++i) {
        r.min_margin = std::min(r.min_margin, r.margin_field.values[i]);
    }
    for (const auto& [key, value] : r.fitted_constants) {
        if (key.rfind("min_margin_", 0) == 0) r.min_margin = std::min(r.min_margin, value);
    }
    r.pass = r.min_margin >= -tolerance;
}

void note(AuditReport& r, const std::string& text) {
    if (!r.notes.empty()) r.notes += "; ";
    r.notes += text;
}

// Λ(t) = ∫_0^t log τ dτ.
double log_integral(double t) { return t > 0.0 ? t * std::log(t) - t : 0.0; }

}  // namespace

AuditReport audit_upper(std::span<const AuditSubject> runs, double tolerance) {
    if (runs.empty()) throw std::invalid_argument("audit_upper: no runs");
    const RadialGrid& g = runs.front().state->u.grid;
    AuditReport r{"upper", Field(g, kInf), {}, false, 0.0, 0.0, ""};
    double c = -kInf;
    for (const auto& sub : runs) {
        c = std::max(c, structural_bound(*sub.state, *sub.params, audit_times(*sub.state, sub.params->t_end)));
    }
    double shifted = kInf;
    double sup_phi = -kInf;
    for (const auto& sub : runs) {
        if (sub.state->u.size() != g.size()) throw std::invalid_argument("audit_upper: runs on different grids");
        const auto k = canonical_log(sub.params->background_spec(), g);
        for (const auto& snap : sub.state->snapshots) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double phi = snap.u.values[i];
                sup_phi = std::max(sup_phi, phi);
                r.margin_field.values[i] = std::min(r.margin_field.values[i], c - phi);
                shifted = std::min(shifted, c - snap.t * k[i] - phi);
            }
        }
    }
    r.fitted_constants["C"] = c;
    r.fitted_constants["sup_phi"] = sup_phi;
    r.fitted_constants["runs"] = static_cast<double>(runs.size());
    r.fitted_constants["min_margin_shifted"] = shifted;
    finish(r, tolerance);
    return r;
}

AuditReport audit_lower(const FlowState& run, const FlowParams& params, double delta,
                        double tolerance) {
    const RadialGrid& g = run.u.grid;
    const BackgroundSpec spec = params.background_spec();
    const auto b = barrier_log(spec, g);
    const auto sum_log = divisor_log(spec, g);
    const auto snaps = positive_snapshots(run);
    AuditReport r{"lower", Field(g, kInf), {}, false, 0.0, 0.0, ""};
    if (snaps.empty()) throw std::invalid_argument("audit_lower: run has no positive snapshot");
    const Snapshot& s0 = *snaps.front();
    double c_delta = -kInf;
    double c_improved = -kInf;
    for (std::size_t i = 0; i < g.size(); ++i) {
        c_delta = std::max(c_delta, delta * b[i] - s0.u.values[i]);
        c_improved = std::max(c_improved, delta * s0.t * b[i] + delta * sum_log[i] - s0.u.values[i]);
    }
    double improved = kInf;
    for (const Snapshot* s : snaps) {
        if (s == &s0) continue;
        const double allowance = kDimension * std::min(0.0, log_integral(s->t) - log_integral(s0.t));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double phi = s->u.values[i];
            r.margin_field.values[i] = std::min(r.margin_field.values[i],
                                                phi - (delta * b[i] - c_delta + allowance));
            improved = std::min(improved,
                                phi - (delta * s->t * b[i] + delta * sum_log[i] - c_improved + allowance));
        }
    }
    if (snaps.size() == 1) r.margin_field = Field(g, 0.0);
    r.fitted_constants["C_delta"] = c_delta;
    r.fitted_constants["C_improved"] = c_improved;
    r.fitted_constants["delta"] = delta;
    r.fitted_constants["t_fit"] = s0.t;
    if (std::isfinite(improved)) r.fitted_constants["min_margin_improved"] = improved;
    finish(r, tolerance);
    return r;
}

namespace {

struct RateConstants {
    const Snapshot* fit = nullptr;
    double c_up = 0.0;      // structural bound on φ′
    double h_plus = 0.0;    // sup_s [t φ̇ − (φ′ − δ b) − n t] at the fit time
    double c1 = 0.0;        // sup over t ≥ t_fit of sup_s [n log t + δ b − φ̇]
    double c2 = 0.0;        // h_plus + c_up
};

// C₂ comes from the fit snapshot and is checked forward in time. C₁ is
// calibrated on [t_fit, T] and checked backward toward t = 0, where the
// n log t rate is the actual claim.
RateConstants fit_rate_constants(const FlowState& run, const FlowParams& params,
                                 const std::vector<double>& b, double delta, double t_fit) {
    const NodeRange nodes = free_nodes(run.u.grid);
    RateConstants rc;
    for (const Snapshot* s : positive_snapshots(run)) {
        if (s->udot && s->t >= t_fit * (1.0 - 1e-12)) {
            rc.fit = s;
            break;
        }
    }
    if (!rc.fit) return rc;
    const double n = kDimension;
    const double t0 = rc.fit->t;
    rc.c_up = structural_bound(run, params, audit_times(run, params.t_end));
    rc.h_plus = -kInf;
    for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
        const double rate = rc.fit->udot->values[i];
        const double shifted = rc.fit->u.values[i] - delta * b[i];
        rc.h_plus = std::max(rc.h_plus, t0 * rate - shifted - n * t0);
    }
    rc.c1 = -kInf;
    for (const Snapshot* s : positive_snapshots(run)) {
        if (s->t < t0 || !s->udot) continue;
        for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
            rc.c1 = std::max(rc.c1, n * std::log(s->t) + delta * b[i] - s->udot->values[i]);
        }
    }
    rc.c2 = rc.h_plus + rc.c_up;
    return rc;
}

}  // namespace

AuditReport audit_time_derivative(const FlowState& run, const FlowParams& params, double delta,
                                  double tolerance, double t_fit) {
    const RadialGrid& g = run.u.grid;
    const NodeRange nodes = free_nodes(g);
    const auto b = barrier_log(params.background_spec(), g);
    const RateConstants rc = fit_rate_constants(run, params, b, delta, t_fit);
    if (!rc.fit) throw std::invalid_argument("audit_time_derivative: no snapshot with a rate");
    AuditReport r{"time_derivative", Field(g, kInf), {}, false, 0.0, 0.0, ""};
    const double n = kDimension;
    const Snapshot& s0 = *rc.fit;

    std::vector<double> lower(g.size(), kInf);
    double upper = kInf;
    double h_plus = kInf;  // C_H⁺ − H⁺(t): the maximum principle keeps it ≥ 0
    for (const Snapshot* s : positive_snapshots(run)) {
        if (s == &s0 || !s->udot) continue;
        for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
            const double rate = s->udot->values[i];
            if (s->t < s0.t) {
                lower[i] = std::min(lower[i], rate - (n * std::log(s->t) + delta * b[i] - rc.c1));
                continue;
            }
            upper = std::min(upper, n + (rc.c2 - delta * b[i]) / s->t - rate);
            const double hp = s->t * rate - (s->u.values[i] - delta * b[i]) - n * s->t;
            h_plus = std::min(h_plus, rc.h_plus - hp);
        }
    }
    bool early = false;
    for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
        if (std::isfinite(lower[i])) {
            r.margin_field.values[i] = lower[i];
            early = true;
        }
    }
    if (!early) note(r, "no snapshot before the fit time; lower envelope not tested");
    r.fitted_constants["C1"] = rc.c1;
    r.fitted_constants["C2"] = rc.c2;
    r.fitted_constants["C_upper"] = rc.c_up;
    r.fitted_constants["H_plus"] = rc.h_plus;
    r.fitted_constants["delta"] = delta;
    r.fitted_constants["t_fit"] = s0.t;
    if (std::isfinite(upper)) r.fitted_constants["min_margin_upper"] = upper;
    if (std::isfinite(h_plus)) r.fitted_constants["min_margin_h_plus"] = h_plus;

    // Regression of inf φ̇ against log t.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const Snapshot* s : positive_snapshots(run)) {
        if (!s->udot || s->t < 1e-3 * (1 - 1e-9) || s->t > 1e-1 * (1 + 1e-9)) continue;
        double inf_rate = kInf;
        for (std::size_t i = nodes.first; i <= nodes.last; ++i) inf_rate = std::min(inf_rate, s->udot->values[i]);
        const double x = std::log(s->t);
        sx += x;
        sy += inf_rate;
        sxx += x * x;
        sxy += x * inf_rate;
        ++m;
    }
    finish(r, tolerance);
    if (m >= 3) {
        const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        r.fitted_constants["log_t_slope"] = slope;
    } else {
        note(r, "fewer than 3 snapshots in [1e-3, 1e-1]; slope not measured");
    }
    return r;
}

Field trace_reference(const FlowParams& params, const RadialGrid& grid) {
    const BackgroundSpec spec = params.background_spec();
    Field g(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double s = grid.node(i);
        double v = spec.theta_scale * std::exp(s);
        for (const auto& d : spec.divisors) {
            if (d.kind == DivisorKind::Cusp) v += cg_potential_ss(s, d.hermitian_scale);
            if (d.kind == DivisorKind::Conic) {
                v += spec.eta * conic_regularizer_dss(d.hermitian_scale * std::exp(s), d.beta(),
                                                      d.epsilon * d.epsilon);
            }
        }
        if (!(v > 0.0)) throw std::invalid_argument("trace_reference: reference form is not positive");
        g.values[i] = v;
    }
    return g;
}

AuditReport audit_trace(const FlowState& run, const FlowParams& params, double delta,
                        double tolerance, double t_fit) {
    const RadialGrid& g = run.u.grid;
    const NodeRange nodes = free_nodes(g);
    const BackgroundSpec spec = params.background_spec();
    const auto b = barrier_log(spec, g);
    const auto k = canonical_log(spec, g);
    const Field ghat = trace_reference(params, g);
    std::vector<const Snapshot*> snaps;
    for (const Snapshot* s : positive_snapshots(run)) {
        if (s->metric && s->udot && s->t >= t_fit * (1.0 - 1e-12)) snaps.push_back(s);
    }
    if (snaps.empty()) throw std::invalid_argument("audit_trace: no snapshot at or after the fit time");
    AuditReport r{"trace", Field(g, kInf), {}, false, 0.0, 0.0, ""};
    const Snapshot& s0 = *snaps.front();
    auto log_ratio = [&](const Snapshot& s, std::size_t i) {
        return std::log(s.metric->values[i] / ghat.values[i]);
    };
    // G = t log R − (φ′ − δ b) is fitted; C adds the structural bound on φ′.
    const double c_up = structural_bound(run, params, audit_times(run, params.t_end));
    double c_g = -kInf;
    for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
        c_g = std::max(c_g, s0.t * log_ratio(s0, i) - (s0.u.values[i] - delta * b[i]));
    }
    const double c = c_g + c_up;
    // Lower side: log R = φ̇ + F(s) exactly in one dimension (F time-independent),
    // so log R ≥ K + φ̇ − C_det. With φ̇ ≥ n log t + δ b − C₁, n log t ≥ −n/(e t)
    // and δ b ≥ δ b/t for t ≤ 1 this gives the e^{−C/t} form with C = n/e.
    const RateConstants rc = fit_rate_constants(run, params, b, delta, t_fit);
    if (!rc.fit) throw std::invalid_argument("audit_trace: no rate at the fit time");
    double c_det = -kInf;
    double c_det_ablation = -kInf;
    for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
        const double gap = s0.udot->values[i] - log_ratio(s0, i);
        c_det = std::max(c_det, gap + k[i]);
        c_det_ablation = std::max(c_det_ablation, gap);
    }
    const double c_low = kDimension / std::exp(1.0);
    const double log_c = -(rc.c1 + c_det);
    const double log_c_ablation = -(rc.c1 + c_det_ablation);
    if (params.t_end > 1.0) note(r, "lower form assumes t <= 1");
    double lower = kInf;
    double ablation = kInf;
    double sup_uss = 0.0;
    std::vector<double> upper(g.size(), kInf);
    for (const Snapshot* s : snaps) {
        if (s == &s0) continue;
        const Field uss = second_derivative(s->u);
        for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
            const double lr = log_ratio(*s, i);
            upper[i] = std::min(upper[i], (c - delta * b[i]) / s->t - lr);
            const double base = delta * b[i] / s->t - c_low / s->t;
            lower = std::min(lower, lr - (log_c + base + k[i]));
            ablation = std::min(ablation, lr - (log_c_ablation + base));
            if (i > 0) sup_uss = std::max(sup_uss, std::abs(uss.values[i]));
        }
    }
    for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
        if (std::isfinite(upper[i])) r.margin_field.values[i] = upper[i];
    }
    r.fitted_constants["C_delta"] = c;
    r.fitted_constants["C_G"] = c_g;
    r.fitted_constants["C_upper"] = c_up;
    r.fitted_constants["log_c_delta"] = log_c;
    r.fitted_constants["C_lower"] = c_low;
    r.fitted_constants["C_det"] = c_det;
    r.fitted_constants["C1"] = rc.c1;
    r.fitted_constants["delta"] = delta;
    r.fitted_constants["t_fit"] = s0.t;
    r.fitted_constants["sup_abs_u_ss"] = sup_uss;
    if (std::isfinite(lower)) {
        r.fitted_constants["min_margin_lower"] = lower;
        r.fitted_constants["ablation_lower_margin"] = ablation;
    } else {
        note(r, "no snapshot after the fit time");
    }
    finish(r, tolerance);
    return r;
}

AuditReport audit_l1_continuity(const FlowState& run, const FlowParams& params, double delta,
                                const std::vector<double>& times, double threshold,
                                double t_threshold, double tolerance, double t_fit) {
    const RadialGrid& g = run.u.grid;
    const Snapshot* s0 = initial_snapshot(run);
    if (!s0) throw std::invalid_argument("audit_l1_continuity: run has no t = 0 snapshot");
    std::vector<const Snapshot*> snaps;
    if (times.empty()) {
        snaps = positive_snapshots(run);
    } else {
        std::vector<double> sorted(times);
        std::sort(sorted.begin(), sorted.end());
        for (double t : sorted) {
            const Snapshot* s = run.snapshot_at(t);
            if (!s) {
                std::ostringstream msg;
                msg << "audit_l1_continuity: no snapshot at t = " << t;
                throw std::invalid_argument(msg.str());
            }
            snaps.push_back(s);
        }
    }
    if (snaps.empty()) throw std::invalid_argument("audit_l1_continuity: run has no positive snapshot");
    const Field measure = Field::from_function(g, [](double s) { return std::exp(s); });
    AuditReport r{"l1_continuity", Field(g, kInf), {}, false, 0.0, 0.0, ""};

    std::vector<double> dist;
    for (const Snapshot* s : snaps) dist.push_back(integrate_l1(s->u - s0->u, measure));
    double monotone = kInf;  // min over consecutive pairs of d(t_{k+1}) − d(t_k)
    for (std::size_t k = 0; k + 1 < dist.size(); ++k) monotone = std::min(monotone, dist[k + 1] - dist[k]);
    std::ostringstream os;
    os.precision(6);
    for (std::size_t k = 0; k < snaps.size(); ++k) os << (k ? " " : "") << "d(" << snaps[k]->t << ")=" << dist[k];
    note(r, os.str());
    if (std::isfinite(monotone)) r.fitted_constants["min_increment"] = monotone;
    bool found = false;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        if (std::abs(snaps[k]->t - t_threshold) <= 1e-12 * std::max(1.0, t_threshold)) {
            r.fitted_constants["l1_at_threshold_time"] = dist[k];
            r.fitted_constants["min_margin_threshold"] = threshold - dist[k];
            found = true;
        }
    }
    if (!found) {
        r.fitted_constants["min_margin_threshold"] = -kInf;
        note(r, "no snapshot at the threshold time");
    }

    // φ(t) − φ(0) ≥ ∫_0^t (n log τ + δ b − C₁) dτ.
    const auto b = barrier_log(params.background_spec(), g);
    const RateConstants rc = fit_rate_constants(run, params, b, delta, t_fit);
    if (rc.fit) {
        r.fitted_constants["C1"] = rc.c1;
        for (const Snapshot* s : snaps) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double bound = kDimension * log_integral(s->t) + s->t * (delta * b[i] - rc.c1);
                r.margin_field.values[i] =
                    std::min(r.margin_field.values[i], s->u.values[i] - s0->u.values[i] - bound);
            }
        }
    } else {
        r.margin_field = Field(g, 0.0);
        note(r, "no rate recorded; integral bound skipped");
    }
    finish(r, tolerance);
    const bool stationary =
        std::all_of(dist.begin(), dist.end(), [&](double d) { return std::abs(d) <= tolerance; });
    if (stationary) {
        note(r, "stationary run: distance vanishes identically");
    } else if (std::isfinite(monotone) && !(monotone > 0.0)) {
        r.pass = false;
        note(r, "distance is not strictly decreasing as t decreases");
    }
    return r;
}


AuditReport audit_maximality(const FlowState& run_a, const FlowState& run_b, double tolerance) {
    const RadialGrid& g = run_b.u.grid;
    if (run_a.u.size() != g.size()) throw std::invalid_argument("audit_maximality: grids differ");
    AuditReport r{"maximality", Field(g, kInf), {}, false, 0.0, 0.0, ""};
    int common = 0;
    for (const auto& sb : run_b.snapshots) {
        const Snapshot* sa = run_a.snapshot_at(sb.t);
        if (!sa) continue;
        ++common;
        for (std::size_t i = 0; i < g.size(); ++i) {
            r.margin_field.values[i] = std::min(r.margin_field.values[i], sb.u.values[i] - sa->u.values[i]);
        }
    }
    if (common == 0) throw std::invalid_argument("audit_maximality: no common snapshot times");
    r.fitted_constants["common_snapshots"] = common;
    finish(r, tolerance);
    return r;
}

AuditReport audit_normalized(const FlowState& run, const FlowParams& params, double delta,
                             double tolerance, double t_fit) {
    if (!params.normalized) throw std::invalid_argument("audit_normalized: normalized run required");
    const RadialGrid& g = run.u.grid;
    const NodeRange nodes = free_nodes(g);
    const auto b = barrier_log(params.background_spec(), g);
    std::vector<const Snapshot*> snaps;
    for (const Snapshot* s : positive_snapshots(run)) {
        if (s->t >= t_fit * (1.0 - 1e-12)) snaps.push_back(s);
    }
    if (snaps.empty()) throw std::invalid_argument("audit_normalized: no snapshot at or after the fit time");
    AuditReport r{"normalized", Field(g, kInf), {}, false, 0.0, 0.0, ""};

    const double c0 = structural_bound(run, params, audit_times(run, params.t_end));
    const Snapshot& s0 = *snaps.front();
    double c_delta = -kInf;
    for (std::size_t i = 0; i < g.size(); ++i) c_delta = std::max(c_delta, delta * b[i] - s0.u.values[i]);
    double c_rate = 0.0;
    if (s0.udot) {
        for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
            c_rate = std::max(c_rate, s0.udot->values[i] / (s0.t * std::exp(-s0.t)));
        }
    }
    double lower = kInf;
    double rate = kInf;
    for (const Snapshot* s : snaps) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            r.margin_field.values[i] = std::min(r.margin_field.values[i], c0 - s->u.values[i]);
            lower = std::min(lower, s->u.values[i] - (delta * b[i] - c_delta));
        }
        if (s->udot) {
            const double env = c_rate * s->t * std::exp(-s->t);
            for (std::size_t i = nodes.first; i <= nodes.last; ++i) {
                rate = std::min(rate, env - s->udot->values[i]);
            }
        }
    }
    r.fitted_constants["C0"] = c0;
    r.fitted_constants["C_delta"] = c_delta;
    r.fitted_constants["C_rate"] = c_rate;
    r.fitted_constants["delta"] = delta;
    r.fitted_constants["t_fit"] = s0.t;
    r.fitted_constants["min_margin_lower"] = lower;
    if (std::isfinite(rate)) r.fitted_constants["min_margin_rate"] = rate;
    finish(r, tolerance);
    return r;
}

std::string audits_to_json(std::span<const AuditReport> reports, const std::string& config_hash) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["name"] = r.name;
        j["verdict"] = r.pass ? "pass" : "fail";
        j["min_margin"] = std::isfinite(r.min_margin) ? nlohmann::ordered_json(r.min_margin) : nullptr;
        j["tolerance"] = r.tolerance;
        nlohmann::ordered_json c = nlohmann::ordered_json::object();
        for (const auto& [key, value] : r.fitted_constants) {
            c[key] = std::isfinite(value) ? nlohmann::ordered_json(value) : nullptr;
        }
        j["constants"] = c;
        j["notes"] = r.notes;
        j["config_hash"] = config_hash;
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

}  // namespace lcflow
