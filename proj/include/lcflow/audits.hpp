#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "lcflow/flow.hpp"

namespace lcflow {

/// Complex dimension of the radial model.
inline constexpr int kDimension = 1;

struct AuditReport {
    std::string name;
    Field margin_field;  // pointwise slack, minimized over audited times
    std::map<std::string, double> fitted_constants;
    bool pass = false;
    double min_margin = 0.0;
    double tolerance = 0.0;
    std::string notes;
};

/// A completed run together with the parameters that produced it.
struct AuditSubject {
    const FlowState* state;
    const FlowParams* params;
};

/**
 * sup φ′ ≤ C with one C for every subject. C is the largest Dirichlet value
 * plus the largest oscillation of the background potential over the audited
 * times (φ′ + A is convex and, with a Neumann inner end, non-decreasing), so
 * it depends on the horizon and the parameter ranges only. Also checks
 * φ′ ≤ C − t Σ_k a_k log(|S_k|² + ε_k²).
 */
AuditReport audit_upper(std::span<const AuditSubject> runs, double tolerance);

/**
 * φ′ ≥ δ log|S̃|² − C_δ, with C_δ fitted at the first positive snapshot t₀
 * and checked afterwards with the allowance n ∫_{t₀}^t log τ dτ (negative
 * part only). The time-dependent barrier δ t log|S̃|² + δ Σ log|S|² − C′ is
 * checked the same way.
 */
AuditReport audit_lower(const FlowState& run, const FlowParams& params, double delta,
                        double tolerance);

/**
 * n log t + δ b − C₁ ≤ φ̇ ≤ n + (C₂ − δ b)/t with b = log|S̃|². Let t₀ be the
 * first snapshot with t ≥ t_fit. C₁ = sup [n log t + δ b − φ̇] over snapshots
 * with t ≥ t₀; the lower envelope is checked at the snapshots before t₀.
 * C₂ = H⁺ + C_up with H⁺ = sup_s [t φ̇ − (φ′ − δ b) − n t] at t₀ and C_up the
 * structural bound of audit_upper; later snapshots must satisfy the upper
 * envelope and keep t φ̇ − (φ′ − δ b) − n t ≤ H⁺. The slope of inf φ̇ against
 * log t over [1e−3, 1e−1] is reported as log_t_slope (3 snapshots or more).
 */
AuditReport audit_time_derivative(const FlowState& run, const FlowParams& params, double delta,
                                  double tolerance, double t_fit = 0.0);

/// ω̂ coefficient: θ e^s + Σ_cusp 2/log²|S|².
Field trace_reference(const FlowParams& params, const RadialGrid& grid);

/**
 * Two-sided bound on the trace ratio R = (A_ss + u_ss)/ĝ:
 *   log c + δ b/t + Σ a_k log(|S_k|²+ε_k²) − C/t ≤ log R ≤ (C − δ b)/t.
 * C = sup_s [t log R − (φ′ − δ b)] at t_fit plus the structural bound on φ′;
 * c is fitted at t_fit with that C. Both are checked at later snapshots.
 */
AuditReport audit_trace(const FlowState& run, const FlowParams& params, double delta,
                        double tolerance, double t_fit = 0.05);

/**
 * ‖φ(t) − φ(0)‖_{L¹(e^s ds)} strictly decreasing as t ↘ 0 along `times`
 * (every positive snapshot when empty) and at most `threshold` at
 * t_threshold; plus the pointwise one-sided bound
 * φ(t) − φ(0) ≥ n (t log t − t) + t (δ b − C₁) with C₁ as in audit_time_derivative.
 */
AuditReport audit_l1_continuity(const FlowState& run, const FlowParams& params, double delta,
                                const std::vector<double>& times, double threshold,
                                double t_threshold, double tolerance, double t_fit = 0.0);

/// run_a ≤ run_b + tolerance at every common snapshot.
AuditReport audit_maximality(const FlowState& run_a, const FlowState& run_b, double tolerance);

/**
 * Normalized run: sup φ̃′ ≤ C₀ (structural, as in audit_upper);
 * φ̃′ ≥ δ b − C_δ with C_δ fitted at t_fit; φ̇̃ ≤ C t e^{−t} with C fitted at t_fit.
 * All checks at t ≥ t_fit.
 */
AuditReport audit_normalized(const FlowState& run, const FlowParams& params, double delta,
                             double tolerance, double t_fit = 1.0);

/// JSON array of {name, verdict, min_margin, tolerance, constants, notes, config_hash}.
std::string audits_to_json(std::span<const AuditReport> reports, const std::string& config_hash);

}  // namespace lcflow
