#pragma once

#include <cstddef>

#include "lcflow/grid.hpp"

namespace lcflow {

enum class ReferenceKind { Flat, CuspKE, ConeKE };

/// Metric coefficient g(s) in ω = g(s) i dz∧dz̄.
struct ReferenceMetric {
    ReferenceKind kind;
    double beta;  // ConeKE only
    Field coefficient;
};

/**
 * Exact coefficients with Ric = −ω:
 *   CuspKE     2 e^{−s} / s²
 *   ConeKE(β)  2β² e^{(β−1)s} / (1 − e^{βs})²
 *   Flat       1
 * Throws std::invalid_argument if β ∉ (0,1) for the cone.
 */
ReferenceMetric reference(ReferenceKind kind, const RadialGrid& grid, double beta = 0.5);
double reference_value(ReferenceKind kind, double s, double beta = 0.5);

struct CurvatureReport {
    Field ricci_coefficient;   // −(log g)_ss e^{−s}
    double einstein_residual;  // sup over interior nodes of |Ric − λ g| / g
};

/// λ in Ric = λ ω: 0 for Flat, −1 for the KE kinds.
double einstein_constant(ReferenceKind kind);

/// Throws std::invalid_argument if g <= 0 somewhere.
CurvatureReport ricci_fd(const Field& g, double lambda = -1.0);
inline CurvatureReport ricci_fd(const ReferenceMetric& m) {
    return ricci_fd(m.coefficient, einstein_constant(m.kind));
}

/// sup |a/b − 1| over nodes at least `interior_margin` away from either end.
double compare_metrics(const Field& a, const Field& b, std::size_t interior_margin = 0);

/// Same, restricted to nodes with s in [s_lo, s_hi].
double compare_metrics_on(const Field& a, const Field& b, double s_lo, double s_hi);

/// Metric coefficient (A_ss + u_ss) e^{−s} of a flow state given A_ss + u_ss.
Field metric_coefficient(const Field& a_ss_plus_u_ss);

}  // namespace lcflow
