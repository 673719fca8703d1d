#include "lcflow/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lcflow {

double reference_value(ReferenceKind kind, double s, double beta) {
    switch (kind) {
    case ReferenceKind::Flat:
        return 1.0;
    case ReferenceKind::CuspKE:
        return 2.0 * std::exp(-s) / (s * s);
    case ReferenceKind::ConeKE: {
        if (!(beta > 0.0 && beta < 1.0)) {
            throw std::invalid_argument("reference: cone beta must lie in (0,1)");
        }
        const double d = -std::expm1(beta * s);
        return 2.0 * beta * beta * std::exp((beta - 1.0) * s) / (d * d);
    }
    }
    return 1.0;
}

ReferenceMetric reference(ReferenceKind kind, const RadialGrid& grid, double beta) {
    if (kind == ReferenceKind::ConeKE && !(beta > 0.0 && beta < 1.0)) {
        throw std::invalid_argument("reference: cone beta must lie in (0,1)");
    }
    return {kind, beta,
            Field::from_function(grid, [&](double s) { return reference_value(kind, s, beta); })};
}

double einstein_constant(ReferenceKind kind) { return kind == ReferenceKind::Flat ? 0.0 : -1.0; }

CurvatureReport ricci_fd(const Field& g, double lambda) {
    Field log_g(g.grid);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g.values[i] > 0.0)) throw std::invalid_argument("ricci_fd: metric must be positive");
        log_g.values[i] = std::log(g.values[i]);
    }
    const Field d2 = second_derivative(log_g);
    CurvatureReport rep{Field(g.grid), 0.0};
    for (std::size_t i = 0; i < g.size(); ++i) {
        rep.ricci_coefficient.values[i] = -d2.values[i] * std::exp(-g.grid.node(i));
    }
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double r = std::abs(rep.ricci_coefficient.values[i] - lambda * g.values[i]) / g.values[i];
        rep.einstein_residual = std::max(rep.einstein_residual, r);
    }
    return rep;
}

double compare_metrics(const Field& a, const Field& b, std::size_t interior_margin) {
    if (a.size() != b.size()) throw std::invalid_argument("compare_metrics: size mismatch");
    if (2 * interior_margin >= a.size()) throw std::invalid_argument("compare_metrics: margin too large");
    double worst = 0.0;
    for (std::size_t i = interior_margin; i + interior_margin < a.size(); ++i) {
        if (!(b.values[i] > 0.0)) throw std::invalid_argument("compare_metrics: reference must be positive");
        worst = std::max(worst, std::abs(a.values[i] / b.values[i] - 1.0));
    }
    return worst;
}

double compare_metrics_on(const Field& a, const Field& b, double s_lo, double s_hi) {
    if (a.size() != b.size()) throw std::invalid_argument("compare_metrics: size mismatch");
    double worst = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double s = a.grid.node(i);
        if (s < s_lo || s > s_hi) continue;
        if (!(b.values[i] > 0.0)) throw std::invalid_argument("compare_metrics: reference must be positive");
        worst = std::max(worst, std::abs(a.values[i] / b.values[i] - 1.0));
        any = true;
    }
    if (!any) throw std::invalid_argument("compare_metrics: window contains no nodes");
    return worst;
}

Field metric_coefficient(const Field& m) {
    Field g(m.grid);
    for (std::size_t i = 0; i < m.size(); ++i) g.values[i] = m.values[i] * std::exp(-m.grid.node(i));
    return g;
}

}  // namespace lcflow
