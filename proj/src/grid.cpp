#include "lcflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lcflow {

RadialGrid::RadialGrid(double s_min, double s_max, std::size_t n_nodes,
                       BoundaryCondition inner, BoundaryCondition outer)
    : s_min_(s_min), s_max_(s_max), n_(n_nodes), h_(0.0), inner_(inner), outer_(outer) {
    if (!std::isfinite(s_min) || !std::isfinite(s_max)) {
        throw std::invalid_argument("grid bounds must be finite");
    }
    if (s_max >= 0.0) {
        throw std::invalid_argument("s_max must be < 0 (log^2|z|^2 vanishes at s = 0)");
    }
    if (s_min >= s_max) {
        throw std::invalid_argument("s_min must be less than s_max");
    }
    if (n_nodes < 8) {
        throw std::invalid_argument("grid needs at least 8 nodes, got " + std::to_string(n_nodes));
    }
    if (outer.kind != BoundaryKind::Dirichlet) {
        throw std::invalid_argument("outer boundary must be Dirichlet");
    }
    h_ = (s_max - s_min) / static_cast<double>(n_nodes - 1);
}

RadialGrid make_grid(double s_min, double s_max, std::size_t n_nodes,
                     BoundaryCondition inner, BoundaryCondition outer) {
    return RadialGrid(s_min, s_max, n_nodes, inner, outer);
}

std::vector<double> RadialGrid::nodes() const {
    std::vector<double> s(n_);
    for (std::size_t i = 0; i < n_; ++i) s[i] = node(i);
    return s;
}

RadialGrid RadialGrid::with_outer(BoundaryCondition outer) const {
    return RadialGrid(s_min_, s_max_, n_, inner_, outer);
}

RadialGrid RadialGrid::with_inner(BoundaryCondition inner) const {
    return RadialGrid(s_min_, s_max_, n_, inner, outer_);
}

Field::Field(const RadialGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) {
        throw std::invalid_argument("field length does not match grid");
    }
}

Field Field::from_function(const RadialGrid& g, const std::function<double(double)>& f) {
    Field out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = f(g.node(i));
    return out;
}

Field& Field::operator+=(const Field& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    return *this;
}

Field& Field::operator-=(const Field& o) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
    return *this;
}

Field& Field::operator*=(double a) {
    for (double& v : values) v *= a;
    return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double a, Field f) { return f *= a; }

Field second_derivative(const Field& f) {
    const auto& g = f.grid;
    const std::size_t n = g.size();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    const auto& v = f.values;
    Field out(g);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out.values[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) * inv_h2;
    }
    if (g.inner().kind == BoundaryKind::NeumannZero) {
        out.values[0] = 2.0 * (v[1] - v[0]) * inv_h2;
    } else {
        out.values[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * inv_h2;
    }
    out.values[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) * inv_h2;
    return out;
}

double integrate_l1(const Field& f, const Field& against) {
    if (f.size() != against.size()) {
        throw std::invalid_argument("integrate_l1: field and measure lengths differ");
    }
    for (double w : against.values) {
        if (!(w > 0.0)) throw std::invalid_argument("integrate_l1: measure must be strictly positive");
    }
    const std::size_t n = f.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 0.5 : 1.0;
        sum += w * std::abs(f.values[i]) * against.values[i];
    }
    return sum * f.grid.spacing();
}

namespace {
void check_margin(const Field& f, std::size_t margin) {
    if (2 * margin >= f.size()) {
        throw std::invalid_argument("interior_margin must be < n_nodes/2");
    }
}
}  // namespace

double sup_norm(const Field& f, std::size_t interior_margin) {
    check_margin(f, interior_margin);
    double m = 0.0;
    for (std::size_t i = interior_margin; i + interior_margin < f.size(); ++i) {
        m = std::max(m, std::abs(f.values[i]));
    }
    return m;
}

double min_value(const Field& f, std::size_t interior_margin) {
    check_margin(f, interior_margin);
    return *std::min_element(f.values.begin() + static_cast<std::ptrdiff_t>(interior_margin),
                             f.values.end() - static_cast<std::ptrdiff_t>(interior_margin));
}

double max_value(const Field& f, std::size_t interior_margin) {
    check_margin(f, interior_margin);
    return *std::max_element(f.values.begin() + static_cast<std::ptrdiff_t>(interior_margin),
                             f.values.end() - static_cast<std::ptrdiff_t>(interior_margin));
}

}  // namespace lcflow
