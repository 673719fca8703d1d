#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace lcflow {

enum class BoundaryKind { NeumannZero, Dirichlet };

struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::Dirichlet;
    double value = 0.0;  // used only for Dirichlet

    static BoundaryCondition neumann_zero() { return {BoundaryKind::NeumannZero, 0.0}; }
    static BoundaryCondition dirichlet(double v) { return {BoundaryKind::Dirichlet, v}; }

    bool operator==(const BoundaryCondition&) const = default;
};

/**
 * Uniform mesh in the log-radius s = log|z|^2 on [s_min, s_max], s_max < 0.
 *
 * The divisor sits at s -> -inf and is never meshed; s = 0 (where log^2|z|^2
 * vanishes) is excluded by construction.
 */
class RadialGrid {
public:
    RadialGrid(double s_min, double s_max, std::size_t n_nodes,
               BoundaryCondition inner, BoundaryCondition outer);

    double s_min() const noexcept { return s_min_; }
    double s_max() const noexcept { return s_max_; }
    std::size_t size() const noexcept { return n_; }
    double spacing() const noexcept { return h_; }
    const BoundaryCondition& inner() const noexcept { return inner_; }
    const BoundaryCondition& outer() const noexcept { return outer_; }

    double node(std::size_t i) const noexcept {
        return i + 1 == n_ ? s_max_ : s_min_ + static_cast<double>(i) * h_;
    }
    std::vector<double> nodes() const;

    /// Same mesh with a different outer Dirichlet value.
    RadialGrid with_outer(BoundaryCondition outer) const;
    RadialGrid with_inner(BoundaryCondition inner) const;

    bool operator==(const RadialGrid&) const = default;

private:
    double s_min_;
    double s_max_;
    std::size_t n_;
    double h_;
    BoundaryCondition inner_;
    BoundaryCondition outer_;
};

RadialGrid make_grid(double s_min, double s_max, std::size_t n_nodes,
                     BoundaryCondition inner, BoundaryCondition outer);

/// Nodal values on a RadialGrid.
struct Field {
    RadialGrid grid;
    std::vector<double> values;

    explicit Field(const RadialGrid& g, double fill = 0.0)
        : grid(g), values(g.size(), fill) {}
    Field(const RadialGrid& g, std::vector<double> v);

    static Field from_function(const RadialGrid& g, const std::function<double(double)>& f);

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    std::span<const double> view() const noexcept { return values; }

    Field& operator+=(const Field& o);
    Field& operator-=(const Field& o);
    Field& operator*=(double a);
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double a, Field f);

/**
 * Discrete f_ss. Centered differences in the interior; at the inner end a
 * Neumann-zero boundary uses the reflected ghost node, otherwise (and at the
 * outer end) the one-sided second-order formula (2f0 - 5f1 + 4f2 - f3)/h^2.
 */
Field second_derivative(const Field& f);

/// Trapezoid quadrature of |f| * against over [s_min, s_max].
double integrate_l1(const Field& f, const Field& against);

/// max |f| excluding `interior_margin` nodes at each end.
double sup_norm(const Field& f, std::size_t interior_margin = 0);

double min_value(const Field& f, std::size_t interior_margin = 0);
double max_value(const Field& f, std::size_t interior_margin = 0);

}  // namespace lcflow
