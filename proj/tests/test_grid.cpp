#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lcflow/grid.hpp"

using namespace lcflow;

namespace {
RadialGrid grid_on(double a, double b, std::size_t n) {
    return make_grid(a, b, n, BoundaryCondition::neumann_zero(), BoundaryCondition::dirichlet(0.0));
}
}  // namespace

TEST_CASE("make_grid spacing and validation") {
    const RadialGrid g = grid_on(-50.0, -2.0, 2048);
    CHECK(g.spacing() == doctest::Approx(48.0 / 2047.0).epsilon(1e-15));
    CHECK(g.node(0) == -50.0);
    CHECK(g.node(2047) == -2.0);
    CHECK(grid_on(-10.0, -1.0, 10).spacing() == doctest::Approx(1.0));
    CHECK_THROWS_AS(grid_on(-2.0, -5.0, 16), std::invalid_argument);
    CHECK_THROWS_AS(grid_on(-2.0, 0.0, 16), std::invalid_argument);
    CHECK_THROWS_AS(grid_on(-2.0, -1.0, 7), std::invalid_argument);
}

TEST_CASE("second_derivative exactness") {
    const RadialGrid g = grid_on(-10.0, -1.0, 64);
    const Field quad = Field::from_function(g, [](double s) { return s * s; });
    const Field d2 = second_derivative(quad);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(d2[i] == doctest::Approx(2.0).epsilon(1e-9));

    const Field c = second_derivative(Field(g, 3.5));
    for (double x : c.values) CHECK(std::abs(x) < 1e-12);

    const Field affine = second_derivative(Field::from_function(g, [](double s) { return 2.0 * s - 1.0; }));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(std::abs(affine[i]) < 1e-9);
}

TEST_CASE("second_derivative boundary stencils") {
    // Dirichlet ends use the one-sided formula, exact on cubics
    const RadialGrid g = make_grid(-4.0, -1.0, 32, BoundaryCondition::dirichlet(0.0), BoundaryCondition::dirichlet(0.0));
    const Field cubic = Field::from_function(g, [](double s) { return s * s * s; });
    const Field d2 = second_derivative(cubic);
    CHECK(d2[0] == doctest::Approx(6.0 * g.node(0)).epsilon(1e-8));
    CHECK(d2[g.size() - 1] == doctest::Approx(6.0 * g.node(g.size() - 1)).epsilon(1e-8));
}

TEST_CASE("second_derivative is second order on -2 log(-s)") {
    auto worst = [](std::size_t n) {
        const RadialGrid g = grid_on(-20.0, -1.0, n);
        const Field f = Field::from_function(g, [](double s) { return -2.0 * std::log(-s); });
        const Field d2 = second_derivative(f);
        double e = 0.0;
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            const double s = g.node(i);
            e = std::max(e, std::abs(d2[i] / (2.0 / (s * s)) - 1.0));
        }
        return e;
    };
    const double e1 = worst(1025);
    const double e2 = worst(2049);
    CHECK(e1 < 1e-3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("second_derivative is linear") {
    const RadialGrid g = grid_on(-6.0, -1.0, 40);
    const Field f = Field::from_function(g, [](double s) { return std::sin(s); });
    const Field h = Field::from_function(g, [](double s) { return std::exp(s); });
    const Field lhs = second_derivative(2.5 * f + (-1.5) * h);
    const Field rhs = 2.5 * second_derivative(f) + (-1.5) * second_derivative(h);
    CHECK(sup_norm(lhs - rhs) < 1e-10);
}

TEST_CASE("integrate_l1") {
    const RadialGrid g1 = grid_on(-3.0, -1.0, 21);
    CHECK(integrate_l1(Field(g1, 0.0), Field(g1, 1.0)) == 0.0);
    CHECK(integrate_l1(Field(g1, 1.0), Field(g1, 1.0)) == doctest::Approx(2.0));

    const RadialGrid g2 = grid_on(-2.0, -1.0, 1001);
    const Field s = Field::from_function(g2, [](double x) { return x; });
    CHECK(integrate_l1(s, Field(g2, 1.0)) == doctest::Approx(1.5).epsilon(1e-6));
    CHECK_THROWS_AS(integrate_l1(s, Field(g2, 0.0)), std::invalid_argument);

    const Field small = Field::from_function(g2, [](double x) { return 0.5 * x; });
    CHECK(integrate_l1(small, Field(g2, 1.0)) <= integrate_l1(s, Field(g2, 1.0)));
}

TEST_CASE("sup_norm") {
    const RadialGrid g = grid_on(-5.0, -1.0, 17);
    CHECK(sup_norm(Field(g, -3.0)) == 3.0);
    Field spike(g, 0.5);
    spike[0] = 100.0;
    CHECK(sup_norm(spike) == 100.0);
    CHECK(sup_norm(spike, 1) == 0.5);
    CHECK(sup_norm(Field::from_function(g, [](double x) { return x; })) == 5.0);
}
