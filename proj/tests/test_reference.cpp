#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lcflow/reference.hpp"

using namespace lcflow;

namespace {

RadialGrid grid_on(double a, double b, std::size_t n) {
    return make_grid(a, b, n, BoundaryCondition::neumann_zero(), BoundaryCondition::dirichlet(0.0));
}

// (log g)_ss by hand: cusp 2/s², cone 2β² e^{βs}/(1 − e^{βs})²
double log_g_ss(ReferenceKind kind, double s, double beta) {
    if (kind == ReferenceKind::CuspKE) return 2.0 / (s * s);
    const double e = std::exp(beta * s);
    return 2.0 * beta * beta * e / ((1.0 - e) * (1.0 - e));
}

}  // namespace

TEST_CASE("reference values") {
    CHECK(reference_value(ReferenceKind::Flat, -7.0) == 1.0);
    CHECK(reference_value(ReferenceKind::CuspKE, -1.0) == doctest::Approx(2.0 * std::exp(1.0)));
    const double s = -60.0;
    CHECK(reference_value(ReferenceKind::ConeKE, s, 0.5) / (0.5 * std::exp(-s / 2.0)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(reference(ReferenceKind::ConeKE, grid_on(-10, -1, 16), 1.5), std::invalid_argument);
    CHECK_THROWS_AS(reference(ReferenceKind::ConeKE, grid_on(-10, -1, 16), 0.0), std::invalid_argument);
    // twice the model coefficient e^{−s}/s²
    CHECK(reference_value(ReferenceKind::CuspKE, -5.0) == doctest::Approx(2.0 * std::exp(5.0) / 25.0));
}

TEST_CASE("analytic curvature of the references is Einstein") {
    for (double s : {-30.0, -10.0, -3.0, -1.0}) {
        const double g_cusp = reference_value(ReferenceKind::CuspKE, s);
        CHECK(-log_g_ss(ReferenceKind::CuspKE, s, 0.0) * std::exp(-s) == doctest::Approx(-g_cusp).epsilon(1e-13));
        for (double beta : {0.25, 0.5, 0.75}) {
            const double g = reference_value(ReferenceKind::ConeKE, s, beta);
            CHECK(-log_g_ss(ReferenceKind::ConeKE, s, beta) * std::exp(-s) == doctest::Approx(-g).epsilon(1e-12));
        }
    }
}

TEST_CASE("ricci_fd matches the analytic Ricci coefficient") {
    const RadialGrid g = grid_on(-20.0, -1.0, 1025);
    for (double beta : {0.25, 0.5, 0.75}) {
        const ReferenceMetric m = reference(ReferenceKind::ConeKE, g, beta);
        const CurvatureReport rep = ricci_fd(m);
        for (std::size_t i = 1; i + 1 < g.size(); i += 64) {
            const double s = g.node(i);
            const double exact = -log_g_ss(ReferenceKind::ConeKE, s, beta) * std::exp(-s);
            CHECK(rep.ricci_coefficient[i] == doctest::Approx(exact).epsilon(1e-4));
        }
    }
    const CurvatureReport flat = ricci_fd(reference(ReferenceKind::Flat, g));
    CHECK(sup_norm(flat.ricci_coefficient) == 0.0);
    CHECK(flat.einstein_residual == 0.0);
}

TEST_CASE("einstein residual is second order") {
    auto residual = [](ReferenceKind kind, double beta, std::size_t n) {
        return ricci_fd(reference(kind, grid_on(-20.0, -1.0, n), beta)).einstein_residual;
    };
    const double c1 = residual(ReferenceKind::CuspKE, 0.5, 513);
    const double c2 = residual(ReferenceKind::CuspKE, 0.5, 1025);
    CHECK(c1 / c2 == doctest::Approx(4.0).epsilon(0.05));
    for (double beta : {0.25, 0.5, 0.75}) {
        const double k1 = residual(ReferenceKind::ConeKE, beta, 513);
        const double k2 = residual(ReferenceKind::ConeKE, beta, 1025);
        CAPTURE(beta);
        CHECK(k1 / k2 == doctest::Approx(4.0).epsilon(0.05));
    }
    const RadialGrid big = grid_on(-50.0, -2.0, 2048);
    CHECK(ricci_fd(reference(ReferenceKind::CuspKE, big)).einstein_residual <= 1e-4);
}

TEST_CASE("ricci_fd rejects non-positive metrics") {
    const RadialGrid g = grid_on(-5.0, -1.0, 16);
    Field bad(g, 1.0);
    bad[4] = 0.0;
    CHECK_THROWS_AS(ricci_fd(bad), std::invalid_argument);
}

TEST_CASE("compare_metrics") {
    const RadialGrid g = grid_on(-40.0, -2.0, 200);
    const Field b = reference(ReferenceKind::CuspKE, g).coefficient;
    CHECK(compare_metrics(b, b) == 0.0);
    CHECK(compare_metrics(1.01 * b, b) == doctest::Approx(0.01));
    Field spiked = b;
    spiked[0] *= 2.0;
    CHECK(compare_metrics(spiked, b, 1) == 0.0);
    CHECK(compare_metrics_on(spiked, b, -30.0, -5.0) == 0.0);
    CHECK(compare_metrics_on(spiked, b, -40.0, -5.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(compare_metrics_on(b, b, -1.5, -1.2), std::invalid_argument);
}

TEST_CASE("metric_coefficient") {
    const RadialGrid g = grid_on(-10.0, -1.0, 16);
    const Field m = Field::from_function(g, [](double s) { return 2.0 / (s * s); });
    const Field c = metric_coefficient(m);
    const Field ref = reference(ReferenceKind::CuspKE, g).coefficient;
    CHECK(compare_metrics(c, ref) < 1e-14);
}
