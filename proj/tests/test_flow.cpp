#include <doctest.h>

#include <cmath>

#include "lcflow/error.hpp"
#include "lcflow/flow.hpp"

using namespace lcflow;

namespace {

RadialGrid grid_on(double a, double b, std::size_t n, double outer = 0.0) {
    return make_grid(a, b, n, BoundaryCondition::neumann_zero(), BoundaryCondition::dirichlet(outer));
}

// Single cusp with (t+v) = 1 at t = 0: A_ss = 2/s² exactly.
FlowParams cusp_params(bool normalized) {
    FlowParams p;
    p.background.divisors = {DivisorSpec::cusp()};
    p.background.v = 1.0;
    p.background.stilde_index = 0;
    p.normalized = normalized;
    return p;
}

FlowParams flat_params() {
    FlowParams p;
    p.background.u = 1.0;
    return p;
}

double interior_sup_diff(const Field& a, const Field& b) {
    double d = 0.0;
    for (std::size_t i = 0; i + 1 < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("make_initial kinds") {
    const RadialGrid g = grid_on(-30.0, -1.0, 60);
    BackgroundSpec none;
    none.u = 1.0;
    const Field zero = make_initial(InitialData::zero(), 1, none, g);
    CHECK(sup_norm(zero) == 0.0);

    const Field p5 = make_initial(InitialData::zero_lelong_pole(3.0), 5, none, g);
    const Field p6 = make_initial(InitialData::zero_lelong_pole(3.0), 6, none, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = g.node(i);
        CHECK(p5[i] == doctest::Approx(std::max(-3.0 * std::log(-s), -5.0)));
        CHECK(p6[i] <= p5[i]);
    }

    BackgroundSpec cone;
    cone.eta = 1.0;
    cone.divisors = {DivisorSpec::conic(0.5, 0.1)};
    const Field c = make_initial(InitialData::zero(), 1, cone, g);
    for (std::size_t i = 0; i < g.size(); i += 7) {
        CHECK(c[i] == doctest::Approx(-conic_regularizer(std::exp(g.node(i)), 0.5, 0.01)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(make_initial(InitialData::zero_lelong_pole(-1.0), 1, none, g), std::invalid_argument);
    const Field concave = Field::from_function(g, [](double s) { return -s * s; });
    CHECK_THROWS_AS(make_initial(InitialData::smooth(concave), 1, none, g), std::invalid_argument);
}

TEST_CASE("ma_rhs closed forms") {
    const RadialGrid g = grid_on(-40.0, -2.0, 100);
    {
        const FlowParams p = cusp_params(false);
        const WeightTable w = weight_table(p.background_spec(), g);
        const FlowState st{Field(g), 0.0, 0, {}, {}};
        const Field r = ma_rhs(st, p, w);
        for (std::size_t i = 0; i + 1 < g.size(); ++i) CHECK(r[i] == doctest::Approx(std::log(2.0)).epsilon(1e-13));
        CHECK(r[g.size() - 1] == 0.0);
    }
    {
        const FlowParams p = flat_params();
        const WeightTable w = weight_table(p.background_spec(), g);
        const FlowState st{Field(g), 0.0, 0, {}, {}};
        CHECK(sup_norm(ma_rhs(st, p, w)) < 1e-13);
    }
    {
        // normalized at t = 0 with v = 1: c = 1 + v − e^0 = 1
        const FlowParams p = cusp_params(true);
        const WeightTable w = weight_table(p.background_spec(), g);
        const FlowState st{Field(g, std::log(2.0)), 0.0, 0, {}, {}};
        CHECK(sup_norm(ma_rhs(st, p, w)) < 1e-13);
    }
    {
        // metric not positive
        FlowParams p = flat_params();
        const WeightTable w = weight_table(p.background_spec(), g);
        const FlowState st{Field::from_function(g, [](double s) { return -s * s; }), 0.0, 0, {}, {}};
        CHECK_THROWS_AS(ma_rhs(st, p, w), NonPositiveMetric);
    }
}

TEST_CASE("implicit_step closed forms") {
    const RadialGrid g = grid_on(-40.0, -2.0, 100);
    const double dt = 0.01;
    {
        const FlowParams p = flat_params();
        const WeightTable w = weight_table(p.background_spec(), g);
        const FlowState st{Field(g, 0.0), 0.0, 0, {}, {}};
        const auto [next, rep] = implicit_step(st, dt, p, w);
        CHECK(rep.accepted);
        CHECK(rep.residual <= p.newton_tol);
        CHECK(sup_norm(next.u) < 1e-12);
        CHECK(next.t == doctest::Approx(dt));
    }
    {
        // unnormalized: c(t) = t + v, so the constant solution moves by dt log(2(1 + dt))
        const FlowParams p = cusp_params(false);
        const WeightTable w = weight_table(p.background_spec(), g);
        const double expect = dt * std::log(2.0 * (1.0 + dt));
        FlowState st{Field(g, 0.0), 0.0, 0, {}, {}};
        st.u[g.size() - 1] = expect;
        const auto [next, rep] = implicit_step(st, dt, p, w);
        for (double x : next.u.values) CHECK(x == doctest::Approx(expect).epsilon(1e-10));
    }
    {
        // normalized: u_new = (u_old + dt log(2 c(dt))) / (1 + dt), c(t) = 1 + v − e^{−t}
        const FlowParams p = cusp_params(true);
        const WeightTable w = weight_table(p.background_spec(), g);
        const double u_old = 0.3;
        const double expect = (u_old + dt * std::log(2.0 * (2.0 - std::exp(-dt)))) / (1.0 + dt);
        FlowState st{Field(g, u_old), 0.0, 0, {}, {}};
        st.u[g.size() - 1] = expect;
        const auto [next, rep] = implicit_step(st, dt, p, w);
        for (double x : next.u.values) CHECK(x == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("run_flow basics") {
    const RadialGrid g = grid_on(-30.0, -2.0, 128);
    {
        FlowParams p = flat_params();
        p.t_end = 1.0;
        const WeightTable w = weight_table(p.background_spec(), g);
        const FlowState st = run_flow(p, Field(g), w);
        CHECK(st.t == doctest::Approx(1.0));
        CHECK(sup_norm(st.u) <= 1e-8);
        for (const auto& row : st.diagnostics) CHECK(row.min_metric > 0.0);
    }
    {
        FlowParams p = flat_params();
        p.t_end = 1e-4;
        p.dt_init = 1e-3;
        const WeightTable w = weight_table(p.background_spec(), g);
        const FlowState st = run_flow(p, Field(g), w);
        CHECK(st.step_count == 1);
        CHECK(st.t == doctest::Approx(1e-4));
    }
}

TEST_CASE("normalize_transform") {
    const RadialGrid g = grid_on(-10.0, -1.0, 16);
    auto constant = [&](double) { return Field(g, 2.0); };
    CHECK(normalize_transform(constant, 0.0)[3] == 2.0);
    CHECK(normalize_transform(constant, 1.5)[3] == doctest::Approx(2.0 * std::exp(-1.5)));
    auto linear = [&](double t) { return Field(g, t * std::log(2.0)); };
    const double tt = 0.7;
    CHECK(normalize_transform(linear, tt)[0] ==
          doctest::Approx(std::exp(-tt) * (std::exp(tt) - 1.0) * std::log(2.0)));
}

TEST_CASE("steady_residual") {
    const RadialGrid g = grid_on(-40.0, -2.0, 100);
    FlowParams p = cusp_params(true);
    p.background.v = 0.0;
    const WeightTable w = weight_table(p.background_spec(), g);
    // c(50) = 1 − e^{−50}
    FlowState st{Field(g, std::log(2.0)), 50.0, 0, {}, {}};
    CHECK(steady_residual(st, p, w) < 1e-12);
    st.u = Field(g, std::log(2.0) + 0.1);
    CHECK(steady_residual(st, p, w) == doctest::Approx(0.1).epsilon(1e-9));
    st.u = Field::from_function(g, [](double s) { return 0.5 * std::exp(s); });
    CHECK(steady_residual(st, p, w) > 0.1);
    CHECK_THROWS_AS(steady_residual(st, cusp_params(false), w), std::invalid_argument);
}

TEST_CASE("discrete comparison of ordered data") {
    const RadialGrid g = grid_on(-30.0, -1.0, 256);
    FlowParams p = cusp_params(false);
    p.background.v = 0.05;
    p.t_end = 0.5;
    p.output_times = {0.01, 0.1, 0.5};
    const BackgroundSpec spec = p.background_spec();
    const Field hi = make_initial(InitialData::zero_lelong_pole(2.0), 2, spec, g);
    const Field lo = make_initial(InitialData::zero_lelong_pole(2.0), 5, spec, g);
    const RadialGrid pinned = pin_outer_to(hi);
    p.step_times = {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
    const MaFlow flow(p, pinned);
    const FlowState a = flow.run(Field(pinned, hi.values));
    const FlowState b = flow.run(Field(pinned, lo.values));
    for (double t : p.output_times) {
        const Field& ua = a.snapshot_at(t)->u;
        const Field& ub = b.snapshot_at(t)->u;
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(ub[i] <= ua[i] + 2 * p.newton_tol);
    }
    for (const auto& row : a.diagnostics) CHECK(row.min_metric > 0.0);
}

TEST_CASE("constant shift equivariance") {
    const RadialGrid g = grid_on(-30.0, -1.0, 200);
    const double c = 0.37;
    {
        FlowParams p = cusp_params(false);
        p.background.v = 0.05;
        p.t_end = 0.3;
        p.output_times = {0.1, 0.3};
        p.step_times = {0.001, 0.003, 0.01, 0.03, 0.1, 0.2, 0.3};  // same steps in both runs
        const Field u0 = make_initial(InitialData::zero_lelong_pole(2.0), 4, p.background_spec(), g);
        const Field u1 = u0 + Field(g, c);
        const MaFlow f0(p, pin_outer_to(u0));
        const MaFlow f1(p, pin_outer_to(u1));
        const FlowState a = f0.run(u0);
        const FlowState b = f1.run(u1);
        for (double t : p.output_times) {
            const Field d = b.snapshot_at(t)->u - a.snapshot_at(t)->u;
            for (double x : d.values) CHECK(x == doctest::Approx(c).epsilon(1e-8));
        }
    }
    {
        // normalized, one implicit step: the shift decays to c/(1+dt)
        const FlowParams p = cusp_params(true);
        const WeightTable w = weight_table(p.background_spec(), g);
        const double dt = 0.05;
        const Field u0 = Field::from_function(g, [](double s) { return 0.5 + 0.01 * std::exp(s); });
        const FlowState s0{u0, 0.0, 0, {}, {}};
        const auto [n0, r0] = implicit_step(s0, dt, p, w);
        FlowState s1{u0 + Field(g, c), 0.0, 0, {}, {}};
        s1.u[g.size() - 1] = n0.u[g.size() - 1] + c / (1.0 + dt);
        const auto [n1, r1] = implicit_step(s1, dt, p, w);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(n1.u[i] - n0.u[i] == doctest::Approx(c / (1.0 + dt)).epsilon(1e-9));
    }
}

TEST_CASE("dt halving changes the result at first order") {
    const RadialGrid g = grid_on(-30.0, -1.0, 128);
    auto final_u = [&](double dt) {
        FlowParams p = cusp_params(false);
        p.background.v = 0.05;
        p.t_end = 0.5;
        for (double t = dt; t < 0.5 + 1e-12; t += dt) p.step_times.push_back(std::min(t, 0.5));
        const Field u0 = make_initial(InitialData::zero_lelong_pole(2.0), 3, p.background_spec(), g);
        const MaFlow flow(p, pin_outer_to(u0));
        return flow.run(u0).u;
    };
    const Field a = final_u(0.05);
    const Field b = final_u(0.025);
    const Field c = final_u(0.0125);
    const double e1 = interior_sup_diff(a, b);
    const double e2 = interior_sup_diff(b, c);
    CHECK(e1 > 0.0);
    CHECK(std::log2(e1 / e2) >= 0.8);
}

TEST_CASE("FlowParams validation") {
    FlowParams p = flat_params();
    p.newton_tol = 1e-3;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = flat_params();
    p.l_index = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = flat_params();
    p.output_times = {2.0};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
