#include <doctest.h>

#include <cmath>
#include <limits>

#include <json.hpp>

#include "lcflow/audits.hpp"
#include "lcflow/config.hpp"

using namespace lcflow;

namespace {

struct Run {
    FlowParams params;
    FlowState state;
};

Run run_setup(const RunSetup& setup) {
    MaFlow flow(setup.params, setup.grid);
    return {setup.params, flow.run(setup.initial)};
}

Run run_preset(const std::string& name, std::size_t nodes = 0) {
    ExperimentConfig c = preset(name);
    if (nodes) c.grid.n_nodes = nodes;
    return run_setup(build_run(c));
}

// Flat background, zero data, zero Dirichlet value: φ ≡ 0 for all time.
Run stationary() {
    FlowParams p;
    p.background.u = 1.0;
    p.t_end = 0.5;
    p.output_times = {1e-4, 1e-3, 1e-2, 0.1, 0.5};
    const RadialGrid g = make_grid(-30.0, -1.0, 128, BoundaryCondition::neumann_zero(),
                                   BoundaryCondition::dirichlet(0.0));
    MaFlow flow(p, g);
    return {p, flow.run(Field(g, 0.0))};
}

}  // namespace

TEST_CASE("stationary run passes every unnormalized audit") {
    const Run r = stationary();
    for (const Snapshot& s : r.state.snapshots) CHECK(sup_norm(s.u) < 1e-12);
    const AuditSubject subj{&r.state, &r.params};
    const AuditReport up = audit_upper({&subj, 1}, 1e-10);
    CHECK(up.pass);
    CHECK(up.fitted_constants.at("sup_phi") == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(audit_lower(r.state, r.params, 0.1, 1e-10).pass);
    const AuditReport td = audit_time_derivative(r.state, r.params, 0.1, 1e-10, 1e-3);
    CHECK(td.pass);
    CHECK(td.fitted_constants.at("log_t_slope") == doctest::Approx(0.0).epsilon(1e-9));
    const AuditReport l1 =
        audit_l1_continuity(r.state, r.params, 0.1, {1e-4, 1e-3, 1e-2, 0.1}, 1e-2, 1e-3, 1e-10, 1e-3);
    CHECK(l1.pass);
    CHECK(l1.fitted_constants.at("l1_at_threshold_time") == 0.0);
    CHECK(audit_maximality(r.state, r.state, 0.0).pass);
}

TEST_CASE("pole data: upper, lower and rate envelopes") {
    const Run r = run_preset("pole-envelope");
    const AuditSubject subj{&r.state, &r.params};
    CHECK(audit_upper({&subj, 1}, 2e-10).pass);
    const AuditReport lo = audit_lower(r.state, r.params, 0.1, 2e-10);
    CHECK(lo.pass);
    CHECK(lo.min_margin >= -2e-10);
    const AuditReport td = audit_time_derivative(r.state, r.params, 0.1, 2e-10, 1e-3);
    CHECK(td.pass);
    const double slope = td.fitted_constants.at("log_t_slope");
    CHECK(slope >= 0.9);
    CHECK(slope <= 1.1);
    CHECK(audit_trace(r.state, r.params, 0.1, 2e-10, 0.05).pass);
    const AuditReport l1 =
        audit_l1_continuity(r.state, r.params, 0.1, {1e-4, 1e-3, 1e-2, 1e-1}, 5e-2, 1e-3, 2e-10);
    CHECK(l1.pass);
    CHECK(l1.fitted_constants.at("min_increment") > 0.0);
}

TEST_CASE("lower constant: the barrier keeps it bounded as the grid deepens") {
    double bare[2];
    double barrier[2];
    const double depth[2] = {-30.0, -3000.0};
    for (int k = 0; k < 2; ++k) {
        ExperimentConfig c = preset("pole-envelope");
        c.grid.s_min = depth[k];
        c.grid.n_nodes = 1024;
        c.flow.l_index = 40;
        c.flow.output_times = {1e-3, 1e-2, 0.1};
        const Run r = run_setup(build_run(c));
        const AuditReport with = audit_lower(r.state, r.params, 0.1, 2e-10);
        CHECK(with.pass);
        barrier[k] = with.fitted_constants.at("C_delta");
        bare[k] = audit_lower(r.state, r.params, 0.0, 2e-10).fitted_constants.at("C_delta");
    }
    // −3 log(−s) near the pole: the bare constant grows by 3 log 100.
    CHECK(bare[1] - bare[0] == doctest::Approx(3.0 * std::log(100.0)).epsilon(0.05));
    CHECK(barrier[1] - barrier[0] < 0.1 * (bare[1] - bare[0]));
}

TEST_CASE("canonical divisor keeps the shifted upper bound") {
    ExperimentConfig c = preset("lemma41");
    c.divisors = {DivisorSpec::cusp(), DivisorSpec::canonical(1.0, 0.1)};
    const Run r = run_setup(build_run(c));
    const AuditSubject subj{&r.state, &r.params};
    const AuditReport up = audit_upper({&subj, 1}, 2e-10);
    CHECK(up.pass);
    CHECK(up.fitted_constants.at("min_margin_shifted") >= -2e-10);
}

TEST_CASE("maximality ordering follows the truncation level") {
    ExperimentConfig c = preset("lemma41");
    c.flow.l_index = 2;
    const Run shallow = run_setup(build_run(c));
    c.flow.l_index = 8;
    const Run deep = run_setup(build_run(c));
    const AuditReport same = audit_maximality(deep.state, deep.state, 0.0);
    CHECK(same.pass);
    CHECK(same.min_margin == 0.0);
    CHECK(audit_maximality(deep.state, shallow.state, 2e-10).pass);
    CHECK_FALSE(audit_maximality(shallow.state, deep.state, 2e-10).pass);
}

TEST_CASE("normalized cusp run") {
    const Run r = run_preset("cusp-ke", 512);
    const AuditReport n = audit_normalized(r.state, r.params, 0.1, 2e-10, 1.0);
    CHECK(n.pass);
    CHECK(n.fitted_constants.count("C_delta") == 1);
    CHECK_THROWS_AS(audit_normalized(stationary().state, stationary().params, 0.1, 1e-10, 1.0),
                    std::invalid_argument);
}

TEST_CASE("audits_to_json") {
    AuditReport a{"upper", Field(make_grid(-2.0, -1.0, 8, BoundaryCondition::neumann_zero(),
                                           BoundaryCondition::dirichlet(0.0)),
                                 0.0),
                  {{"C", 1.5}, {"bad", std::numeric_limits<double>::quiet_NaN()}},
                  true,
                  0.25,
                  1e-10,
                  "ok"};
    AuditReport b = a;
    b.name = "lower";
    b.pass = false;
    b.min_margin = -std::numeric_limits<double>::infinity();
    const AuditReport both[] = {a, b};
    const auto j = nlohmann::json::parse(audits_to_json(both, "00ff"));
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 2);
    CHECK(j[0]["name"] == "upper");
    CHECK(j[0]["verdict"] == "pass");
    CHECK(j[0]["min_margin"] == 0.25);
    CHECK(j[0]["tolerance"] == 1e-10);
    CHECK(j[0]["constants"]["C"] == 1.5);
    CHECK(j[0]["constants"]["bad"].is_null());
    CHECK(j[0]["notes"] == "ok");
    CHECK(j[0]["config_hash"] == "00ff");
    CHECK(j[1]["verdict"] == "fail");
    CHECK(j[1]["min_margin"].is_null());
    CHECK(nlohmann::json::parse(audits_to_json({}, "x")).empty());
}
