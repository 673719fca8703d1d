#include "lcflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "lcflow/error.hpp"
#include "tridiagonal.hpp"

namespace lcflow {

void FlowParams::validate() const {
    if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be > 0");
    if (!(dt_init > 0.0)) throw std::invalid_argument("dt_init must be > 0");
    if (!(newton_tol > 0.0 && newton_tol <= 1e-6)) {
        throw std::invalid_argument("newton_tol must lie in (0, 1e-6]");
    }
    if (max_newton < 1) throw std::invalid_argument("max_newton must be >= 1");
    if (l_index < 1) throw std::invalid_argument("l_index must be a positive integer");
    for (double t : output_times) {
        if (!(t >= 0.0 && t <= t_end)) throw std::invalid_argument("output time outside [0, t_end]");
    }
    for (std::size_t i = 0; i < step_times.size(); ++i) {
        if (!(step_times[i] > 0.0) || (i > 0 && !(step_times[i] > step_times[i - 1]))) {
            throw std::invalid_argument("step_times must be positive and increasing");
        }
    }
    background_spec().validate();
}

BackgroundSpec FlowParams::background_spec() const {
    BackgroundSpec b = background;
    b.normalized = normalized;
    return b;
}

const Snapshot* FlowState::snapshot_at(double t) const {
    for (const auto& s : snapshots) {
        if (std::abs(s.t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return &s;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------

Field make_initial(const InitialData& data, int l_index, const BackgroundSpec& background,
                   const RadialGrid& grid) {
    if (l_index < 1) throw std::invalid_argument("make_initial: l_index must be >= 1");
    Field phi(grid);
    switch (data.kind) {
    case InitialKind::Zero:
        break;
    case InitialKind::SmoothField:
        if (!data.field || data.field->size() != grid.size()) {
            throw std::invalid_argument("make_initial: smooth field missing or wrong length");
        }
        phi.values = data.field->values;
        break;
    case InitialKind::ZeroLelongPole:
        if (!(data.pole_c > 0.0)) throw std::invalid_argument("make_initial: pole strength c must be > 0");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            phi.values[i] = std::max(-data.pole_c * std::log(-grid.node(i)),
                                     -static_cast<double>(l_index));
        }
        break;
    }

    // Discrete quasi-plurisubharmonicity of φ_{l,0} against the t = 0 background.
    const BackgroundFamily family(background, grid);
    std::vector<double> a_ss;
    family.second_at(0.0, a_ss);
    const Field f_ss = second_derivative(phi);
    const double h2 = grid.spacing() * grid.spacing();
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (i == 0 && grid.inner().kind == BoundaryKind::Dirichlet) continue;
        const double tol = 64.0 * std::numeric_limits<double>::epsilon() *
                          (1.0 + std::abs(phi.values[i])) / h2;
        if (a_ss[i] + f_ss.values[i] < -tol) {
            std::ostringstream msg;
            msg << "make_initial: data is not quasi-plurisubharmonic at s = " << grid.node(i)
                << " (A_ss + f_ss = " << a_ss[i] + f_ss.values[i] << ")";
            throw std::invalid_argument(msg.str());
        }
    }
    return phi - conic_potential(background, grid);
}

RadialGrid pin_outer_to(const Field& initial) {
    return initial.grid.with_outer(BoundaryCondition::dirichlet(initial.values.back()));
}

// ---------------------------------------------------------------------------

MaFlow::MaFlow(const FlowParams& params, const RadialGrid& grid, std::optional<WeightTable> weights)
    : params_(params),
      grid_(grid),
      family_(params.background_spec(), grid),
      weights_(weights ? std::move(*weights) : weight_table(params.background_spec(), grid)),
      s_(grid.nodes()),
      first_free_(grid.inner().kind == BoundaryKind::NeumannZero ? 0 : 1) {
    params_.validate();
    if (weights_.log_weight.size() != grid.size()) {
        throw std::invalid_argument("weight table does not match grid");
    }
}

Field MaFlow::metric(const Field& u, double t) const {
    std::vector<double> a_ss;
    family_.second_at(t, a_ss);
    Field m = second_derivative(u);
    for (std::size_t i = 0; i < m.size(); ++i) m.values[i] += a_ss[i];
    return m;
}

Field MaFlow::rhs(const Field& u, double t) const {
    const Field m = metric(u, t);
    Field r(grid_);
    for (std::size_t i = first_free_; i <= last_free(); ++i) {
        if (!(m.values[i] > 0.0)) {
            std::ostringstream msg;
            msg << "metric coefficient A_ss + u_ss = " << m.values[i] << " <= 0 at s = " << s_[i]
                << ", t = " << t;
            throw NonPositiveMetric(msg.str(), i);
        }
        r.values[i] = std::log(m.values[i]) - s_[i] + weights_.log_weight.values[i];
        if (params_.normalized) r.values[i] -= u.values[i];
    }
    return r;
}

double MaFlow::residual(const Field& u_old, const Field& u, double t_new, double dt,
                        std::vector<double>& f, std::vector<double>& m,
                        std::size_t& bad_node) const {
    (void)t_new;
    const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
    const auto& v = u.values;
    double norm = 0.0;
    for (std::size_t i = first_free_; i <= last_free(); ++i) {
        const double d2 = i == 0 ? 2.0 * (v[1] - v[0]) * inv_h2
                                 : (v[i - 1] - 2.0 * v[i] + v[i + 1]) * inv_h2;
        const double mi = m[i] + d2;
        if (!(mi > 0.0)) {
            bad_node = i;
            return std::numeric_limits<double>::infinity();
        }
        double r = std::log(mi) - s_[i] + weights_.log_weight.values[i];
        if (params_.normalized) r -= v[i];
        f[i] = v[i] - u_old.values[i] - dt * r;
        // Rounding in the difference quotient bounds how well log(mi) is known;
        // residual below that floor is noise.
        const double mag = i == 0 ? 2.0 * (std::abs(v[1]) + std::abs(v[0]))
                                  : std::abs(v[i - 1]) + 2.0 * std::abs(v[i]) + std::abs(v[i + 1]);
        const double noise = dt * 4.0 * std::numeric_limits<double>::epsilon() * mag * inv_h2 / mi;
        norm = std::max(norm, std::abs(f[i]) - noise);
    }
    return norm;
}

bool MaFlow::try_step(const Field& u_old, double t_new, double dt, Field& u, StepReport& report,
                      std::size_t& bad_node) const {
    const std::size_t n = grid_.size();
    const std::size_t lo = first_free_;
    const std::size_t hi = last_free();
    const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());

    std::vector<double> a_ss;
    family_.second_at(t_new, a_ss);
    std::vector<double> f(n, 0.0);
    std::vector<double> f_trial(n, 0.0);

    u = u_old;
    double norm = residual(u_old, u, t_new, dt, f, a_ss, bad_node);
    if (!std::isfinite(norm)) return false;

    detail::Tridiagonal jac(hi - lo + 1);
    std::vector<double> delta(hi - lo + 1);
    Field trial(grid_);
    bool converged = false;
    int polish = 0;
    for (int it = 0; it < params_.max_newton; ++it) {
        if (norm <= params_.newton_tol) {
            converged = true;
            // One polishing iteration: kept only if it reduces the residual.
            if (polish++ > 0 || norm < 1e-14) break;
        }
        const auto& v = u.values;
        for (std::size_t i = lo; i <= hi; ++i) {
            const std::size_t k = i - lo;
            const double d2 = i == 0 ? 2.0 * (v[1] - v[0]) * inv_h2
                                     : (v[i - 1] - 2.0 * v[i] + v[i + 1]) * inv_h2;
            const double c = dt * inv_h2 / (a_ss[i] + d2);
            const double shift = params_.normalized ? dt : 0.0;
            if (i == 0) {
                jac.diag[k] = 1.0 + 2.0 * c + shift;
                jac.upper[k] = -2.0 * c;
            } else {
                jac.diag[k] = 1.0 + 2.0 * c + shift;
                if (k > 0) jac.lower[k] = -c;
                if (i < hi) jac.upper[k] = -c;
            }
            delta[k] = -f[i];
        }
        jac.solve(delta);

        double lambda = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 30; ++ls) {
            trial.values = u.values;
            for (std::size_t i = lo; i <= hi; ++i) trial.values[i] += lambda * delta[i - lo];
            std::size_t bad = 0;
            const double trial_norm = residual(u_old, trial, t_new, dt, f_trial, a_ss, bad);
            if (std::isfinite(trial_norm) && trial_norm < norm) {
                u.values.swap(trial.values);
                f.swap(f_trial);
                norm = trial_norm;
                accepted = true;
                break;
            }
            bad_node = bad;
            lambda *= 0.5;
        }
        report.newton_iters = it + 1;
        if (!accepted) break;
    }
    report.residual = norm;
    if (!converged && norm <= params_.newton_tol) converged = true;
    return converged;
}

StepReport MaFlow::step(FlowState& state, double dt) const {
    StepReport report;
    Field u(grid_);
    std::size_t bad_node = first_free_;
    for (int halving = 0; halving <= 20; ++halving) {
        const double t_new = state.t + dt;
        report = StepReport{};
        if (try_step(state.u, t_new, dt, u, report, bad_node)) {
            report.accepted = true;
            report.dt_used = dt;
            report.halvings = halving;
            state.u = std::move(u);
            state.t = t_new;
            ++state.step_count;
            return report;
        }
        dt *= 0.5;
    }
    std::ostringstream msg;
    msg << "implicit step failed at t = " << state.t << " near node " << bad_node
        << " (s = " << grid_.node(bad_node) << ") after 20 dt halvings";
    throw StepFailure(msg.str(), state.t, bad_node);
}

void MaFlow::record(FlowState& state, const Field& udot) const {
    const Field m = metric(state.u, state.t);
    DiagnosticRow row{state.t,
                      *std::max_element(state.u.values.begin(), state.u.values.end()),
                      *std::min_element(state.u.values.begin(), state.u.values.end()),
                      -std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};
    for (std::size_t i = first_free_; i <= last_free(); ++i) {
        row.sup_udot = std::max(row.sup_udot, udot.values[i]);
        row.inf_udot = std::min(row.inf_udot, udot.values[i]);
        row.min_metric = std::min(row.min_metric, m.values[i]);
    }
    state.diagnostics.push_back(row);
}

void MaFlow::snapshot(FlowState& state) const {
    Snapshot snap{state.t, state.u, std::nullopt, std::nullopt};
    try {
        snap.udot = rhs(state.u, state.t);
        snap.metric = metric(state.u, state.t);
    } catch (const NonPositiveMetric&) {
        // Degenerate background at t = 0; the rate is undefined there.
    }
    state.snapshots.push_back(std::move(snap));
}

FlowState MaFlow::run(const Field& initial, const Callback& on_snapshot) const {
    if (!(initial.grid == grid_)) {
        if (initial.size() != grid_.size()) throw std::invalid_argument("initial data on a different grid");
    }
    FlowState state{Field(grid_, initial.values), 0.0, 0, {}, {}};
    state.u.values.back() = grid_.outer().value;
    if (grid_.inner().kind == BoundaryKind::Dirichlet) state.u.values.front() = grid_.inner().value;

    std::set<double> outputs(params_.output_times.begin(), params_.output_times.end());
    std::set<double> targets(outputs);
    targets.insert(params_.t_end);
    const bool fixed = !params_.step_times.empty();
    if (fixed) {
        for (double t : params_.step_times) {
            if (t < params_.t_end) targets.insert(t);
        }
    }

    snapshot(state);
    if (on_snapshot) on_snapshot(state);
    if (auto rate = state.snapshots.back().udot) record(state, *rate);

    double dt = std::min(params_.dt_init, params_.dt_max);
    const auto reached = [](double a, double b) {
        return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b));
    };
    for (double target : targets) {
        if (target <= 0.0) continue;
        while (!reached(state.t, target) && state.t < target) {
            const double remaining = target - state.t;
            double dt_try = fixed ? remaining : std::min(dt, params_.dt_max);
            if (remaining <= 1.25 * dt_try) dt_try = remaining;
            const StepReport rep = step(state, dt_try);
            if (rep.dt_used == dt_try && dt_try == remaining) state.t = target;
            record(state, rhs(state.u, state.t));
            if (!fixed) {
                if (rep.halvings > 0) {
                    dt = rep.dt_used;
                } else if (rep.newton_iters > params_.target_newton) {
                    dt = 0.5 * dt_try;
                } else if (rep.newton_iters <= 3 && dt_try >= 0.999 * dt) {
                    dt = std::min(1.5 * dt, params_.dt_max);
                }
            }
        }
        state.t = target;
        if (outputs.count(target)) {
            snapshot(state);
            if (on_snapshot) on_snapshot(state);
        }
    }
    return state;
}

// ---------------------------------------------------------------------------

Field ma_rhs(const FlowState& state, const FlowParams& params, const WeightTable& weights) {
    const MaFlow flow(params, state.u.grid, weights);
    return flow.rhs(state.u, state.t);
}

std::pair<FlowState, StepReport> implicit_step(const FlowState& state, double dt,
                                               const FlowParams& params,
                                               const WeightTable& weights) {
    const MaFlow flow(params, state.u.grid, weights);
    FlowState next = state;
    const StepReport rep = flow.step(next, dt);
    return {std::move(next), rep};
}

FlowState run_flow(const FlowParams& params, const Field& initial, const WeightTable& weights,
                   const MaFlow::Callback& callbacks) {
    const MaFlow flow(params, initial.grid, weights);
    return flow.run(initial, callbacks);
}

Field normalize_transform(const std::function<Field(double)>& unnormalized, double t_tilde) {
    Field f = unnormalized(std::expm1(t_tilde));
    f *= std::exp(-t_tilde);
    return f;
}

double steady_residual(const FlowState& state, const FlowParams& params,
                       const WeightTable& weights) {
    if (!params.normalized) throw std::invalid_argument("steady_residual: normalized mode required");
    const MaFlow flow(params, state.u.grid, weights);
    const Field r = flow.rhs(state.u, state.t);
    double sup = 0.0;
    for (std::size_t i = std::max<std::size_t>(flow.first_free(), 1); i <= flow.last_free(); ++i) {
        sup = std::max(sup, std::abs(r.values[i]));
    }
    return sup;
}

}  // namespace lcflow
