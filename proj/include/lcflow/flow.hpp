#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "lcflow/geometry.hpp"
#include "lcflow/grid.hpp"

namespace lcflow {

struct FlowParams {
    BackgroundSpec background;  // background.t is ignored; the flow supplies it
    int l_index = 1;
    bool normalized = false;
    double t_end = 1.0;
    double dt_init = 1e-3;
    double dt_max = std::numeric_limits<double>::infinity();
    double newton_tol = 1e-10;
    int max_newton = 50;
    int target_newton = 8;             // dt shrinks above this many iterations
    std::vector<double> output_times;  // snapshot times in (0, t_end]
    std::vector<double> step_times;    // when non-empty: prescribed time grid

    void validate() const;
    BackgroundSpec background_spec() const;
};

struct DiagnosticRow {
    double t;
    double sup_u;
    double inf_u;
    double sup_udot;
    double inf_udot;
    double min_metric;
};

struct Snapshot {
    double t;
    Field u;
    std::optional<Field> udot;  // absent at t = 0 when the rhs is undefined there
    std::optional<Field> metric;  // A_ss + u_ss
};

struct FlowState {
    Field u;
    double t = 0.0;
    std::size_t step_count = 0;
    std::vector<DiagnosticRow> diagnostics;
    std::vector<Snapshot> snapshots;

    /// Snapshot recorded at time t (within 1e-12 relative), or nullptr.
    const Snapshot* snapshot_at(double t) const;
};

struct StepReport {
    bool accepted = false;
    int newton_iters = 0;
    double residual = 0.0;
    double dt_used = 0.0;
    int halvings = 0;
};

enum class InitialKind { Zero, SmoothField, ZeroLelongPole };

struct InitialData {
    InitialKind kind = InitialKind::Zero;
    std::optional<Field> field;  // SmoothField
    double pole_c = 0.0;         // ZeroLelongPole

    static InitialData zero() { return {}; }
    static InitialData smooth(Field f) { return {InitialKind::SmoothField, std::move(f), 0.0}; }
    static InitialData zero_lelong_pole(double c) { return {InitialKind::ZeroLelongPole, std::nullopt, c}; }
};

/**
 * φ_{l,0} − η Σ_conic F(|S_j|^2, 1−b_j, ε_j^2). The pole kind is regularized
 * as max(−c log(−s), −l), non-increasing in l. Throws std::invalid_argument if
 * A_ss(0) + f_ss < 0 at some node.
 */
Field make_initial(const InitialData& data, int l_index, const BackgroundSpec& background,
                   const RadialGrid& grid);

/// Copy of the grid with the outer Dirichlet value pinned to the data at s_max.
RadialGrid pin_outer_to(const Field& initial);

/**
 * Discrete reduced Monge–Ampère flow on one grid.
 *
 *   u_t = log(A_ss(t) + u_ss) − s + log_weight  [− u   in normalized mode]
 *
 * Stepping is implicit Euler. Each step is solved by Newton's method with the
 * exact tridiagonal Jacobian; iterates are damped so A_ss + u_ss stays
 * positive on every free node.
 */
class MaFlow {
public:
    MaFlow(const FlowParams& params, const RadialGrid& grid,
           std::optional<WeightTable> weights = std::nullopt);

    const FlowParams& params() const noexcept { return params_; }
    const RadialGrid& grid() const noexcept { return grid_; }
    const WeightTable& weights() const noexcept { return weights_; }
    const BackgroundFamily& background() const noexcept { return family_; }

    /// Nodes whose values are unknowns (Dirichlet ends excluded).
    std::size_t first_free() const noexcept { return first_free_; }
    std::size_t last_free() const noexcept { return grid_.size() - 2; }

    /// Right-hand side on the free nodes (Dirichlet nodes are 0).
    /// Throws NonPositiveMetric if A_ss + u_ss <= 0 on a free node.
    Field rhs(const Field& u, double t) const;
    /// A_ss(t) + u_ss on every node.
    Field metric(const Field& u, double t) const;

    /// Advances by at most dt. Halves dt on Newton failure up to 20 times,
    /// then throws StepFailure.
    StepReport step(FlowState& state, double dt) const;

    using Callback = std::function<void(const FlowState&)>;
    FlowState run(const Field& initial, const Callback& on_snapshot = {}) const;

private:
    bool try_step(const Field& u_old, double t_new, double dt, Field& u, StepReport& report,
                  std::size_t& bad_node) const;
    double residual(const Field& u_old, const Field& u, double t_new, double dt,
                    std::vector<double>& f, std::vector<double>& m, std::size_t& bad_node) const;
    void record(FlowState& state, const Field& udot) const;
    void snapshot(FlowState& state) const;

    FlowParams params_;
    RadialGrid grid_;
    BackgroundFamily family_;
    WeightTable weights_;
    std::vector<double> s_;
    std::size_t first_free_;
};

Field ma_rhs(const FlowState& state, const FlowParams& params, const WeightTable& weights);

std::pair<FlowState, StepReport> implicit_step(const FlowState& state, double dt,
                                               const FlowParams& params,
                                               const WeightTable& weights);

FlowState run_flow(const FlowParams& params, const Field& initial, const WeightTable& weights,
                   const MaFlow::Callback& callbacks = {});

/// e^{−t̃} φ(e^{t̃} − 1).
Field normalize_transform(const std::function<Field(double)>& unnormalized, double t_tilde);

/// sup over interior free nodes of |log(A_ss+u_ss) − s + log_weight − u|.
double steady_residual(const FlowState& state, const FlowParams& params,
                       const WeightTable& weights);

}  // namespace lcflow
