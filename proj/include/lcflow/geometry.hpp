#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lcflow/grid.hpp"

namespace lcflow {

enum class DivisorKind {
    Cusp,       // log canonical, coefficient 1
    Conic,      // log terminal, coefficient b in (0,1)
    Canonical,  // coefficient a >= 0
};

/// One divisor of the radial model. |S|^2 = hermitian_scale * e^s.
struct DivisorSpec {
    DivisorKind kind = DivisorKind::Cusp;
    double coefficient = 1.0;  // b for Conic, a for Canonical, ignored for Cusp
    double epsilon = 0.0;
    double hermitian_scale = 1.0;

    static DivisorSpec cusp(double hermitian_scale = 1.0) {
        return {DivisorKind::Cusp, 1.0, 0.0, hermitian_scale};
    }
    static DivisorSpec conic(double b, double epsilon, double hermitian_scale = 1.0) {
        return {DivisorKind::Conic, b, epsilon, hermitian_scale};
    }
    static DivisorSpec canonical(double a, double epsilon, double hermitian_scale = 1.0) {
        return {DivisorKind::Canonical, a, epsilon, hermitian_scale};
    }

    /// Throws std::invalid_argument on coefficient / scale violations.
    void validate() const;
    /// log|S|^2 at s.
    double log_norm2(double s) const;
    /// Cone angle parameter 1 - b for conic divisors.
    double beta() const { return 1.0 - coefficient; }

    bool operator==(const DivisorSpec&) const = default;
};

/**
 * Parameters of the background form ω′_{t,u,v,ε̃} in the radial model.
 *
 * Potential:  A(s) = (theta_scale * u + w0(t) * omega0_scale) e^s
 *                    + c(t) * Σ_cusp cg_potential(s)
 *                    + eta * Σ_conic F(|S|^2, 1-b, ε^2)
 * with c(t) = t + v and w0 = 1 for the plain flow, and
 * c(t) = 1 + v - e^{-t}, w0 = e^{-t} for the normalized flow.
 */
struct BackgroundSpec {
    double t = 0.0;
    double u = 0.0;
    double v = 0.0;
    double eta = 0.0;
    double delta = 0.1;
    std::vector<DivisorSpec> divisors;
    double theta_scale = 1.0;
    double omega0_scale = 0.0;
    bool normalized = false;
    std::optional<std::size_t> stilde_index;  // divisor carrying the Kodaira barrier

    void validate() const;
    double cusp_coefficient() const;
    double omega0_weight() const;
    BackgroundSpec at_time(double time) const {
        BackgroundSpec b = *this;
        b.t = time;
        return b;
    }

    bool operator==(const BackgroundSpec&) const = default;
};

struct WeightTable {
    Field log_weight;  // log[Π|S_i|^2 log^2|S_i|^2 Π(|S_j|^2+ε_j^2)^b / Π(|S_k|^2+ε_k^2)^a]
    Field barrier;     // δ log|S̃|^2, identically 0 if no barrier was requested
};

struct Background {
    Field potential;  // A
    Field second;     // A_ss (closed form)
};

/**
 * F(t, β, ε) = (1/β) ∫_0^t ((r+ε)^β − ε^β)/r dr, by adaptive Gauss–Kronrod
 * quadrature with absolute tolerance 1e-10.
 */
double conic_regularizer(double t, double beta, double epsilon);
/// d/ds F(hs e^s, β, ε) written in terms of t = hs e^s.
double conic_regularizer_ds(double t, double beta, double epsilon);
/// d²/ds² F(hs e^s, β, ε) written in terms of t = hs e^s.
double conic_regularizer_dss(double t, double beta, double epsilon);

/// −log log²(hs·e^s).
double cg_potential(double s, double hermitian_scale = 1.0);
double cg_potential_ss(double s, double hermitian_scale = 1.0);

WeightTable weight_table(std::span<const DivisorSpec> divisors, const RadialGrid& grid,
                         std::optional<std::size_t> stilde_choice, double delta);
WeightTable weight_table(const BackgroundSpec& spec, const RadialGrid& grid);

/// Σ_conic η F(|S_j|^2, 1-b_j, ε_j^2) at every node.
Field conic_potential(const BackgroundSpec& spec, const RadialGrid& grid);

/// Throws PositivityError if A_ss <= 0 at some node.
Background assemble_background(const BackgroundSpec& spec, const RadialGrid& grid);

/**
 * The background for all times at once. The conic part (quadrature) and the
 * cusp/flat shapes are computed once; `at` only rescales them.
 */
class BackgroundFamily {
public:
    BackgroundFamily(const BackgroundSpec& spec, const RadialGrid& grid);

    /// A and A_ss at time t; no positivity check.
    Background at(double t) const;
    void second_at(double t, std::vector<double>& out) const;
    const BackgroundSpec& spec() const noexcept { return spec_; }
    const RadialGrid& grid() const noexcept { return grid_; }

private:
    BackgroundSpec spec_;
    RadialGrid grid_;
    std::vector<double> exp_s_;
    std::vector<double> cusp_;
    std::vector<double> cusp_ss_;
    Field conic_;
    std::vector<double> conic_ss_;
};

struct LocalModelEnvelope {
    double c_low;
    double c_high;
};

/// min/max of A_ss over the model density on the inner (deep-cusp) half of the grid.
LocalModelEnvelope check_local_model(const BackgroundSpec& spec, const RadialGrid& grid);

/**
 * Tests f >= ε log|S|^2 + C_ε for each ε. On a truncated grid any finite C_ε
 * (the grid minimum of the slack f − ε log|S|^2) validates the nodes, so the
 * decision rests on the slack not trending downward into the puncture (least
 * squares slope over the inner half of the grid): otherwise the bound fails
 * beyond the truncation.
 */
bool zero_lelong_check(const Field& f, std::span<const DivisorSpec> divisors,
                       std::span<const double> eps_list);

}  // namespace lcflow
