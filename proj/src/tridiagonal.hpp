#pragma once

#include <cstddef>
#include <vector>

namespace lcflow::detail {

/// Tridiagonal system; lower[0] and upper[n-1] are unused.
struct Tridiagonal {
    explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0), work_(n) {}

    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    /// Thomas algorithm, in place on rhs. The Newton Jacobians here are
    /// strictly diagonally dominant, so no pivoting is needed.
    void solve(std::vector<double>& rhs) {
        const std::size_t n = diag.size();
        double beta = diag[0];
        rhs[0] /= beta;
        for (std::size_t i = 1; i < n; ++i) {
            work_[i] = upper[i - 1] / beta;
            beta = diag[i] - lower[i] * work_[i];
            rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
        }
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= work_[i + 1] * rhs[i + 1];
    }

private:
    std::vector<double> work_;
};

}  // namespace lcflow::detail
