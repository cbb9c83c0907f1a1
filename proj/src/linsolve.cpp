#include "mctsops/linsolve.hpp"

#include <cmath>
#include <utility>

#include "mctsops/errors.hpp"

namespace mctsops {

std::optional<std::vector<double>> solve_linear_system(DenseMatrix a, std::vector<double> b, double singular_tol) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) {
        throw ContractViolation("solve_linear_system: shape mismatch");
    }
    double scale = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            scale = std::max(scale, std::fabs(a(r, c)));
        }
    }
    if (scale == 0.0) {
        return std::nullopt;
    }
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t pivot = k;
        for (std::size_t r = k + 1; r < n; ++r) {
            if (std::fabs(a(r, k)) > std::fabs(a(pivot, k))) {
                pivot = r;
            }
        }
        if (std::fabs(a(pivot, k)) <= singular_tol * scale) {
            return std::nullopt;
        }
        if (pivot != k) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a(k, c), a(pivot, c));
            }
            std::swap(b[k], b[pivot]);
        }
        for (std::size_t r = k + 1; r < n; ++r) {
            const double f = a(r, k) / a(k, k);
            if (f == 0.0) {
                continue;
            }
            for (std::size_t c = k; c < n; ++c) {
                a(r, c) -= f * a(k, c);
            }
            b[r] -= f * b[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) {
            acc -= a(i, c) * x[c];
        }
        x[i] = acc / a(i, i);
    }
    return x;
}

}  // namespace mctsops
