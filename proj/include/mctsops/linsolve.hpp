#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace mctsops {

// Row-major dense matrix for the small systems the oracle solves (n <= 4).
class DenseMatrix {
public:
    DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

// Gaussian elimination with partial pivoting. nullopt when a pivot falls below
// `singular_tol` relative to the largest entry of A.
std::optional<std::vector<double>> solve_linear_system(DenseMatrix a, std::vector<double> b,
                                                       double singular_tol = 1e-12);

}  // namespace mctsops
