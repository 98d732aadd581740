#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace oracle {

// Dense row-major storage throughout; all internal arithmetic is 64-bit even
// though corpus files store 32-bit floats.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Index = Eigen::Index;

// Invalid input files, shapes, configs. Maps to process exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values, degenerate geometry mid-computation. Exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Bad command lines / malformed configuration documents. Exit code 1.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DataError(std::string(who) + ": shape mismatch " +
                        std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                        std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace oracle
