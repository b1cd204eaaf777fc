#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ramdp {

/// Row-major so a (s,a) row of the kernel is contiguous.
template <typename Scalar>
using KernelT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using QTableT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Transition kernel, (S*A) x S; row s*A + a holds P(.|s,a).
using Kernel = KernelT<double>;
/// Q table, S x A.
using QTable = QTableT<double>;
/// Bias / value vector, length S.
using BiasVector = VectorT<double>;
using Vector = VectorT<double>;
/// Policy-induced chain, S x S.
using Matrix = Eigen::MatrixXd;

/// Deterministic stationary policy: action index per state.
using Policy = std::vector<int>;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Singular gain system, invalid radius for a worst-case row, etc.
struct DegeneracyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonConvergenceError : std::runtime_error {
    NonConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual(last_residual) {}
    double last_residual;
};

struct NumericFault : std::runtime_error {
    NumericFault(const std::string& what, long iteration)
        : std::runtime_error(what), iteration(iteration) {}
    long iteration;
};

}  // namespace ramdp
