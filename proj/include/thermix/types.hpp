#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace thermix {

using cxd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr const char* kVersion = "0.1.0";

// Thrown on malformed inputs (bad configs, shape mismatches, contract violations).
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a computation fails numerically (singular operator, collapse on a
// zero-weight branch, non-converged decomposition).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace thermix
