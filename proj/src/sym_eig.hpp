#pragma once

#include <Eigen/Dense>
#include <utility>

namespace mgi::detail {

/// Eigendecomposition of a symmetric matrix, ascending eigenvalues.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> symmetric_eigen(
    const Eigen::MatrixXd& m);

}  // namespace mgi::detail
