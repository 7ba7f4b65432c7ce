#include "sym_eig.hpp"

#include <stdexcept>

namespace mgi::detail {

std::pair<Eigen::MatrixXd, Eigen::VectorXd> symmetric_eigen(
    const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("symmetric_eigen: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric_eigen: eigendecomposition failed");
  return {es.eigenvectors(), es.eigenvalues()};
}

}  // namespace mgi::detail
