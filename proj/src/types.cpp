#include "formctl/types.hpp"

#include <Eigen/Eigenvalues>

namespace formctl {

Matrix kron_identity(const Matrix& m, int k) {
  Matrix out = Matrix::Zero(m.rows() * k, m.cols() * k);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) {
        out.block(i * k, j * k, k, k).diagonal().setConstant(m(i, j));
      }
    }
  }
  return out;
}

double spectral_abscissa(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

double max_symmetric_eigenvalue(const Matrix& m) {
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace formctl
