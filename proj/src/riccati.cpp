#include "formctl/riccati.hpp"

#include <Eigen/LU>
#include <Eigen/QR>
#include <cmath>
#include <sstream>

#include "formctl/errors.hpp"

namespace formctl {
namespace {

Matrix care_residual(const Matrix& A, const Matrix& G, const Matrix& Q,
                     const Matrix& X) {
  return A.transpose() * X + X * A - X * G * X + Q;
}

Matrix sign_function(const Matrix& H, const RiccatiOptions& opt, int& iters) {
  const Eigen::Index n = H.rows();
  Matrix Z = H;
  for (iters = 1; iters <= opt.max_iterations; ++iters) {
    Eigen::PartialPivLU<Matrix> lu(Z);
    const Matrix Zinv = lu.inverse();
    // Determinant scaling accelerates the early iterations.
    const double logdet = lu.matrixLU().diagonal().cwiseAbs().array().log().sum();
    double c = std::exp(logdet / static_cast<double>(n));
    if (!std::isfinite(c) || c <= 0.0) c = 1.0;
    const Matrix next = 0.5 * (Z / c + c * Zinv);
    const double change = (next - Z).lpNorm<1>();
    Z = next;
    if (!Z.allFinite()) break;
    if (change <= opt.tolerance * Z.lpNorm<1>()) return Z;
  }
  throw Error(ErrorCode::kRiccatiDiverged,
              "sign iteration on the Hamiltonian did not converge");
}

}  // namespace

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  const Eigen::Index n = A.rows();
  const Matrix At = A.transpose();
  Matrix K = Matrix::Zero(n * n, n * n);
  // vec(A^T X) = (I ⊗ A^T) vec X, vec(X A) = (A^T ⊗ I) vec X.
  for (Eigen::Index j = 0; j < n; ++j) {
    K.block(j * n, j * n, n, n) += At;
    for (Eigen::Index i = 0; i < n; ++i) {
      K.block(i * n, j * n, n, n).diagonal().array() += At(i, j);
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector x = K.partialPivLu().solve(rhs);
  Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

RiccatiSolution solve_care(const Matrix& A, const Matrix& G, const Matrix& Q,
                           const RiccatiOptions& opt) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || G.rows() != n || G.cols() != n || Q.rows() != n ||
      Q.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "Riccati operands must be square");
  }
  Matrix H(2 * n, 2 * n);
  H << A, -G, -Q, -A.transpose();

  RiccatiSolution sol;
  const Matrix W = sign_function(H, opt, sol.sign_iterations);
  Matrix lhs(2 * n, n);
  lhs << W.topRightCorner(n, n), W.bottomRightCorner(n, n) + Matrix::Identity(n, n);
  Matrix rhs(2 * n, n);
  rhs << W.topLeftCorner(n, n) + Matrix::Identity(n, n), W.bottomLeftCorner(n, n);
  Matrix X = lhs.colPivHouseholderQr().solve(-rhs);
  X = 0.5 * (X + X.transpose());

  const double scale = std::max(1.0, Q.norm());
  double res = care_residual(A, G, Q, X).norm();
  for (sol.newton_iterations = 0;
       sol.newton_iterations < opt.max_iterations && res > opt.tolerance * scale;
       ++sol.newton_iterations) {
    const Matrix Ak = A - G * X;
    Matrix next = solve_lyapunov(Ak, Q + X * G * X);
    const double next_res = care_residual(A, G, Q, next).norm();
    if (!next.allFinite()) break;
    const bool stalled = next_res >= res;
    if (next_res < res) {
      X = next;
      res = next_res;
    }
    if (stalled) break;
  }
  if (!X.allFinite() || res > 1e-6 * scale) {
    std::ostringstream os;
    os << "Riccati residual " << res << " after " << sol.newton_iterations
       << " refinement steps";
    throw Error(ErrorCode::kRiccatiDiverged, os.str());
  }
  if (!(spectral_abscissa(A - G * X) < 0.0)) {
    throw Error(ErrorCode::kRiccatiDiverged,
                "no stabilizing solution; an unstable mode is not reachable");
  }
  sol.X = X;
  sol.residual = res;
  return sol;
}

}  // namespace formctl
