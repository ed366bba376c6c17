#pragma once

#include <Eigen/Dense>

namespace formctl {

using Vec3 = Eigen::Vector3d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Spatial dimension of every agent.
inline constexpr int kDim = 3;

// Kronecker product M ⊗ I_k.
Matrix kron_identity(const Matrix& m, int k);

// Spectral abscissa: largest real part over the eigenvalues of a square matrix.
double spectral_abscissa(const Matrix& m);

// Largest eigenvalue of the symmetric part of a square matrix.
double max_symmetric_eigenvalue(const Matrix& m);

}  // namespace formctl
