#pragma once

#include "formctl/types.hpp"

namespace formctl {

struct RiccatiOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
};

struct RiccatiSolution {
  Matrix X;
  double residual = 0.0;  // ||A^T X + X A - X G X + Q||_F
  int sign_iterations = 0;
  int newton_iterations = 0;
};

// Stabilizing solution of A^T X + X A - X G X + Q = 0 (G, Q symmetric PSD).
// The matrix sign function of the Hamiltonian gives the stable invariant
// subspace; Newton-Kleinman steps then refine X. Throws kRiccatiDiverged.
RiccatiSolution solve_care(const Matrix& A, const Matrix& G, const Matrix& Q,
                           const RiccatiOptions& options = {});

// Solves A^T X + X A + Q = 0 through the vectorized Kronecker system.
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

}  // namespace formctl
