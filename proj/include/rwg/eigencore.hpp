#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Sparse symmetric generalized eigenvalue machinery shared by every rank
// (1D Sturm-Liouville, 2D cross-section, 3D tube). One engine: shift-invert
// blocked subspace iteration with Rayleigh-Ritz extraction. The shift is
// always moved to a point where A - sigma*B is positive definite, so the
// LDLT factorization is stable without pivoting and no eigenvalue below the
// shift can be missed.

namespace rwg::eig {

class EigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iteration budget exhausted before the residual target.
class ConvergenceError : public EigError {
 public:
  using EigError::EigError;
};

// Right-hand side of a singular solve has a component along the kernel
// larger than the caller's tolerance.
class CompatibilityError : public EigError {
 public:
  using EigError::EigError;
};

using Triplets = std::vector<Eigen::Triplet<double>>;

// Thin wrapper enforcing the two invariants every assembled operator must
// satisfy before it reaches a factorization: finite entries and symmetry.
struct SymSparseMatrix {
  Eigen::SparseMatrix<double> mat;

  // Accepts duplicate triplets (summed). Entries may be given on one or both
  // halves; the result is symmetrized as (A + A^T)/2 after verifying the
  // relative asymmetry is below 1e-12. Throws EigError on NaN/Inf or on a
  // genuinely non-symmetric input.
  static SymSparseMatrix from_triplets(Eigen::Index n, const Triplets& entries);

  Eigen::Index n() const { return mat.rows(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return mat * x; }
};

struct EigOptions {
  double tol = 1e-9;       // residual ||Av - lambda Bv|| / ((1+|lambda|)||Bv||)
  int max_iter = 500;      // subspace iterations
  std::optional<double> shift;  // spectral hint; moved down until definite
  int block_extra = 5;     // block size = k + block_extra (guard vectors)
  unsigned seed = 0x5eedu; // deterministic start basis
};

struct EigPairs {
  Eigen::VectorXd values;     // ascending, first k
  Eigen::MatrixXd vectors;    // n x k, B-orthonormal, sign-fixed
  Eigen::VectorXd residuals;  // per returned pair
  int iterations = 0;
  double shift_used = 0.0;
};

// Smallest k eigenpairs of A v = lambda B v with B positive definite.
EigPairs solve_gevp_smallest(const SymSparseMatrix& A, const SymSparseMatrix& B,
                             int k, const EigOptions& opts = {});

struct ConstrainedResult {
  Eigen::VectorXd x;
  double multiplier = 0.0;     // Lagrange multiplier of the constraint row
  double compat_defect = 0.0;  // |<B^-1 c, rhs>| / (||B^-1 c|| ||rhs||)
};

// Solves (A - sigma B) x = rhs subject to c^T x = 0 where A - sigma B is
// singular with one-dimensional kernel spanned by B^-1 c (the usual setup:
// sigma an eigenvalue, c = B u0). The rhs is measured against the kernel
// first (compat_defect); above compat_tol this throws CompatibilityError,
// below it the kernel component is projected out and the bordered system
// [A - sigma B, c; c^T, 0] is solved by sparse LU.
ConstrainedResult solve_constrained(const SymSparseMatrix& A, double sigma,
                                    const SymSparseMatrix& B,
                                    const Eigen::VectorXd& rhs,
                                    const Eigen::VectorXd& c,
                                    double compat_tol = 1e-6);

}  // namespace rwg::eig
