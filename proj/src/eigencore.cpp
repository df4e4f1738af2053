#include "rwg/eigencore.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

namespace rwg::eig {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using LDLT = Eigen::SimplicialLDLT<SpMat>;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

bool factor_pd(LDLT& ldlt, const SpMat& C) {
  ldlt.compute(C);
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = ldlt.vectorD();
  return d.minCoeff() > 0.0;
}

// B-orthonormalizes the columns of Z in place via eigen-whitening of the
// small Gram matrix. Deficient directions are replaced by fresh random
// vectors and the whitening retried; with an invertible iteration operator
// this fires only on pathological starts.
void b_orthonormalize(Eigen::MatrixXd& Z, const SpMat& B, std::mt19937& rng) {
  const Eigen::Index m = Z.cols();
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 5; ++attempt) {
    Eigen::MatrixXd BZ = B * Z;
    Eigen::MatrixXd G = Z.transpose() * BZ;
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const Eigen::VectorXd s = es.eigenvalues();
    const double smax = s.maxCoeff();
    if (smax <= 0.0) {
      for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < Z.rows(); ++i) Z(i, j) = gauss(rng);
      continue;
    }
    bool deficient = false;
    for (Eigen::Index j = 0; j < m; ++j)
      if (s[j] <= 1e-12 * smax) deficient = true;
    if (!deficient) {
      Eigen::MatrixXd W =
          es.eigenvectors() * s.cwiseSqrt().cwiseInverse().asDiagonal();
      Z = (Z * W).eval();
      // One whitening of an ill-conditioned Gram matrix leaves O(eps*kappa)
      // non-orthogonality; iterate until the pass started well-conditioned.
      if (smax <= 10.0 * s.minCoeff()) return;
      continue;
    }
    Eigen::MatrixXd ZV = Z * es.eigenvectors();
    for (Eigen::Index j = 0; j < m; ++j)
      if (s[j] <= 1e-12 * smax)
        for (Eigen::Index i = 0; i < Z.rows(); ++i) ZV(i, j) = gauss(rng);
    Z = ZV;
  }
  throw EigError("subspace basis collapsed during B-orthonormalization");
}

void fix_signs(Eigen::MatrixXd& V) {
  for (Eigen::Index j = 0; j < V.cols(); ++j) {
    Eigen::Index imax = 0;
    double amax = 0.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
      const double a = std::abs(V(i, j));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (V(imax, j) < 0.0) V.col(j) *= -1.0;
  }
}

}  // namespace

SymSparseMatrix SymSparseMatrix::from_triplets(Eigen::Index n,
                                               const Triplets& entries) {
  for (const auto& t : entries) {
    if (!std::isfinite(t.value()))
      throw EigError("non-finite entry in sparse assembly at (" +
                     std::to_string(t.row()) + "," + std::to_string(t.col()) +
                     ")");
    if (t.row() < 0 || t.row() >= n || t.col() < 0 || t.col() >= n)
      throw EigError("triplet index out of range");
  }
  SpMat A(n, n);
  A.setFromTriplets(entries.begin(), entries.end());
  SpMat At = SpMat(A.transpose());
  const double scale = A.coeffs().size() ? A.coeffs().cwiseAbs().maxCoeff() : 0.0;
  SpMat D = A - At;
  const double asym = D.coeffs().size() ? D.coeffs().cwiseAbs().maxCoeff() : 0.0;
  if (asym > 1e-12 * std::max(scale, 1.0))
    throw EigError("assembled matrix is not symmetric (relative asymmetry " +
                   fmt(asym / std::max(scale, 1.0)) + ")");
  SymSparseMatrix out;
  out.mat = 0.5 * (A + At);
  out.mat.makeCompressed();
  return out;
}

EigPairs solve_gevp_smallest(const SymSparseMatrix& A, const SymSparseMatrix& B,
                             int k, const EigOptions& opts) {
  const Eigen::Index n = A.n();
  if (B.n() != n) throw EigError("operator and metric dimensions differ");
  if (k < 1 || k > n) throw EigError("requested eigenpair count out of range");

  {
    LDLT bldlt;
    bldlt.compute(B.mat);
    if (bldlt.info() != Eigen::Success || bldlt.vectorD().minCoeff() <= 0.0)
      throw EigError("metric matrix is not positive definite");
  }

  const Eigen::Index m =
      std::min<Eigen::Index>(n, k + std::max(0, opts.block_extra));

  // Bracket the bottom of the pencil spectrum: sigma_pd has A - sigma B
  // positive definite, sigma_npd does not. Bisection then pushes sigma_pd up
  // toward lambda_min so the shift-invert ratio stays small.
  auto ldlt = std::make_unique<LDLT>();
  double sigma = opts.shift.value_or(0.0);
  double sigma_pd, sigma_npd;
  const auto try_sigma = [&](double s) {
    SpMat C = A.mat - s * B.mat;
    return factor_pd(*ldlt, C);
  };
  if (try_sigma(sigma)) {
    sigma_pd = sigma;
    double step = 0.5 * (std::abs(sigma) + 1.0);
    bool bracketed = false;
    for (int it = 0; it < 60; ++it) {
      const double s = sigma_pd + step;
      if (try_sigma(s)) {
        sigma_pd = s;
        step *= 2.0;
      } else {
        sigma_npd = s;
        bracketed = true;
        break;
      }
    }
    if (!bracketed) throw EigError("pencil appears to have empty spectrum");
  } else {
    sigma_npd = sigma;
    double step = 0.5 * (std::abs(sigma) + 1.0);
    bool bracketed = false;
    for (int it = 0; it < 60; ++it) {
      const double s = sigma_npd - step;
      if (try_sigma(s)) {
        sigma_pd = s;
        bracketed = true;
        break;
      }
      step *= 2.0;
    }
    if (!bracketed)
      throw EigError("metric verified definite but no definite shift found");
  }
  for (int it = 0; it < 12; ++it) {
    if (sigma_npd - sigma_pd <= 1e-3 * (std::abs(sigma_npd) + 1.0)) break;
    const double mid = 0.5 * (sigma_pd + sigma_npd);
    if (try_sigma(mid))
      sigma_pd = mid;
    else
      sigma_npd = mid;
  }
  // Last factorization may correspond to sigma_npd; redo at the PD endpoint.
  if (!try_sigma(sigma_pd))
    throw EigError("definite shift lost during bisection refinement");
  sigma = sigma_pd;

  std::mt19937 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(n, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = gauss(rng);
  b_orthonormalize(X, B.mat, rng);

  EigPairs out;
  out.shift_used = sigma;
  Eigen::VectorXd theta(m);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    Eigen::MatrixXd Y = B.mat * X;
    Eigen::MatrixXd Z(n, m);
    for (Eigen::Index j = 0; j < m; ++j) Z.col(j) = ldlt->solve(Y.col(j));
    b_orthonormalize(Z, B.mat, rng);

    Eigen::MatrixXd AZ = A.mat * Z;
    Eigen::MatrixXd T = Z.transpose() * AZ;
    T = 0.5 * (T + T.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    theta = es.eigenvalues();
    X = Z * es.eigenvectors();

    Eigen::MatrixXd AX = AZ * es.eigenvectors();
    Eigen::MatrixXd BX = B.mat * X;
    Eigen::VectorXd res(k);
    bool done = true;
    for (int j = 0; j < k; ++j) {
      const double bn = BX.col(j).norm();
      res[j] = (AX.col(j) - theta[j] * BX.col(j)).norm() /
               ((1.0 + std::abs(theta[j])) * bn);
      if (!(res[j] <= opts.tol)) done = false;
    }
    out.iterations = iter;
    if (done) {
      out.values = theta.head(k);
      out.vectors = X.leftCols(k);
      out.residuals = res;
      fix_signs(out.vectors);
      return out;
    }
    if (iter == opts.max_iter)
      throw ConvergenceError(
          "eigensolver stalled: worst residual " + fmt(res.maxCoeff()) +
          " after " + std::to_string(iter) + " iterations (tol " +
          fmt(opts.tol) + ")");
  }
  throw ConvergenceError("eigensolver made no iterations");
}

ConstrainedResult solve_constrained(const SymSparseMatrix& A, double sigma,
                                    const SymSparseMatrix& B,
                                    const Eigen::VectorXd& rhs,
                                    const Eigen::VectorXd& c,
                                    double compat_tol) {
  const Eigen::Index n = A.n();
  if (B.n() != n || rhs.size() != n || c.size() != n)
    throw EigError("constrained solve dimension mismatch");

  ConstrainedResult out;
  if (rhs.norm() == 0.0) {
    out.x = Eigen::VectorXd::Zero(n);
    return out;
  }

  LDLT bldlt;
  bldlt.compute(B.mat);
  if (bldlt.info() != Eigen::Success)
    throw EigError("metric factorization failed in constrained solve");
  const Eigen::VectorXd k0 = bldlt.solve(c);  // kernel representative

  // zero load is trivially compatible; avoid the 0/0 ratio
  const double rhs_norm = rhs.norm();
  out.compat_defect =
      rhs_norm == 0.0 ? 0.0 : std::abs(k0.dot(rhs)) / (k0.norm() * rhs_norm);
  if (out.compat_defect > compat_tol)
    throw CompatibilityError(
        "right-hand side has kernel component (defect " +
        fmt(out.compat_defect) + ", tolerance " + fmt(compat_tol) + ")");
  const Eigen::VectorXd rhs_p = rhs - (k0.dot(rhs) / k0.dot(c)) * c;

  // Bordered (n+1) saddle system; the extra row pins the c-orthogonal
  // representative, the extra column absorbs any leftover kernel load.
  Triplets trips;
  SpMat C = A.mat - sigma * B.mat;
  trips.reserve(static_cast<size_t>(C.nonZeros()) + 2 * n);
  for (Eigen::Index col = 0; col < C.outerSize(); ++col)
    for (SpMat::InnerIterator it(C, col); it; ++it)
      trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (c[i] != 0.0) {
      trips.emplace_back(i, n, c[i]);
      trips.emplace_back(n, i, c[i]);
    }
  }
  SpMat Bord(n + 1, n + 1);
  Bord.setFromTriplets(trips.begin(), trips.end());
  Bord.makeCompressed();

  Eigen::SparseLU<SpMat> lu;
  lu.compute(Bord);
  if (lu.info() != Eigen::Success)
    throw EigError("bordered factorization failed in constrained solve");
  Eigen::VectorXd f(n + 1);
  f.head(n) = rhs_p;
  f[n] = 0.0;
  const Eigen::VectorXd sol = lu.solve(f);

  out.x = sol.head(n);
  out.multiplier = sol[n];
  const double ortho = std::abs(c.dot(out.x));
  if (ortho > 1e-10 * c.norm() * (out.x.norm() + 1.0))
    throw EigError("constraint violated after bordered solve (" + fmt(ortho) +
                   ")");
  return out;
}

}  // namespace rwg::eig
