#pragma once

// Effective axial problem for balanced sections (vanishing boundary moment):
// twist constants of the section, the effective potential along the curve,
// the capped 1D spectral problem, and the eigenvalue prediction
// lambda_i = lambda0/eps^2 + mu_i with factored limit profiles.

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "rwg/cross_section.hpp"
#include "rwg/eigencore.hpp"
#include "rwg/geometry.hpp"
#include "rwg/mesh.hpp"

namespace rwg {

class Effective1DError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Robin coefficient on a tube end cap: a constant or a nodal field on the
// section mesh.
struct CapCoeff {
  double constant = 0.0;
  ScalarField2D nodal;  // empty selects the constant

  static CapCoeff uniform(double c) { return {c, {}}; }
  static CapCoeff field(ScalarField2D v) { return {0.0, std::move(v)}; }
};

struct EffectiveConstants {
  double twist_stiffness = 0.0;  // C1: gradient moment + boundary twist term
  double twist_drift = 0.0;      // C2: signed gradient-rotation moment
  double cap0 = 0.0, capL = 0.0;  // section-averaged end coefficients
};

// C1 = int |grad u0 . Ry|^2 + 1/2 bdry gamma u0^2 (y.t)^2,
// C2 = int u0 (grad u0 . Ry), caps averaged against u0^2; R is the
// clockwise quarter turn.
EffectiveConstants compute_constants(const Mesh2D& mesh,
                                     const RobinCoeff& gamma,
                                     const GroundState& gs,
                                     const CapCoeff& cap0,
                                     const CapCoeff& capL);

// q(s) = 1/2 M0 xi.xi + C1 tt^2 - C2 tt' on a uniform grid, with the three
// addends kept apart. tilde_tau is retained because the spectral assembly
// reconstructs the twist terms from it exactly rather than resampling q.
struct Potential1D {
  double L = 0.0;
  double step = 0.0;
  std::vector<double> s;
  std::vector<double> q;
  std::vector<double> curvature_term;  // 1/2 M0 xi.xi
  std::vector<double> twist_term;      // C1 tt^2
  std::vector<double> drift_term;      // -C2 tt'
  std::vector<double> tilde_tau;
};

Potential1D build_potential(const CurveSpec& curve, const Eigen::Matrix2d& M0,
                            const EffectiveConstants& consts, int n_cells);

struct SturmLiouvilleSpectrum {
  std::vector<double> mu;
  Eigen::MatrixXd w;  // columns are modes on the s grid, int w^2 = 1
  std::vector<double> s;
};

struct Form1D {
  eig::SymSparseMatrix K, M;
};

// Pencil of the pre-integration-by-parts axial form: stiffness, potential
// weights reconstructed from tilde_tau, the symmetrized first-order twist
// block C2 tt (w'v + wv'), and plain cap terms (no tt shifts).
Form1D assemble_form_a0(const EffectiveConstants& consts,
                        const std::vector<double>& tilde_tau,
                        const std::vector<Eigen::Vector2d>& xi,
                        const Eigen::Matrix2d& M0, double L);

// Integrated-by-parts assembly: the twist block becomes -C2 tt' with the
// cellwise-constant derivative of the interpolant, and the caps pick up the
// -C2 tt(0) / +C2 tt(L) shifts. Algebraically identical to assemble_form_a0
// (the per-cell product rule telescopes), which the tests verify.
SturmLiouvilleSpectrum solve_sturm_liouville(const Potential1D& pot,
                                             const EffectiveConstants& consts,
                                             double tt0, double ttL,
                                             int n_modes);

struct SymmetricPrediction {
  double eps = 0.0;
  std::vector<double> lambda;  // lambda0/eps^2 + mu_i
  // Limit profiles factored as v_i(s, y) = w_i(s) u0(y).
  Eigen::MatrixXd w;
  std::vector<double> s;
  ScalarField2D u0;
};

// Guards that the section is balanced: |rho0| at most 1e-6 of the boundary
// mass of u0^2, else directs to the localized pipeline.
SymmetricPrediction predict_symmetric(const Mesh2D& mesh, const GroundState& gs,
                                      const SturmLiouvilleSpectrum& spec,
                                      double eps);

}  // namespace rwg
