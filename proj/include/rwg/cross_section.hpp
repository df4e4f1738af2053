#pragma once

// Cross-section solver: Robin ground state of the planar section, its first
// moments, the linear-response shape functions, the second-order tensor M0
// driving the effective dynamics, the perturbed eigenvalue for a tilted
// measure, and the quasi-eigenvector residual that certifies the expansion
// order by order.

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "rwg/eigencore.hpp"
#include "rwg/geometry.hpp"
#include "rwg/mesh.hpp"

namespace rwg {

class CrossSectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ScalarField2D = Eigen::VectorXd;  // nodal values, piecewise linear

// Robin coefficient, piecewise constant per boundary-edge group. A single
// entry applies to every group.
struct RobinCoeff {
  std::vector<double> by_group;

  static RobinCoeff uniform(double g) { return {{g}}; }
  double at(int group) const;
  void validate(int n_groups) const;  // throws unless all values >= 0
};

// w(y) = c0 + g . y; the only weight shape the assemblies accept, so all
// quadratures stay exact.
struct AffineWeight {
  double c0 = 1.0;
  Eigen::Vector2d g = Eigen::Vector2d::Zero();

  double operator()(const Eigen::Vector2d& y) const { return c0 + g.dot(y); }
};

struct RobinForms {
  eig::SymSparseMatrix K;  // int w grad.grad + bdry w gamma u v
  eig::SymSparseMatrix M;  // int w u v
};

// check_positivity: affine weights attain extrema at nodes, so a nodal scan
// is an exact positivity test. Disable it only for pure perturbation blocks
// (weight xi.y), which are sign-indefinite by design.
RobinForms assemble_robin(const Mesh2D& mesh, const RobinCoeff& gamma,
                          const AffineWeight& weight = {},
                          bool check_positivity = true);

struct GroundState {
  double lambda0 = 0.0;
  double lambda1 = 0.0;  // next eigenvalue up, for the spectral gap
  ScalarField2D u0;      // positive, int u0^2 = 1
  Eigen::Vector2d rho0 = Eigen::Vector2d::Zero();  // 1/2 bdry u0^2 n
  Eigen::Vector2d y0 = Eigen::Vector2d::Zero();    // int u0^2 y

  double kappa() const { return lambda1 - lambda0; }
};

GroundState solve_ground_state(const Mesh2D& mesh, const RobinCoeff& gamma);

struct ShapeFunctions {
  ScalarField2D chi1, chi2;   // responses for xi = e1, e2
  double compat1 = 0.0, compat2 = 0.0;  // solvability defects of the loads

  ScalarField2D chi(const Eigen::Vector2d& xi) const {
    return xi.x() * chi1 + xi.y() * chi2;
  }
};

ShapeFunctions solve_shape_functions(const Mesh2D& mesh,
                                     const RobinCoeff& gamma,
                                     const GroundState& gs);

struct PerturbationTensors {
  Eigen::Matrix2d M0 = Eigen::Matrix2d::Zero();
  // Three independent routes to the same second-order coefficient,
  // evaluated for xi in {e1, e2, e1+e2}: the boundary-assembled tensor
  // form, the gradient route, and the adjoint route. Identical in exact
  // arithmetic; the spread measures discretization consistency.
  std::array<Eigen::Vector3d, 3> route_values{};
  double consistency_gap = 0.0;  // max pairwise spread over the directions
};

PerturbationTensors compute_M0(const Mesh2D& mesh, const RobinCoeff& gamma,
                               const GroundState& gs,
                               const ShapeFunctions& sf);

// Smallest eigenvalue of the pencil weighted by 1 - xi.y. Requires the
// weight to stay >= 0.5 on the section.
double lambda0_perturbed(const Mesh2D& mesh, const RobinCoeff& gamma,
                         const Eigen::Vector2d& xi);

// int (1-xi.y)(|grad v|^2 - (lambda0 + rho0.xi) v^2) + bdry (1-xi.y) gamma v^2
double error_functional(const Mesh2D& mesh, const RobinCoeff& gamma,
                        const GroundState& gs, const Eigen::Vector2d& xi,
                        const ScalarField2D& v);

struct QuasiEigenvector {
  ScalarField2D w_eps;
  double residual = 0.0;  // discrete dual norm of (K(eps) - P(eps) M(eps)) w
  double lambda1 = 0.0;   // first-order eigenvalue coefficient
  double lambda2 = 0.0;   // second-order coefficient from the solvability
                          // condition of the second corrector
};

// Builds w = u0 + eps u1 + eps^2 u2 with correctors solved against the
// discrete pencil itself, so the residual is O(eps^3) on any mesh.
QuasiEigenvector quasi_eigenvector_residual(const Mesh2D& mesh,
                                            const RobinCoeff& gamma,
                                            const Eigen::Vector2d& xi,
                                            double eps);

// Axial composition: perturbed eigenvalue at the tilt eps k(s) z(s) given by
// the curve frame at arclength s.
double m_eps(const CurveSpec& curve, const Mesh2D& mesh,
             const RobinCoeff& gamma, double s, double eps);

}  // namespace rwg
