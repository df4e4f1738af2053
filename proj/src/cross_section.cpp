#include "rwg/cross_section.hpp"

#include <cmath>

#include "rwg/p1.hpp"

namespace rwg {

double RobinCoeff::at(int group) const {
  if (by_group.size() == 1) return by_group[0];
  if (group < 0 || group >= static_cast<int>(by_group.size()))
    throw CrossSectionError("boundary group without a Robin coefficient: " +
                            std::to_string(group));
  return by_group[group];
}

void RobinCoeff::validate(int n_groups) const {
  if (by_group.empty())
    throw CrossSectionError("empty Robin coefficient table");
  if (by_group.size() != 1 &&
      static_cast<int>(by_group.size()) < n_groups)
    throw CrossSectionError("Robin coefficient table shorter than the "
                            "number of boundary groups");
  for (double g : by_group)
    if (!(g >= 0.0))
      throw CrossSectionError("Robin coefficient must be >= 0");
}

RobinForms assemble_robin(const Mesh2D& mesh, const RobinCoeff& gamma,
                          const AffineWeight& weight, bool check_positivity) {
  gamma.validate(mesh.n_groups);
  if (check_positivity)
    for (const auto& y : mesh.v)
      if (!(weight(y) > 0.0))
        throw CrossSectionError(
            "weight non-positive at a mesh node (degenerate metric)");

  const auto n = static_cast<Eigen::Index>(mesh.n_nodes());
  eig::Triplets kt, mt;
  kt.reserve(9 * mesh.tri.size() + 4 * mesh.bedges.size());
  mt.reserve(9 * mesh.tri.size());
  for (size_t t = 0; t < mesh.tri.size(); ++t) {
    const auto& T = mesh.tri[t];
    const auto g = p1::tri_geom(mesh, static_cast<int>(t));
    Eigen::Vector3d w;
    for (int i = 0; i < 3; ++i) w[i] = weight(mesh.v[T[i]]);
    const Eigen::Matrix3d ke = p1::stiff3_w(g, w.mean());
    const Eigen::Matrix3d me = p1::mass3_w(g.area, w);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        kt.emplace_back(T[i], T[j], ke(i, j));
        mt.emplace_back(T[i], T[j], me(i, j));
      }
  }
  for (const auto& e : mesh.bedges) {
    const double g = gamma.at(e.group);
    if (g == 0.0) continue;
    const Eigen::Matrix2d be =
        g * p1::edge_mass_w(e.len, weight(mesh.v[e.a]), weight(mesh.v[e.b]));
    const int id[2] = {e.a, e.b};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) kt.emplace_back(id[i], id[j], be(i, j));
  }
  return {eig::SymSparseMatrix::from_triplets(n, kt),
          eig::SymSparseMatrix::from_triplets(n, mt)};
}

namespace {

// 1/2 bdry u^2 n, exact for the piecewise-linear u
Eigen::Vector2d boundary_half_moment(const Mesh2D& mesh,
                                     const Eigen::VectorXd& u) {
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (const auto& e : mesh.bedges) {
    const double ua = u[e.a], ub = u[e.b];
    acc += 0.5 * e.n * e.len * (ua * ua + ua * ub + ub * ub) / 3.0;
  }
  return acc;
}

// int u^2 y, exact (cubic integrand)
Eigen::Vector2d weighted_centroid(const Mesh2D& mesh,
                                  const Eigen::VectorXd& u) {
  Eigen::Vector2d acc = Eigen::Vector2d::Zero();
  for (size_t t = 0; t < mesh.tri.size(); ++t) {
    const auto& T = mesh.tri[t];
    const double A = mesh.tri_area(static_cast<int>(t));
    for (int k = 0; k < 3; ++k) {
      double m = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          int e[3] = {0, 0, 0};
          ++e[i];
          ++e[j];
          ++e[k];
          m += u[T[i]] * u[T[j]] * p1::tri_int(A, e[0], e[1], e[2]);
        }
      acc += m * mesh.v[T[k]];
    }
  }
  return acc;
}

}  // namespace

GroundState solve_ground_state(const Mesh2D& mesh, const RobinCoeff& gamma) {
  const auto forms = assemble_robin(mesh, gamma);
  const auto pairs = eig::solve_gevp_smallest(forms.K, forms.M, 2);
  GroundState gs;
  gs.lambda0 = pairs.values[0];
  gs.lambda1 = pairs.values[1];
  gs.u0 = pairs.vectors.col(0);
  if (gs.u0.minCoeff() <= 0.0)
    throw CrossSectionError(
        "ground state has a non-positive nodal value (wrong eigenpair?)");
  gs.rho0 = boundary_half_moment(mesh, gs.u0);
  gs.y0 = weighted_centroid(mesh, gs.u0);
  return gs;
}

ShapeFunctions solve_shape_functions(const Mesh2D& mesh,
                                     const RobinCoeff& gamma,
                                     const GroundState& gs) {
  const auto forms = assemble_robin(mesh, gamma);
  const Eigen::VectorXd Mu0 = forms.M.apply(gs.u0);
  ShapeFunctions sf;
  for (int dir = 0; dir < 2; ++dir) {
    const Eigen::Vector2d xi = Eigen::Vector2d::Unit(dir);
    // load of the response problem: -xi.grad(u0) + (rho0.xi) u0, tested
    // against the nodal basis with exact quadrature
    Eigen::VectorXd b = gs.rho0.dot(xi) * Mu0;
    for (size_t t = 0; t < mesh.tri.size(); ++t) {
      const auto& T = mesh.tri[t];
      const auto g = p1::tri_geom(mesh, static_cast<int>(t));
      Eigen::Vector2d grad_u0 = Eigen::Vector2d::Zero();
      for (int i = 0; i < 3; ++i) grad_u0 += gs.u0[T[i]] * g.grad[i];
      const double load = -xi.dot(grad_u0) * g.area / 3.0;
      for (int i = 0; i < 3; ++i) b[T[i]] += load;
    }
    // A load at eigensolver roundoff (symmetric or free sections) has no
    // resolvable response; the relative compatibility ratio of such noise
    // is meaningless, so short-circuit to the exact zero answer.
    if (b.norm() <= 1e-8 * Mu0.norm()) {
      (dir == 0 ? sf.chi1 : sf.chi2) = Eigen::VectorXd::Zero(b.size());
      (dir == 0 ? sf.compat1 : sf.compat2) = 0.0;
      continue;
    }
    const auto res =
        eig::solve_constrained(forms.K, gs.lambda0, forms.M, b, Mu0, 1e-8);
    (dir == 0 ? sf.chi1 : sf.chi2) = res.x;
    (dir == 0 ? sf.compat1 : sf.compat2) = res.compat_defect;
  }
  return sf;
}

PerturbationTensors compute_M0(const Mesh2D& mesh, const RobinCoeff& gamma,
                               const GroundState& gs,
                               const ShapeFunctions& sf) {
  PerturbationTensors pt;
  Eigen::Matrix2d m0 = -0.5 * Eigen::Matrix2d::Identity();
  m0 += gs.rho0 * gs.y0.transpose();
  for (const auto& e : mesh.bedges) {
    const Eigen::Vector2d ya = mesh.v[e.a], yb = mesh.v[e.b];
    for (const auto& [t, w] : p1::kGauss2) {
      const Eigen::Vector2d y = (1.0 - t) * ya + t * yb;
      const double u = (1.0 - t) * gs.u0[e.a] + t * gs.u0[e.b];
      const Eigen::Vector2d chi((1.0 - t) * sf.chi1[e.a] + t * sf.chi1[e.b],
                                (1.0 - t) * sf.chi2[e.a] + t * sf.chi2[e.b]);
      m0 += w * e.len *
            (0.5 * u * u * y * e.n.transpose() + u * chi * e.n.transpose());
    }
  }
  pt.M0 = m0;

  // Three routes to the second-order coefficient, per probe direction:
  //   tensor route      1/2 M0 xi.xi
  //   gradient route    int (xi.grad chi) u0 + int (xi.grad u0)(xi.y) u0
  //   adjoint route     int (xi.grad u0) chi + (rho0.xi)(y0.xi)
  const std::array<Eigen::Vector2d, 3> probes = {
      Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1), Eigen::Vector2d(1, 1)};
  pt.consistency_gap = 0.0;
  for (size_t p = 0; p < probes.size(); ++p) {
    const Eigen::Vector2d& xi = probes[p];
    const Eigen::VectorXd chi = sf.chi(xi);
    double grad_route = 0.0, adj_route = 0.0;
    for (size_t t = 0; t < mesh.tri.size(); ++t) {
      const auto& T = mesh.tri[t];
      const auto g = p1::tri_geom(mesh, static_cast<int>(t));
      Eigen::Vector2d grad_u0 = Eigen::Vector2d::Zero(),
                      grad_chi = Eigen::Vector2d::Zero();
      Eigen::Vector3d uT, xyT;
      for (int i = 0; i < 3; ++i) {
        grad_u0 += gs.u0[T[i]] * g.grad[i];
        grad_chi += chi[T[i]] * g.grad[i];
        uT[i] = gs.u0[T[i]];
        xyT[i] = xi.dot(mesh.v[T[i]]);
      }
      const double int_u0 = g.area / 3.0 * uT.sum();
      const double int_chi =
          g.area / 3.0 * (chi[T[0]] + chi[T[1]] + chi[T[2]]);
      grad_route += xi.dot(grad_chi) * int_u0 +
                    xi.dot(grad_u0) * xyT.dot(p1::mass3(g.area) * uT);
      adj_route += xi.dot(grad_u0) * int_chi;
    }
    adj_route += gs.rho0.dot(xi) * gs.y0.dot(xi);
    const double tensor_route = 0.5 * xi.dot(pt.M0 * xi);
    pt.route_values[p] =
        Eigen::Vector3d(tensor_route, grad_route, adj_route);
    const double gap = std::max({std::abs(tensor_route - grad_route),
                                 std::abs(tensor_route - adj_route),
                                 std::abs(grad_route - adj_route)});
    pt.consistency_gap = std::max(pt.consistency_gap, gap);
  }
  if (pt.consistency_gap > 1e-4)
    throw CrossSectionError(
        "second-order coefficient routes disagree by " +
        std::to_string(pt.consistency_gap) + " (assembly bug?)");
  return pt;
}

double lambda0_perturbed(const Mesh2D& mesh, const RobinCoeff& gamma,
                         const Eigen::Vector2d& xi) {
  const AffineWeight w{1.0, -xi};
  for (const auto& y : mesh.v)
    if (w(y) < 0.5)
      throw CrossSectionError(
          "tilt weight drops below 1/2 on the section (|xi| too large)");
  const auto forms = assemble_robin(mesh, gamma, w);
  return eig::solve_gevp_smallest(forms.K, forms.M, 1).values[0];
}

double error_functional(const Mesh2D& mesh, const RobinCoeff& gamma,
                        const GroundState& gs, const Eigen::Vector2d& xi,
                        const ScalarField2D& v) {
  const auto forms = assemble_robin(mesh, gamma, AffineWeight{1.0, -xi});
  return v.dot(forms.K.apply(v)) -
         (gs.lambda0 + gs.rho0.dot(xi)) * v.dot(forms.M.apply(v));
}

QuasiEigenvector quasi_eigenvector_residual(const Mesh2D& mesh,
                                            const RobinCoeff& gamma,
                                            const Eigen::Vector2d& xi,
                                            double eps) {
  for (const auto& y : mesh.v)
    if (!(1.0 - eps * xi.dot(y) > 0.0))
      throw CrossSectionError("tilt weight non-positive at this eps");

  const auto gs = solve_ground_state(mesh, gamma);
  const auto forms = assemble_robin(mesh, gamma);
  // pure perturbation blocks: K(eps) = K0 - eps K1, M(eps) = M0 - eps M1
  const auto pert =
      assemble_robin(mesh, gamma, AffineWeight{0.0, xi}, false);
  const Eigen::VectorXd& u0 = gs.u0;
  const Eigen::VectorXd Mu0 = forms.M.apply(u0);
  const Eigen::VectorXd K1u0 = pert.K.apply(u0), M1u0 = pert.M.apply(u0);

  QuasiEigenvector q;
  q.lambda1 = u0.dot(gs.lambda0 * M1u0 - K1u0);
  const Eigen::VectorXd rhs1 =
      K1u0 - gs.lambda0 * M1u0 + q.lambda1 * Mu0;
  const Eigen::VectorXd u1 =
      eig::solve_constrained(forms.K, gs.lambda0, forms.M, rhs1, Mu0).x;

  const Eigen::VectorXd K1u1 = pert.K.apply(u1), M1u1 = pert.M.apply(u1);
  q.lambda2 = -u0.dot(K1u1 - gs.lambda0 * M1u1) + q.lambda1 * u0.dot(M1u0);
  const Eigen::VectorXd rhs2 = K1u1 - gs.lambda0 * M1u1 +
                               q.lambda1 * forms.M.apply(u1) -
                               q.lambda1 * M1u0 + q.lambda2 * Mu0;
  const Eigen::VectorXd u2 =
      eig::solve_constrained(forms.K, gs.lambda0, forms.M, rhs2, Mu0).x;

  q.w_eps = u0 + eps * u1 + eps * eps * u2;
  const double P = gs.lambda0 + eps * q.lambda1 + eps * eps * q.lambda2;
  const Eigen::VectorXd r =
      forms.K.apply(q.w_eps) - eps * pert.K.apply(q.w_eps) -
      P * (forms.M.apply(q.w_eps) - eps * pert.M.apply(q.w_eps));
  // dual norm against the lumped mass: mesh-size independent scale
  const Eigen::VectorXd lumped = forms.M.mat * Eigen::VectorXd::Ones(r.size());
  q.residual = std::sqrt((r.array().square() / lumped.array()).sum());
  return q;
}

double m_eps(const CurveSpec& curve, const Mesh2D& mesh,
             const RobinCoeff& gamma, double s, double eps) {
  const auto frame = frame_at(curve, s, 0);
  return lambda0_perturbed(mesh, gamma, eps * frame.k * frame.z);
}

}  // namespace rwg
