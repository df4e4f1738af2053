#include "rwg/effective1d.hpp"

#include <cmath>

#include "rwg/p1.hpp"

namespace rwg {

namespace {

Eigen::Vector2d rot_cw(const Eigen::Vector2d& y) { return {y.y(), -y.x()}; }

// int_omega c u0^2 with c affine per element (constant or nodal cap field)
double section_average(const Mesh2D& mesh, const GroundState& gs,
                       const CapCoeff& cap) {
  const bool nodal = cap.nodal.size() > 0;
  if (nodal && cap.nodal.size() != static_cast<Eigen::Index>(mesh.n_nodes()))
    throw Effective1DError("cap field size does not match the section mesh");
  if (nodal && cap.nodal.minCoeff() < 0.0)
    throw Effective1DError("cap coefficient must be nonnegative");
  if (!nodal && cap.constant < 0.0)
    throw Effective1DError("cap coefficient must be nonnegative");

  double acc = 0.0;
  for (size_t t = 0; t < mesh.tri.size(); ++t) {
    const auto& T = mesh.tri[t];
    const auto g = p1::tri_geom(mesh, static_cast<int>(t));
    Eigen::Vector3d c, u;
    for (int i = 0; i < 3; ++i) {
      c[i] = nodal ? cap.nodal[T[i]] : cap.constant;
      u[i] = gs.u0[T[i]];
    }
    acc += u.dot(p1::mass3_w(g.area, c) * u);
  }
  return acc;
}

}  // namespace

EffectiveConstants compute_constants(const Mesh2D& mesh,
                                     const RobinCoeff& gamma,
                                     const GroundState& gs,
                                     const CapCoeff& cap0,
                                     const CapCoeff& capL) {
  gamma.validate(mesh.n_groups);
  EffectiveConstants ec;

  for (size_t t = 0; t < mesh.tri.size(); ++t) {
    const auto& T = mesh.tri[t];
    const auto g = p1::tri_geom(mesh, static_cast<int>(t));
    Eigen::Vector2d grad_u = Eigen::Vector2d::Zero();
    for (int i = 0; i < 3; ++i) grad_u += gs.u0[T[i]] * g.grad[i];
    // f(y) = grad u0 . Ry is linear, so its nodal interpolant is itself and
    // both moments below are exact quadratic/cubic integrals.
    Eigen::Vector3d f, u;
    for (int i = 0; i < 3; ++i) {
      f[i] = grad_u.dot(rot_cw(mesh.v[T[i]]));
      u[i] = gs.u0[T[i]];
    }
    ec.twist_stiffness += f.dot(p1::mass3(g.area) * f);
    ec.twist_drift += f.dot(p1::mass3(g.area) * u);
  }

  for (const auto& e : mesh.bedges) {
    const double gam = gamma.at(e.group);
    if (gam == 0.0) continue;
    // u0^2 (y.t)^2 is quartic along the edge; three Gauss points are exact.
    for (const auto& [t, w] : p1::kGauss3) {
      const Eigen::Vector2d y = (1.0 - t) * mesh.v[e.a] + t * mesh.v[e.b];
      const double u = (1.0 - t) * gs.u0[e.a] + t * gs.u0[e.b];
      const double yt = y.dot(e.t);
      ec.twist_stiffness += 0.5 * w * e.len * gam * u * u * yt * yt;
    }
  }

  ec.cap0 = section_average(mesh, gs, cap0);
  ec.capL = section_average(mesh, gs, capL);
  return ec;
}

Potential1D build_potential(const CurveSpec& curve, const Eigen::Matrix2d& M0,
                            const EffectiveConstants& consts, int n_cells) {
  if (n_cells < 2) throw Effective1DError("potential grid needs >= 2 cells");
  Potential1D pot;
  pot.L = curve.L;
  pot.step = curve.L / n_cells;
  for (int j = 0; j <= n_cells; ++j) {
    const double s = j * pot.step;
    const auto fr = frame_at(curve, s, 1);
    const Eigen::Vector2d xi = fr.xi[0];
    pot.s.push_back(s);
    pot.curvature_term.push_back(0.5 * xi.dot(M0 * xi));
    pot.twist_term.push_back(consts.twist_stiffness * fr.tilde_tau *
                             fr.tilde_tau);
    pot.drift_term.push_back(-consts.twist_drift * fr.tilde_tau_p);
    pot.tilde_tau.push_back(fr.tilde_tau);
    pot.q.push_back(pot.curvature_term.back() + pot.twist_term.back() +
                    pot.drift_term.back());
  }
  return pot;
}

namespace {

// Shared pieces of the two twist assemblies: stiffness, the mass pencil and
// the zero-order potential weights (curvature term pw-linear, C1 tt^2
// integrated exactly as the square of the interpolant).
void assemble_common(const std::vector<double>& tt,
                     const std::vector<double>& curv, double C1, double L,
                     eig::Triplets& k, eig::Triplets& m) {
  const int n = static_cast<int>(tt.size()) - 1;
  const double h = L / n;
  for (int c = 0; c < n; ++c) {
    const int a = c, b = c + 1;
    k.emplace_back(a, a, 1.0 / h);
    k.emplace_back(b, b, 1.0 / h);
    k.emplace_back(a, b, -1.0 / h);
    k.emplace_back(b, a, -1.0 / h);

    const Eigen::Matrix2d mc = p1::edge_mass_w(h, 1.0, 1.0);
    const Eigen::Matrix2d mq = p1::edge_mass_w(h, curv[a], curv[b]);
    Eigen::Matrix2d mt = Eigen::Matrix2d::Zero();
    for (const auto& [t, w] : p1::kGauss3) {
      const double tau = (1.0 - t) * tt[a] + t * tt[b];
      const double phi[2] = {1.0 - t, t};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          mt(i, j) += w * h * C1 * tau * tau * phi[i] * phi[j];
    }
    const int idx[2] = {a, b};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        m.emplace_back(idx[i], idx[j], mc(i, j));
        k.emplace_back(idx[i], idx[j], mq(i, j) + mt(i, j));
      }
  }
}

std::vector<double> curvature_samples(const std::vector<Eigen::Vector2d>& xi,
                                      const Eigen::Matrix2d& M0) {
  std::vector<double> curv;
  curv.reserve(xi.size());
  for (const auto& x : xi) curv.push_back(0.5 * x.dot(M0 * x));
  return curv;
}

}  // namespace

Form1D assemble_form_a0(const EffectiveConstants& consts,
                        const std::vector<double>& tilde_tau,
                        const std::vector<Eigen::Vector2d>& xi,
                        const Eigen::Matrix2d& M0, double L) {
  if (tilde_tau.size() < 3 || tilde_tau.size() != xi.size())
    throw Effective1DError("form grid needs >= 3 matching samples");
  const int n = static_cast<int>(tilde_tau.size()) - 1;
  const double h = L / n;
  eig::Triplets k, m;
  assemble_common(tilde_tau, curvature_samples(xi, M0),
                  consts.twist_stiffness, L, k, m);

  // Symmetrized first-order block: C2 int tt (w'v + wv') with tt the
  // pw-linear interpolant, integrated exactly per cell.
  const double C2 = consts.twist_drift;
  for (int c = 0; c < n; ++c) {
    const double ta = tilde_tau[c], tb = tilde_tau[c + 1];
    k.emplace_back(c, c, -C2 * (2.0 * ta + tb) / 3.0);
    k.emplace_back(c + 1, c + 1, C2 * (ta + 2.0 * tb) / 3.0);
    k.emplace_back(c, c + 1, C2 * (ta - tb) / 6.0);
    k.emplace_back(c + 1, c, C2 * (ta - tb) / 6.0);
  }
  k.emplace_back(0, 0, consts.cap0);
  k.emplace_back(n, n, consts.capL);

  Form1D f;
  f.K = eig::SymSparseMatrix::from_triplets(n + 1, k);
  f.M = eig::SymSparseMatrix::from_triplets(n + 1, m);
  return f;
}

SturmLiouvilleSpectrum solve_sturm_liouville(const Potential1D& pot,
                                             const EffectiveConstants& consts,
                                             double tt0, double ttL,
                                             int n_modes) {
  if (n_modes < 1) throw Effective1DError("need at least one mode");
  const int n = static_cast<int>(pot.s.size()) - 1;
  if (n < 2) throw Effective1DError("potential grid needs >= 2 cells");
  const double h = pot.step;
  eig::Triplets k, m;
  assemble_common(pot.tilde_tau, pot.curvature_term, consts.twist_stiffness,
                  pot.L, k, m);

  // Integrated-by-parts twist block: cellwise-constant derivative of the
  // tt interpolant against the plain mass, ends shifted into the caps.
  const double C2 = consts.twist_drift;
  for (int c = 0; c < n; ++c) {
    const double d = -C2 * (pot.tilde_tau[c + 1] - pot.tilde_tau[c]) / h;
    const Eigen::Matrix2d mc = p1::edge_mass_w(h, d, d);
    const int idx[2] = {c, c + 1};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) k.emplace_back(idx[i], idx[j], mc(i, j));
  }
  k.emplace_back(0, 0, consts.cap0 - C2 * tt0);
  k.emplace_back(n, n, consts.capL + C2 * ttL);

  const auto K = eig::SymSparseMatrix::from_triplets(n + 1, k);
  const auto M = eig::SymSparseMatrix::from_triplets(n + 1, m);
  const auto pairs = eig::solve_gevp_smallest(K, M, n_modes, {});

  SturmLiouvilleSpectrum spec;
  spec.mu.assign(pairs.values.data(), pairs.values.data() + pairs.values.size());
  spec.w = pairs.vectors;
  spec.s = pot.s;
  return spec;
}

SymmetricPrediction predict_symmetric(const Mesh2D& mesh,
                                      const GroundState& gs,
                                      const SturmLiouvilleSpectrum& spec,
                                      double eps) {
  if (eps <= 0.0) throw Effective1DError("eps must be positive");
  double boundary_mass = 0.0;
  for (const auto& e : mesh.bedges) {
    const double ua = gs.u0[e.a], ub = gs.u0[e.b];
    boundary_mass += 0.5 * e.len * (ua * ua + ua * ub + ub * ub) / 3.0;
  }
  if (gs.rho0.norm() > 1e-6 * boundary_mass)
    throw Effective1DError(
        "boundary moment " + std::to_string(gs.rho0.norm()) +
        " is not balanced (tolerance " + std::to_string(1e-6 * boundary_mass) +
        "); this section localizes, use the localized pipeline");

  SymmetricPrediction pred;
  pred.eps = eps;
  for (double mu : spec.mu)
    pred.lambda.push_back(gs.lambda0 / (eps * eps) + mu);
  pred.w = spec.w;
  pred.s = spec.s;
  pred.u0 = gs.u0;
  return pred;
}

}  // namespace rwg
