#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "rwg/cross_section.hpp"
#include "rwg/geometry.hpp"
#include "rwg/mesh.hpp"

using rwg::AffineWeight;
using rwg::assemble_robin;
using rwg::compute_M0;
using rwg::CrossSectionError;
using rwg::CurveSpec;
using rwg::error_functional;
using rwg::GroundState;
using rwg::lambda0_perturbed;
using rwg::Mesh2D;
using rwg::mesh_domain;
using rwg::Profile;
using rwg::quasi_eigenvector_residual;
using rwg::RobinCoeff;
using rwg::ShapeSpec;
using rwg::solve_ground_state;
using rwg::solve_shape_functions;

namespace {

// Root of J0(j) - j J1(j) = 0; j^2 is the reference ground eigenvalue of the
// unit disk with unit Robin coefficient.
double disk_reference_eigenvalue() {
  auto f = [](double j) {
    return std::cyl_bessel_j(0, j) - j * std::cyl_bessel_j(1, j);
  };
  double lo = 1.0, hi = 2.0;
  REQUIRE(f(lo) > 0);
  REQUIRE(f(hi) < 0);
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0 ? lo : hi) = mid;
  }
  const double j = 0.5 * (lo + hi);
  return j * j;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double xm = 0, ym = 0;
  for (int i = 0; i < n; ++i) {
    xm += std::log(x[i]);
    ym += std::log(y[i]);
  }
  xm /= n;
  ym /= n;
  double num = 0, den = 0;
  for (int i = 0; i < n; ++i) {
    num += (std::log(x[i]) - xm) * (std::log(y[i]) - ym);
    den += (std::log(x[i]) - xm) * (std::log(x[i]) - xm);
  }
  return num / den;
}

std::map<std::pair<long long, long long>, int> coord_index(const Mesh2D& m) {
  std::map<std::pair<long long, long long>, int> idx;
  for (size_t i = 0; i < m.v.size(); ++i)
    idx[{llround(m.v[i].x() * 1e9), llround(m.v[i].y() * 1e9)}] =
        static_cast<int>(i);
  return idx;
}

int node_at(const std::map<std::pair<long long, long long>, int>& idx,
            const Eigen::Vector2d& p) {
  const auto it = idx.find({llround(p.x() * 1e9), llround(p.y() * 1e9)});
  REQUIRE(it != idx.end());
  return it->second;
}

// Dense reference assembly with quadrature unrelated to the production one:
// a 7-point degree-5 rule on triangles and 4-point Gauss-Legendre on edges.
void reference_forms(const Mesh2D& m, const RobinCoeff& gamma,
                     const AffineWeight& w, Eigen::MatrixXd& K,
                     Eigen::MatrixXd& M) {
  const int n = static_cast<int>(m.n_nodes());
  K.setZero(n, n);
  M.setZero(n, n);

  const double ta = 0.059715871789770, tb = 0.470142064105115;
  const double ua = 0.797426985353087, ub = 0.101286507323456;
  const double tri_pts[7][3] = {
      {1 / 3.0, 1 / 3.0, 1 / 3.0}, {ta, tb, tb}, {tb, ta, tb}, {tb, tb, ta},
      {ua, ub, ub},                {ub, ua, ub}, {ub, ub, ua}};
  const double tri_w[7] = {0.225,
                           0.132394152788506,
                           0.132394152788506,
                           0.132394152788506,
                           0.125939180544827,
                           0.125939180544827,
                           0.125939180544827};

  for (const auto& t : m.tri) {
    const Eigen::Vector2d p[3] = {m.v[t[0]], m.v[t[1]], m.v[t[2]]};
    const double twoA =
        (p[1] - p[0]).x() * (p[2] - p[0]).y() -
        (p[1] - p[0]).y() * (p[2] - p[0]).x();
    Eigen::Vector2d grad[3];
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector2d d = p[(i + 1) % 3] - p[(i + 2) % 3];
      grad[i] = Eigen::Vector2d(d.y(), -d.x()) / twoA;
    }
    for (int q = 0; q < 7; ++q) {
      const Eigen::Vector2d y =
          tri_pts[q][0] * p[0] + tri_pts[q][1] * p[1] + tri_pts[q][2] * p[2];
      const double dw = tri_w[q] * 0.5 * twoA * w(y);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          K(t[i], t[j]) += dw * grad[i].dot(grad[j]);
          M(t[i], t[j]) += dw * tri_pts[q][i] * tri_pts[q][j];
        }
    }
  }

  const double gl_x[4] = {-0.8611363115940526, -0.3399810435848563,
                          0.3399810435848563, 0.8611363115940526};
  const double gl_w[4] = {0.3478548451374538, 0.6521451548625461,
                          0.6521451548625461, 0.3478548451374538};
  for (const auto& e : m.bedges) {
    const double g = gamma.at(e.group);
    for (int q = 0; q < 4; ++q) {
      const double t = 0.5 * (1 + gl_x[q]);
      const Eigen::Vector2d y = (1 - t) * m.v[e.a] + t * m.v[e.b];
      const double dw = 0.5 * gl_w[q] * e.len * g * w(y);
      const double phi[2] = {1 - t, t};
      const int idx[2] = {e.a, e.b};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) K(idx[i], idx[j]) += dw * phi[i] * phi[j];
    }
  }
}

RobinCoeff two_segment(double g) { return RobinCoeff{{g, 2 * g}}; }

}  // namespace

TEST_CASE("assembled forms match an independent quadrature oracle") {
  struct Setup {
    Mesh2D mesh;
    RobinCoeff gamma;
    AffineWeight w;
  };
  const Setup setups[] = {
      {mesh_domain(ShapeSpec::rectangle(1.0, 1.0, false), 0.4),
       RobinCoeff::uniform(0.7), AffineWeight{1.0, {0.3, -0.2}}},
      {mesh_domain(ShapeSpec::disk(1.0, 2), 0.5), RobinCoeff{{0.5, 1.5}},
       AffineWeight{1.0, {-0.1, 0.25}}},
  };
  for (const auto& s : setups) {
    const auto forms = assemble_robin(s.mesh, s.gamma, s.w);
    Eigen::MatrixXd Kref, Mref;
    reference_forms(s.mesh, s.gamma, s.w, Kref, Mref);
    const double kn = Kref.cwiseAbs().maxCoeff();
    const double mn = Mref.cwiseAbs().maxCoeff();
    CHECK((Eigen::MatrixXd(forms.K.mat) - Kref).cwiseAbs().maxCoeff() <=
          1e-12 * kn);
    CHECK((Eigen::MatrixXd(forms.M.mat) - Mref).cwiseAbs().maxCoeff() <=
          1e-12 * mn);
  }
}

TEST_CASE("constants lie in the kernel of the pure stiffness form") {
  for (const auto& shape :
       {ShapeSpec::rectangle(1.0, 1.0, false), ShapeSpec::disk(1.0)}) {
    const auto m = mesh_domain(shape, 0.2);
    const auto forms = assemble_robin(m, RobinCoeff::uniform(0.0));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.n_nodes());
    CHECK((forms.K.mat * ones).cwiseAbs().maxCoeff() <= 1e-12);
  }
  // With gamma = 1 the constant picks up exactly the boundary measure.
  const auto m = mesh_domain(ShapeSpec::rectangle(1.0, 1.0, false), 0.2);
  const auto forms = assemble_robin(m, RobinCoeff::uniform(1.0));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(m.n_nodes());
  CHECK(ones.dot(forms.K.mat * ones) == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("neumann square has a constant ground state and zero response") {
  const auto m = mesh_domain(ShapeSpec::rectangle(1.0, 1.0, false), 0.1);
  const auto gamma = RobinCoeff::uniform(0.0);
  const auto gs = solve_ground_state(m, gamma);

  CHECK(std::abs(gs.lambda0) <= 1e-10);
  CHECK((gs.u0.array() - gs.u0.mean()).abs().maxCoeff() <= 1e-8);
  CHECK(gs.rho0.norm() <= 1e-12);
  CHECK((gs.y0 - Eigen::Vector2d(0.5, 0.5)).norm() <= 1e-10);
  // Spectral gap of the free square is pi^2 (first nonconstant mode).
  CHECK(gs.kappa() ==
        doctest::Approx(M_PI * M_PI).epsilon(0.05));

  const auto sf = solve_shape_functions(m, gamma, gs);
  CHECK(sf.chi1.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(sf.chi2.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(std::abs(sf.compat1) <= 1e-12);
  CHECK(std::abs(sf.compat2) <= 1e-12);

  // -1/2 I is cancelled exactly by the boundary moment of the constant.
  const auto pt = compute_M0(m, gamma, gs, sf);
  CHECK(pt.M0.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(pt.consistency_gap <= 1e-12);
}

TEST_CASE("disk ground state matches the radial transcendental root") {
  const double lam_ref = disk_reference_eigenvalue();
  const auto gamma = RobinCoeff::uniform(1.0);

  const auto fine = solve_ground_state(mesh_domain(ShapeSpec::disk(1.0), 0.02),
                                       gamma);
  CHECK(std::abs(fine.lambda0 - lam_ref) <= 2e-4 * lam_ref);
  // Radial symmetry kills the boundary moment and centers the mass.
  CHECK(fine.rho0.norm() <= 1e-10);
  CHECK(fine.y0.norm() <= 1e-10);

  std::vector<double> hs = {0.1, 0.05, 0.025}, errs;
  for (double h : hs) {
    const auto gs = solve_ground_state(mesh_domain(ShapeSpec::disk(1.0), h),
                                       gamma);
    errs.push_back(std::abs(gs.lambda0 - lam_ref));
  }
  CHECK(ls_slope(hs, errs) >= 1.8);
}

TEST_CASE("half boundary moment equals the volume gradient moment") {
  // Discrete divergence theorem: sum_T int u0 grad u0 telescopes to the
  // boundary edge rule behind rho0, so the identity is exact, not O(h).
  const auto m = mesh_domain(ShapeSpec::disk(1.0, 2), 0.05);
  const auto gs = solve_ground_state(m, two_segment(1.0));
  REQUIRE(gs.rho0.norm() > 1e-3);

  Eigen::Vector2d vol = Eigen::Vector2d::Zero();
  for (size_t c = 0; c < m.tri.size(); ++c) {
    const auto& t = m.tri[c];
    const Eigen::Vector2d p[3] = {m.v[t[0]], m.v[t[1]], m.v[t[2]]};
    const double twoA =
        (p[1] - p[0]).x() * (p[2] - p[0]).y() -
        (p[1] - p[0]).y() * (p[2] - p[0]).x();
    Eigen::Vector2d grad_u = Eigen::Vector2d::Zero();
    double mean_u = 0;
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector2d d = p[(i + 1) % 3] - p[(i + 2) % 3];
      grad_u += gs.u0[t[i]] * Eigen::Vector2d(d.y(), -d.x()) / twoA;
      mean_u += gs.u0[t[i]] / 3.0;
    }
    vol += 0.5 * twoA * mean_u * grad_u;
  }
  CHECK((vol - gs.rho0).norm() <= 1e-12);
}

TEST_CASE("shape functions inherit the section symmetries") {
  const auto m = mesh_domain(ShapeSpec::disk(1.0), 0.05);
  const auto gamma = RobinCoeff::uniform(1.0);
  const auto gs = solve_ground_state(m, gamma);
  const auto sf = solve_shape_functions(m, gamma, gs);
  CHECK(std::abs(sf.compat1) <= 1e-8);
  CHECK(std::abs(sf.compat2) <= 1e-8);

  const auto idx = coord_index(m);
  double odd1 = 0, even1 = 0, swap12 = 0;
  for (size_t i = 0; i < m.v.size(); ++i) {
    const Eigen::Vector2d p = m.v[i];
    odd1 = std::max(odd1, std::abs(sf.chi1[node_at(idx, {-p.x(), p.y()})] +
                                   sf.chi1[i]));
    even1 = std::max(even1, std::abs(sf.chi1[node_at(idx, {p.x(), -p.y()})] -
                                     sf.chi1[i]));
    swap12 = std::max(swap12, std::abs(sf.chi2[node_at(idx, {p.y(), p.x()})] -
                                       sf.chi1[i]));
  }
  const double scale = sf.chi1.cwiseAbs().maxCoeff();
  REQUIRE(scale > 1e-3);
  CHECK(odd1 <= 1e-8 * scale);
  CHECK(even1 <= 1e-8 * scale);
  CHECK(swap12 <= 1e-8 * scale);
}

TEST_CASE("m0 routes agree on resolved meshes and the gate trips on coarse "
          "ones") {
  const auto gamma = RobinCoeff::uniform(1.0);
  {
    const auto m = mesh_domain(ShapeSpec::disk(1.0), 0.025);
    const auto gs = solve_ground_state(m, gamma);
    const auto sf = solve_shape_functions(m, gamma, gs);
    const auto pt = compute_M0(m, gamma, gs, sf);
    CHECK(pt.consistency_gap <= 1e-4);
    // The spread is a real discretization defect, not roundoff.
    CHECK(pt.consistency_gap > 1e-6);
    // Exact mesh symmetry carries through to the tensor.
    CHECK(std::abs(pt.M0(0, 0) - pt.M0(1, 1)) <= 1e-10);
    CHECK(std::abs(pt.M0(0, 1)) <= 1e-10);
    CHECK(std::abs(pt.M0(1, 0)) <= 1e-10);
  }
  {
    const auto m = mesh_domain(ShapeSpec::disk(1.0), 0.1);
    const auto gs = solve_ground_state(m, gamma);
    const auto sf = solve_shape_functions(m, gamma, gs);
    CHECK_THROWS_AS(compute_M0(m, gamma, gs, sf), CrossSectionError);
  }
}

TEST_CASE("tilted eigenvalue expansion holds to third order") {
  const auto m = mesh_domain(ShapeSpec::disk(1.0, 2), 0.0125);
  const auto gamma = two_segment(1.0);
  const auto gs = solve_ground_state(m, gamma);
  const auto sf = solve_shape_functions(m, gamma, gs);
  const auto pt = compute_M0(m, gamma, gs, sf);
  const Eigen::Vector2d d(std::cos(0.7), std::sin(0.7));

  CHECK(std::abs(error_functional(m, gamma, gs, Eigen::Vector2d::Zero(),
                                  gs.u0)) <= 1e-10);

  const std::vector<double> rs = {0.04, 0.02, 0.01};
  std::vector<double> rem, egap;
  for (double r : rs) {
    const Eigen::Vector2d xi = r * d;
    const double lam = lambda0_perturbed(m, gamma, xi);
    const double model = gs.lambda0 + gs.rho0.dot(xi) +
                         0.5 * xi.dot(pt.M0 * xi);
    rem.push_back(std::abs(lam - model));
    const Eigen::VectorXd v = gs.u0 + sf.chi(xi);
    egap.push_back(std::abs(error_functional(m, gamma, gs, xi, v) -
                            0.5 * xi.dot(pt.M0 * xi)));
  }
  CHECK(ls_slope(rs, rem) >= 2.7);
  CHECK(ls_slope(rs, egap) >= 2.7);

  // At the ground state itself the functional evaluates to the product of
  // first moments, up to the mesh defect.
  const Eigen::Vector2d xi = 0.02 * d;
  const double e0 = error_functional(m, gamma, gs, xi, gs.u0);
  CHECK(std::abs(e0 - gs.rho0.dot(xi) * gs.y0.dot(xi)) <= 1e-7);
}

TEST_CASE("quasi eigenvector residual decays at third order") {
  const auto m = mesh_domain(ShapeSpec::disk(1.0, 2), 0.025);
  const auto gamma = two_segment(1.0);
  const Eigen::Vector2d xi(std::cos(0.7), std::sin(0.7));

  CHECK(quasi_eigenvector_residual(m, gamma, xi, 0.0).residual <= 1e-9);

  const std::vector<double> eps = {0.1, 0.05, 0.025};
  std::vector<double> res;
  for (double e : eps)
    res.push_back(quasi_eigenvector_residual(m, gamma, xi, e).residual);
  CHECK(ls_slope(eps, res) >= 2.9);
}

TEST_CASE("solvability coefficients match the moment and the tensor") {
  const auto m = mesh_domain(ShapeSpec::disk(1.0, 2), 0.018);
  const auto gamma = two_segment(1.0);
  const auto gs = solve_ground_state(m, gamma);
  const auto sf = solve_shape_functions(m, gamma, gs);
  const auto pt = compute_M0(m, gamma, gs, sf);

  const Eigen::Vector2d xi(1.0, 0.0);
  const auto qe = quasi_eigenvector_residual(m, gamma, xi, 0.05);
  CHECK(std::abs(qe.lambda1 - gs.rho0.dot(xi)) <= 1e-5);
  CHECK(std::abs(qe.lambda2 - 0.5 * xi.dot(pt.M0 * xi)) <= 3e-6);
}

TEST_CASE("large coefficients approach the clamped disk") {
  // j01^2, the clamped-disk ground eigenvalue, bounds the Robin family.
  const double j01 = 2.404825557695773;
  const double lam_clamped = j01 * j01;
  const auto m = mesh_domain(ShapeSpec::disk(1.0), 0.05);
  double prev = 0;
  for (double g : {10.0, 100.0, 1000.0}) {
    const auto gs = solve_ground_state(m, RobinCoeff::uniform(g));
    CHECK(gs.lambda0 > prev);
    prev = gs.lambda0;
  }
  CHECK(prev == doctest::Approx(lam_clamped).epsilon(0.02));

  // Asymmetric coefficients: the boundary moment dies as the walls harden.
  const auto m2 = mesh_domain(ShapeSpec::disk(1.0, 2), 0.025);
  double prev_rho = 1e9;
  for (double g : {10.0, 100.0, 1000.0}) {
    const auto gs = solve_ground_state(m2, two_segment(g));
    CHECK(gs.rho0.norm() < prev_rho);
    prev_rho = gs.rho0.norm();
  }
  CHECK(prev_rho <= 1e-3);
}

TEST_CASE("axial tilt composes the frame with the section") {
  const auto m = mesh_domain(ShapeSpec::disk(1.0, 2), 0.05);
  const auto gamma = two_segment(1.0);
  const auto gs = solve_ground_state(m, gamma);

  CurveSpec straight;
  straight.L = 2.0;
  straight.k = Profile::constant(0.0);
  straight.tau = Profile::constant(0.0);
  straight.alpha = Profile::constant(0.0);
  CHECK(std::abs(rwg::m_eps(straight, m, gamma, 0.7, 0.1) - gs.lambda0) <=
        1e-9);

  CurveSpec twisted;
  twisted.L = 2.0;
  twisted.k = Profile::constant(1.0);
  twisted.tau = Profile::constant(0.0);
  twisted.alpha = Profile::polynomial({0.0, 0.3});
  const double s = 1.1, eps = 0.05;
  const auto fr = rwg::frame_at(twisted, s, 0);
  const double direct = lambda0_perturbed(m, gamma, eps * fr.k * fr.z);
  const double composed = rwg::m_eps(twisted, m, gamma, s, eps);
  CHECK(composed == doctest::Approx(direct).epsilon(1e-12));
  CHECK(std::abs(composed - gs.lambda0 - eps * gs.rho0.dot(fr.k * fr.z)) <=
        1e-3);
}

TEST_CASE("invalid coefficients and degenerate weights are rejected") {
  const auto m = mesh_domain(ShapeSpec::disk(1.0, 2), 0.2);
  CHECK_THROWS_AS(solve_ground_state(m, RobinCoeff::uniform(-1.0)),
                  CrossSectionError);
  CHECK_THROWS_AS(solve_ground_state(m, RobinCoeff{{}}), CrossSectionError);

  const auto m8 = mesh_domain(ShapeSpec::disk(1.0, 8), 0.2);
  CHECK_THROWS_AS(solve_ground_state(m8, RobinCoeff{{1.0, 2.0}}),
                  CrossSectionError);

  // Tilt big enough to drive the transverse weight below its floor.
  CHECK_THROWS_AS(lambda0_perturbed(m, RobinCoeff::uniform(1.0), {0.6, 0.0}),
                  CrossSectionError);

  // Sign-indefinite weights pass only with the positivity check disabled.
  const AffineWeight bad{1.0, {2.0, 0.0}};
  CHECK_THROWS_AS(assemble_robin(m, RobinCoeff::uniform(1.0), bad),
                  CrossSectionError);
  CHECK_NOTHROW(assemble_robin(m, RobinCoeff::uniform(1.0), bad, false));
}

TEST_CASE("nonconvex polygon section solves cleanly") {
  const std::vector<Eigen::Vector2d> pts = {{0, 0}, {2, 0}, {2, 1},
                                            {1, 1}, {1, 2}, {0, 2}};
  const auto m = mesh_domain(ShapeSpec::polygon(pts), 0.1);
  RobinCoeff gamma{{1.0, 2.0, 1.0, 2.0, 1.0, 2.0}};
  const auto gs = solve_ground_state(m, gamma);
  CHECK(gs.lambda0 > 0);
  CHECK(gs.kappa() > 0);
  CHECK(gs.rho0.norm() > 0.01);
  const auto sf = solve_shape_functions(m, gamma, gs);
  CHECK(std::abs(sf.compat1) <= 1e-8);
  CHECK(std::abs(sf.compat2) <= 1e-8);
}
