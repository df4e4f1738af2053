#pragma once

// Elemental kernels for piecewise-linear fields on Mesh2D. All triangle
// integrals of barycentric monomials use the closed form
//   int_T phi1^p phi2^q phi3^r = 2A p! q! r! / (p+q+r+2)!
// so every assembly with an affine weight is exact, not just consistent.

#include <Eigen/Dense>
#include <array>

#include "rwg/mesh.hpp"

namespace rwg::p1 {

struct TriGeom {
  std::array<Eigen::Vector2d, 3> grad;  // gradients of the nodal basis
  double area;
};

inline TriGeom tri_geom(const Mesh2D& m, int t) {
  const auto& T = m.tri[t];
  const Eigen::Vector2d p0 = m.v[T[0]], p1 = m.v[T[1]], p2 = m.v[T[2]];
  const double twoA =
      (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
  TriGeom g;
  g.area = 0.5 * twoA;
  g.grad[0] = Eigen::Vector2d(p1.y() - p2.y(), p2.x() - p1.x()) / twoA;
  g.grad[1] = Eigen::Vector2d(p2.y() - p0.y(), p0.x() - p2.x()) / twoA;
  g.grad[2] = Eigen::Vector2d(p0.y() - p1.y(), p1.x() - p0.x()) / twoA;
  return g;
}

inline double factorial(int n) {
  static const double f[] = {1, 1, 2, 6, 24, 120, 720, 5040};
  return f[n];
}

inline double tri_int(double area, int p, int q, int r) {
  return 2.0 * area * factorial(p) * factorial(q) * factorial(r) /
         factorial(p + q + r + 2);
}

inline Eigen::Matrix3d mass3(double area) {
  Eigen::Matrix3d m;
  m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  return m * (area / 12.0);
}

// int_T phi_i phi_j w with w affine given by nodal values
inline Eigen::Matrix3d mass3_w(double area, const Eigen::Vector3d& w) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        int e[3] = {0, 0, 0};
        ++e[i];
        ++e[j];
        ++e[k];
        m(i, j) += w[k] * tri_int(area, e[0], e[1], e[2]);
      }
  return m;
}

inline Eigen::Matrix3d stiff3_w(const TriGeom& g, double wbar) {
  Eigen::Matrix3d m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m(i, j) = g.grad[i].dot(g.grad[j]) * g.area * wbar;
  return m;
}

// int_e N_a N_b w along an edge of length len, w affine on the edge
inline Eigen::Matrix2d edge_mass_w(double len, double wa, double wb) {
  Eigen::Matrix2d m;
  m(0, 0) = len * (wa / 4.0 + wb / 12.0);
  m(1, 1) = len * (wb / 4.0 + wa / 12.0);
  m(0, 1) = m(1, 0) = len * (wa + wb) / 12.0;
  return m;
}

// Gauss points on [0,1]: two-point rule integrates cubics exactly,
// three-point rule quintics.
inline constexpr std::array<std::array<double, 2>, 2> kGauss2 = {{
    {0.21132486540518713, 0.5},
    {0.78867513459481287, 0.5},
}};
inline constexpr std::array<std::array<double, 2>, 3> kGauss3 = {{
    {0.11270166537925831, 5.0 / 18.0},
    {0.5, 8.0 / 18.0},
    {0.88729833462074169, 5.0 / 18.0},
}};

}  // namespace rwg::p1
