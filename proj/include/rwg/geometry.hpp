#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

// Centerline data: curvature k, torsion tau, frame rotation alpha, and the
// derived in-plane direction xi(s) = k(s) z_alpha(s) with derivatives up to
// fourth order. Everything is arc-length parametrized on [0, L].

namespace rwg {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Value and first four derivatives of a scalar function at one point.
// Products use the Leibniz rule; sin/cos composition is Taylor-mode.
struct Jet {
  std::array<double, 5> d{};

  static Jet constant(double c) {
    Jet j;
    j.d[0] = c;
    return j;
  }
  Jet operator+(const Jet& o) const;
  Jet operator-(const Jet& o) const;
  Jet operator*(const Jet& o) const;
  Jet scaled(double c) const;
};

Jet sin_jet(const Jet& a);
Jet cos_jet(const Jet& a);

// One scalar profile on [0, L]: analytic presets or a uniformly sampled
// table. Table derivatives use centered differences of 4th order where the
// stencil fits and one-sided stencils of the minimal width (2nd order)
// against the endpoints.
struct Profile {
  enum class Kind { Constant, Polynomial, Sinusoid, Table };
  Kind kind = Kind::Constant;

  double value = 0.0;  // Constant

  std::vector<double> coeffs;  // Polynomial: sum coeffs[i] * (s - center)^i
  double center = 0.0;

  double offset = 0.0, amp = 0.0, freq = 0.0, phase = 0.0;  // offset + amp*cos(freq*s + phase)

  std::vector<double> samples;  // Table: values at i*step, i = 0..N
  double step = 0.0;

  bool analytic() const { return kind != Kind::Table; }
  // Derivatives 0..order at s. Throws when a table has too few samples for
  // the stencil.
  Jet jet(double s, int order) const;

  static Profile constant(double c);
  static Profile polynomial(std::vector<double> c, double center = 0.0);
  static Profile sinusoid(double offset, double amp, double freq, double phase);
  static Profile table(std::vector<double> values, double step);
};

struct CurveSpec {
  double L = 1.0;
  Profile k, tau, alpha;
};

struct FrameData {
  double k = 0, tau = 0, alpha = 0, alpha_p = 0;
  double tilde_tau = 0;    // tau + alpha'
  double tilde_tau_p = 0;  // populated for deriv_order >= 1
  Eigen::Vector2d z{1, 0}, zperp{0, 1};
  // xi[m] = m-th derivative of xi(s) = k z_alpha; filled for m <= order
  std::array<Eigen::Vector2d, 5> xi{};
  int order = 0;
};

// deriv_order in 0..4. Orders 3 and 4 require analytic profiles or table
// steps <= L/200 (high derivatives from coarse tables are noise).
FrameData frame_at(const CurveSpec& curve, double s, int deriv_order);

struct BetaResult {
  double value = 1.0;
  bool valid = true;  // false once the transverse metric factor dips to 1/2
};

// beta_eps(s, y) = 1 - eps * k(s) * (z_alpha . y)
BetaResult beta(const CurveSpec& curve, double s, const Eigen::Vector2d& y,
                double eps);

struct FrenetFrame {
  Eigen::VectorXd s;
  std::vector<Eigen::Vector3d> r, T, N, B;
};

// Classical RK4 on the Frenet system r' = T, T' = kN, N' = -kT + tauB,
// B' = -tauN with per-step re-orthonormalization. A curve with k identically
// zero gets the exact straight frame; k vanishing on a sub-interval is an
// error (the frame is undefined there).
FrenetFrame integrate_frenet(const CurveSpec& curve, int n_steps);

// Physical tube surface through x = r(s) + eps*(y1 N_alpha + y2 B_alpha),
// written as an ASCII triangle mesh (OBJ). The cross-section boundary is the
// given closed polygon, resampled to n_ring points by arc length; vertex
// count is exactly n_axial * n_ring.
void export_tube(const CurveSpec& curve,
                 const std::vector<Eigen::Vector2d>& section, double eps,
                 int n_axial, int n_ring, const std::string& path);

}  // namespace rwg
