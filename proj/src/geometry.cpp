#include "rwg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rwg {

namespace {

constexpr double kBinom[5][5] = {{1, 0, 0, 0, 0},
                                 {1, 1, 0, 0, 0},
                                 {1, 2, 1, 0, 0},
                                 {1, 3, 3, 1, 0},
                                 {1, 4, 6, 4, 1}};
constexpr double kFact[5] = {1, 1, 2, 6, 24};

// Fornberg's algorithm: weights of derivatives 0..m at point z over the
// nodes x[0..n-1]; column k of the result holds the k-th derivative weights.
Eigen::MatrixXd fd_weights(double z, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, m + 1);
  double c1 = 1.0;
  double c4 = x[0] - z;
  C(0, 0) = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          C(i, k) = c1 * (k * C(i - 1, k - 1) - c5 * C(i - 1, k)) / c2;
        C(i, 0) = -c1 * c5 * C(i - 1, 0) / c2;
      }
      for (int k = mn; k >= 1; --k)
        C(j, k) = (c4 * C(j, k) - k * C(j, k - 1)) / c3;
      C(j, 0) = c4 * C(j, 0) / c3;
    }
    c1 = c2;
  }
  return C;
}

}  // namespace

Jet Jet::operator+(const Jet& o) const {
  Jet r;
  for (int i = 0; i < 5; ++i) r.d[i] = d[i] + o.d[i];
  return r;
}

Jet Jet::operator-(const Jet& o) const {
  Jet r;
  for (int i = 0; i < 5; ++i) r.d[i] = d[i] - o.d[i];
  return r;
}

Jet Jet::operator*(const Jet& o) const {
  Jet r;
  for (int n = 0; n < 5; ++n) {
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) acc += kBinom[n][i] * d[i] * o.d[n - i];
    r.d[n] = acc;
  }
  return r;
}

Jet Jet::scaled(double c) const {
  Jet r;
  for (int i = 0; i < 5; ++i) r.d[i] = c * d[i];
  return r;
}

namespace {

// Taylor-mode recurrence for (cos a(s), sin a(s)) driven by c' = -s a',
// s' = c a'; exact through order four.
void sincos_jets(const Jet& a, Jet& cj, Jet& sj) {
  double at[5], ct[5], st[5];
  for (int i = 0; i < 5; ++i) at[i] = a.d[i] / kFact[i];
  ct[0] = std::cos(a.d[0]);
  st[0] = std::sin(a.d[0]);
  for (int n = 0; n < 4; ++n) {
    double accc = 0.0, accs = 0.0;
    for (int j = 0; j <= n; ++j) {
      accc -= (j + 1) * at[j + 1] * st[n - j];
      accs += (j + 1) * at[j + 1] * ct[n - j];
    }
    ct[n + 1] = accc / (n + 1);
    st[n + 1] = accs / (n + 1);
  }
  for (int i = 0; i < 5; ++i) {
    cj.d[i] = ct[i] * kFact[i];
    sj.d[i] = st[i] * kFact[i];
  }
}

}  // namespace

Jet cos_jet(const Jet& a) {
  Jet c, s;
  sincos_jets(a, c, s);
  return c;
}

Jet sin_jet(const Jet& a) {
  Jet c, s;
  sincos_jets(a, c, s);
  return s;
}

Profile Profile::constant(double c) {
  Profile p;
  p.kind = Kind::Constant;
  p.value = c;
  return p;
}

Profile Profile::polynomial(std::vector<double> c, double center) {
  Profile p;
  p.kind = Kind::Polynomial;
  p.coeffs = std::move(c);
  p.center = center;
  return p;
}

Profile Profile::sinusoid(double offset, double amp, double freq, double phase) {
  Profile p;
  p.kind = Kind::Sinusoid;
  p.offset = offset;
  p.amp = amp;
  p.freq = freq;
  p.phase = phase;
  return p;
}

Profile Profile::table(std::vector<double> values, double step) {
  if (values.size() < 2 || step <= 0.0)
    throw GeometryError("profile table needs >= 2 samples and a positive step");
  Profile p;
  p.kind = Kind::Table;
  p.samples = std::move(values);
  p.step = step;
  return p;
}

Jet Profile::jet(double s, int order) const {
  if (order < 0 || order > 4) throw GeometryError("derivative order out of range");
  Jet j;
  switch (kind) {
    case Kind::Constant:
      j.d[0] = value;
      return j;
    case Kind::Polynomial: {
      const double u = s - center;
      for (int m = 0; m <= order; ++m) {
        double acc = 0.0;
        double up = 1.0;
        for (int i = m; i < static_cast<int>(coeffs.size()); ++i) {
          double fall = 1.0;
          for (int q = 0; q < m; ++q) fall *= (i - q);
          acc += coeffs[i] * fall * up;
          up *= u;
        }
        j.d[m] = acc;
      }
      return j;
    }
    case Kind::Sinusoid: {
      for (int m = 0; m <= order; ++m) {
        double v = amp * std::pow(freq, m) *
                   std::cos(freq * s + phase + m * M_PI / 2.0);
        if (m == 0) v += offset;
        j.d[m] = v;
      }
      return j;
    }
    case Kind::Table: {
      const int N = static_cast<int>(samples.size()) - 1;
      const double smax = N * step;
      if (s < -1e-12 * (smax + 1.0) || s > smax * (1.0 + 1e-12) + 1e-12)
        throw GeometryError("table query outside sampled range");
      const double sc = std::clamp(s, 0.0, smax);
      for (int m = 0; m <= order; ++m) {
        int P, start;
        if (m == 0) {
          P = std::min(4, N + 1);
          const int jf = std::min(N - 1, static_cast<int>(sc / step));
          start = std::clamp(jf - 1, 0, N + 1 - P);
        } else {
          P = (m <= 2) ? 5 : 7;
          const int j0 = static_cast<int>(std::lround(sc / step));
          start = j0 - P / 2;
          if (start < 0 || start + P - 1 > N) {
            // endpoint region: minimal one-sided stencil (2nd order)
            P = m + 2;
            if (N + 1 < P)
              throw GeometryError(
                  "table has too few samples for derivative order " +
                  std::to_string(m));
            start = (sc < 0.5 * smax) ? 0 : N + 1 - P;
          }
        }
        std::vector<double> x(P);
        for (int i = 0; i < P; ++i) x[i] = (start + i) * step;
        const Eigen::MatrixXd W = fd_weights(sc, x, m);
        double acc = 0.0;
        for (int i = 0; i < P; ++i) acc += W(i, m) * samples[start + i];
        j.d[m] = acc;
      }
      return j;
    }
  }
  throw GeometryError("unreachable profile kind");
}

FrameData frame_at(const CurveSpec& curve, double s, int deriv_order) {
  if (deriv_order < 0 || deriv_order > 4)
    throw GeometryError("deriv_order must be 0..4");
  if (s < -1e-12 * curve.L || s > curve.L * (1.0 + 1e-12))
    throw GeometryError("arc length outside [0, L]");
  if (deriv_order >= 3) {
    for (const Profile* p : {&curve.k, &curve.tau, &curve.alpha})
      if (!p->analytic() && p->step > curve.L / 200.0 + 1e-15)
        throw GeometryError(
            "third and fourth xi derivatives need analytic profiles or a "
            "table step <= L/200");
  }

  const double sc = std::clamp(s, 0.0, curve.L);
  const Jet kj = curve.k.jet(sc, deriv_order);
  const Jet aj = curve.alpha.jet(sc, std::max(deriv_order, deriv_order >= 1 ? 2 : 1));
  const Jet tj = curve.tau.jet(sc, deriv_order >= 1 ? 1 : 0);

  Jet cj, sj;
  sincos_jets(aj, cj, sj);

  FrameData f;
  f.order = deriv_order;
  f.k = kj.d[0];
  f.tau = tj.d[0];
  f.alpha = aj.d[0];
  f.alpha_p = aj.d[1];
  f.tilde_tau = tj.d[0] + aj.d[1];
  if (deriv_order >= 1) f.tilde_tau_p = tj.d[1] + aj.d[2];
  f.z = Eigen::Vector2d(cj.d[0], -sj.d[0]);
  f.zperp = Eigen::Vector2d(sj.d[0], cj.d[0]);

  const Jet xi1 = kj * cj;
  const Jet xi2 = kj * sj;  // negated below: xi = k * (cos a, -sin a)
  for (int m = 0; m <= deriv_order; ++m)
    f.xi[m] = Eigen::Vector2d(xi1.d[m], -xi2.d[m]);
  return f;
}

BetaResult beta(const CurveSpec& curve, double s, const Eigen::Vector2d& y,
                double eps) {
  if (eps < 0.0) throw GeometryError("eps must be nonnegative");
  const FrameData f = frame_at(curve, s, 0);
  BetaResult r;
  r.value = 1.0 - eps * f.k * f.z.dot(y);
  r.valid = r.value > 0.5;
  return r;
}

FrenetFrame integrate_frenet(const CurveSpec& curve, int n_steps) {
  if (n_steps < 2) throw GeometryError("need at least two integration steps");
  const double h = curve.L / n_steps;

  // k on the half grid decides between the exact straight frame and an
  // undefined-frame error (k = 0 on a sub-interval).
  std::vector<double> kh(2 * n_steps + 1), th(2 * n_steps + 1);
  for (int i = 0; i <= 2 * n_steps; ++i) {
    const double s = std::min(curve.L, 0.5 * h * i);
    kh[i] = curve.k.jet(s, 0).d[0];
    th[i] = curve.tau.jet(s, 0).d[0];
  }
  bool all_zero = true;
  int run = 0, worst_run = 0;
  for (double kv : kh) {
    if (std::abs(kv) > 1e-14) all_zero = false;
    if (std::abs(kv) < 1e-12)
      worst_run = std::max(worst_run, ++run);
    else
      run = 0;
  }

  FrenetFrame out;
  out.s.resize(n_steps + 1);
  out.r.resize(n_steps + 1);
  out.T.resize(n_steps + 1);
  out.N.resize(n_steps + 1);
  out.B.resize(n_steps + 1);
  for (int i = 0; i <= n_steps; ++i) out.s[i] = std::min(curve.L, h * i);

  if (all_zero) {
    for (int i = 0; i <= n_steps; ++i) {
      out.r[i] = Eigen::Vector3d(out.s[i], 0, 0);
      out.T[i] = Eigen::Vector3d(1, 0, 0);
      out.N[i] = Eigen::Vector3d(0, 1, 0);
      out.B[i] = Eigen::Vector3d(0, 0, 1);
    }
    return out;
  }
  if (worst_run >= 3)
    throw GeometryError(
        "curvature vanishes on a sub-interval: Frenet frame undefined");

  using State = Eigen::Matrix<double, 12, 1>;
  const auto pack = [](const Eigen::Vector3d& r, const Eigen::Vector3d& T,
                       const Eigen::Vector3d& N, const Eigen::Vector3d& B) {
    State q;
    q << r, T, N, B;
    return q;
  };
  const auto deriv = [](const State& q, double k, double tau) {
    const Eigen::Vector3d T = q.segment<3>(3), N = q.segment<3>(6),
                          B = q.segment<3>(9);
    State dq;
    dq << T, k * N, -k * T + tau * B, -tau * N;
    return dq;
  };

  State q = pack({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1});
  out.r[0] = q.segment<3>(0);
  out.T[0] = q.segment<3>(3);
  out.N[0] = q.segment<3>(6);
  out.B[0] = q.segment<3>(9);
  for (int i = 0; i < n_steps; ++i) {
    const double k0 = kh[2 * i], km = kh[2 * i + 1], k1 = kh[2 * i + 2];
    const double t0 = th[2 * i], tm = th[2 * i + 1], t1 = th[2 * i + 2];
    const State d1 = deriv(q, k0, t0);
    const State d2 = deriv(q + 0.5 * h * d1, km, tm);
    const State d3 = deriv(q + 0.5 * h * d2, km, tm);
    const State d4 = deriv(q + h * d3, k1, t1);
    q += (h / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4);

    Eigen::Vector3d T = q.segment<3>(3), N = q.segment<3>(6);
    T.normalize();
    N -= N.dot(T) * T;
    N.normalize();
    const Eigen::Vector3d B = T.cross(N);
    q.segment<3>(3) = T;
    q.segment<3>(6) = N;
    q.segment<3>(9) = B;

    out.r[i + 1] = q.segment<3>(0);
    out.T[i + 1] = T;
    out.N[i + 1] = N;
    out.B[i + 1] = B;
  }
  return out;
}

void export_tube(const CurveSpec& curve,
                 const std::vector<Eigen::Vector2d>& section, double eps,
                 int n_axial, int n_ring, const std::string& path) {
  if (section.size() < 3) throw GeometryError("section polygon needs >= 3 vertices");
  if (n_axial < 2 || n_ring < 3) throw GeometryError("tube resolution too small");

  const FrenetFrame fr = integrate_frenet(curve, n_axial - 1);

  // resample the section boundary to n_ring points by arc length
  const int np = static_cast<int>(section.size());
  std::vector<double> cum(np + 1, 0.0);
  for (int i = 0; i < np; ++i)
    cum[i + 1] = cum[i] + (section[(i + 1) % np] - section[i]).norm();
  const double perim = cum[np];
  if (perim <= 0.0) throw GeometryError("degenerate section polygon");
  std::vector<Eigen::Vector2d> ring(n_ring);
  for (int j = 0; j < n_ring; ++j) {
    const double t = perim * j / n_ring;
    int seg = static_cast<int>(std::upper_bound(cum.begin(), cum.end(), t) -
                               cum.begin()) - 1;
    seg = std::clamp(seg, 0, np - 1);
    const double w = (cum[seg + 1] > cum[seg])
                         ? (t - cum[seg]) / (cum[seg + 1] - cum[seg])
                         : 0.0;
    ring[j] = (1.0 - w) * section[seg] + w * section[(seg + 1) % np];
  }

  std::ofstream os(path);
  if (!os) throw GeometryError("cannot open tube export path: " + path);
  os << "# tube surface mesh (Wavefront OBJ subset)\n"
     << "# lines: 'v x y z' vertices, 'f a b c' 1-based triangle faces\n"
     << "# " << n_axial << " axial stations x " << n_ring
     << " boundary samples per ring\n";
  char buf[128];
  for (int i = 0; i < n_axial; ++i) {
    const FrameData fd = frame_at(curve, fr.s[i], 0);
    const double ca = std::cos(fd.alpha), sa = std::sin(fd.alpha);
    const Eigen::Vector3d Na = ca * fr.N[i] + sa * fr.B[i];
    const Eigen::Vector3d Ba = -sa * fr.N[i] + ca * fr.B[i];
    for (int j = 0; j < n_ring; ++j) {
      const Eigen::Vector3d x =
          fr.r[i] + eps * (ring[j][0] * Na + ring[j][1] * Ba);
      std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", x[0], x[1], x[2]);
      os << buf;
    }
  }
  for (int i = 0; i + 1 < n_axial; ++i)
    for (int j = 0; j < n_ring; ++j) {
      const int a = i * n_ring + j + 1;
      const int b = i * n_ring + (j + 1) % n_ring + 1;
      const int c = (i + 1) * n_ring + j + 1;
      const int d = (i + 1) * n_ring + (j + 1) % n_ring + 1;
      os << "f " << a << ' ' << b << ' ' << d << '\n';
      os << "f " << a << ' ' << d << ' ' << c << '\n';
    }
}

}  // namespace rwg
