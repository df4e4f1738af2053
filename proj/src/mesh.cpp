#include "rwg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

namespace rwg {

namespace {

double signed_area2(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                    const Eigen::Vector2d& c) {
  return (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
}

// Boundary edges are the triangle edges used exactly once; the directed
// orientation inherited from the (positively oriented) triangle keeps the
// domain on the left, so the outward normal is the tangent rotated -90 deg.
void build_boundary(Mesh2D& m) {
  std::map<std::pair<int, int>, std::pair<int, int>> once;  // undirected -> directed
  for (const auto& t : m.tri)
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = once.find(key);
      if (it == once.end())
        once[key] = {a, b};
      else
        it->second = {-1, -1};  // interior edge, seen twice
    }
  m.bedges.clear();
  for (const auto& [key, dir] : once) {
    if (dir.first < 0) continue;
    BoundaryEdge be;
    be.a = dir.first;
    be.b = dir.second;
    const Eigen::Vector2d d = m.v[be.b] - m.v[be.a];
    be.len = d.norm();
    if (be.len <= 0.0) throw MeshError("zero-length boundary edge");
    be.t = d / be.len;
    be.n = Eigen::Vector2d(be.t.y(), -be.t.x());
    be.mid = 0.5 * (m.v[be.a] + m.v[be.b]);
    m.bedges.push_back(be);
  }
}

void check_orientation(Mesh2D& m) {
  for (auto& t : m.tri)
    if (signed_area2(m.v[t[0]], m.v[t[1]], m.v[t[2]]) <= 0.0)
      std::swap(t[1], t[2]);
}

// Checkerboard-split structured grid on [0,nx] x [0,ny] cells; alternating
// diagonals keep the mesh invariant under the grid's mirror reflections
// when nx, ny are even.
void grid_triangles(int nx, int ny, std::vector<std::array<int, 3>>& tri) {
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  tri.clear();
  tri.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int v00 = id(i, j), v10 = id(i + 1, j), v01 = id(i, j + 1),
                v11 = id(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        tri.push_back({v00, v10, v11});
        tri.push_back({v00, v11, v01});
      } else {
        tri.push_back({v00, v10, v01});
        tri.push_back({v10, v11, v01});
      }
    }
}

int even_cells(double extent, double h) {
  const int n = std::max(2, static_cast<int>(std::lround(extent / h)));
  return n + (n % 2);
}

Mesh2D make_rectangle(const ShapeSpec& s, double h) {
  const int nx = even_cells(s.width, h), ny = even_cells(s.height, h);
  const double x0 = s.centered ? -0.5 * s.width : 0.0;
  const double y0 = s.centered ? -0.5 * s.height : 0.0;
  Mesh2D m;
  m.v.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.v.emplace_back(x0 + s.width * i / nx, y0 + s.height * j / ny);
  grid_triangles(nx, ny, m.tri);
  check_orientation(m);
  build_boundary(m);
  // groups: bottom 0, right 1, top 2, left 3
  const double tol = 1e-12 * (s.width + s.height);
  for (auto& e : m.bedges) {
    if (std::abs(e.mid.y() - y0) < tol)
      e.group = 0;
    else if (std::abs(e.mid.x() - (x0 + s.width)) < tol)
      e.group = 1;
    else if (std::abs(e.mid.y() - (y0 + s.height)) < tol)
      e.group = 2;
    else
      e.group = 3;
  }
  m.n_groups = 4;
  return m;
}

// Equal-area concentric square-to-disk map (constant Jacobian pi/4), so the
// structured grid stays quasi-uniform and boundary nodes land exactly on
// the circle.
Eigen::Vector2d concentric(double u, double v) {
  if (u == 0.0 && v == 0.0) return {0.0, 0.0};
  double r, phi;
  if (u * u >= v * v) {
    r = u;
    phi = (M_PI / 4.0) * (v / u);
  } else {
    r = v;
    phi = M_PI / 2.0 - (M_PI / 4.0) * (u / v);
  }
  return {r * std::cos(phi), r * std::sin(phi)};
}

Mesh2D make_disk(const ShapeSpec& s, double h) {
  if (s.radius <= 0.0) throw MeshError("disk radius must be positive");
  if (s.disk_groups < 1) throw MeshError("disk needs >= 1 boundary group");
  const int n = even_cells(2.0 * s.radius, h);
  Mesh2D m;
  m.v.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double u = -1.0 + 2.0 * i / n, v = -1.0 + 2.0 * j / n;
      m.v.push_back(s.radius * concentric(u, v));
    }
  grid_triangles(n, n, m.tri);
  check_orientation(m);
  build_boundary(m);
  m.n_groups = s.disk_groups;
  for (auto& e : m.bedges) {
    const double ang = std::atan2(e.mid.y(), e.mid.x());  // (-pi, pi]
    int g = static_cast<int>((ang + M_PI) / (2.0 * M_PI) * s.disk_groups);
    e.group = std::clamp(g, 0, s.disk_groups - 1);
  }
  return m;
}

bool segments_cross(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                    const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
  const double d1 = signed_area2(q1, q2, p1), d2 = signed_area2(q1, q2, p2);
  const double d3 = signed_area2(p1, p2, q1), d4 = signed_area2(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

// Inclusive of the triangle boundary: a ring vertex sitting exactly on a
// candidate chord must block the ear, otherwise clipping can leave an
// exactly-collinear remainder (e.g. an L-shape corner on the diagonal).
bool point_in_tri(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                  double tol) {
  const double s1 = signed_area2(a, b, p), s2 = signed_area2(b, c, p),
               s3 = signed_area2(c, a, p);
  return s1 >= -tol && s2 >= -tol && s3 >= -tol;
}

Mesh2D make_polygon(const ShapeSpec& s, double h) {
  const auto& poly = s.poly;
  const int np = static_cast<int>(poly.size());
  if (np < 3) throw MeshError("polygon needs at least 3 vertices");
  double scale = 0.0;
  for (const auto& p : poly) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  for (int i = 0; i < np; ++i)
    for (int j = i + 1; j < np; ++j)
      if ((poly[i] - poly[j]).norm() <= 1e-12 * (scale + 1.0))
        throw MeshError("degenerate polygon: repeated vertex");
  double twice_area = 0.0;
  for (int i = 0; i < np; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % np];
    twice_area += a.x() * b.y() - a.y() * b.x();
  }
  if (twice_area <= 0.0)
    throw MeshError("polygon must be counterclockwise and non-degenerate");
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < np; ++j) {
      if (j == i || (j + 1) % np == i || (i + 1) % np == j) continue;
      if (segments_cross(poly[i], poly[(i + 1) % np], poly[j],
                         poly[(j + 1) % np]))
        throw MeshError("polygon is self-intersecting");
    }

  Mesh2D m;
  m.v = poly;
  // ear clipping
  std::vector<int> ring(np);
  for (int i = 0; i < np; ++i) ring[i] = i;
  while (ring.size() > 3) {
    const int rn = static_cast<int>(ring.size());
    bool clipped = false;
    for (int i = 0; i < rn; ++i) {
      const int ia = ring[(i + rn - 1) % rn], ib = ring[i],
                ic = ring[(i + 1) % rn];
      if (signed_area2(m.v[ia], m.v[ib], m.v[ic]) <= 1e-14 * scale * scale)
        continue;
      bool blocked = false;
      for (int q : ring) {
        if (q == ia || q == ib || q == ic) continue;
        if (point_in_tri(m.v[q], m.v[ia], m.v[ib], m.v[ic],
                         1e-12 * scale * scale)) {
          blocked = true;
          break;
        }
      }
      if (blocked) continue;
      m.tri.push_back({ia, ib, ic});
      ring.erase(ring.begin() + i);
      clipped = true;
      break;
    }
    if (!clipped) throw MeshError("ear clipping failed (degenerate polygon?)");
  }
  if (signed_area2(m.v[ring[0]], m.v[ring[1]], m.v[ring[2]]) <=
      1e-14 * scale * scale)
    throw MeshError("ear clipping left a degenerate triangle");
  m.tri.push_back({ring[0], ring[1], ring[2]});

  // light Laplacian smoothing of interior nodes evens out ear-clip slivers
  const auto smooth = [](Mesh2D& mesh) {
    std::set<int> boundary_nodes;
    for (const auto& e : mesh.bedges) {
      boundary_nodes.insert(e.a);
      boundary_nodes.insert(e.b);
    }
    std::vector<std::set<int>> nbr(mesh.v.size());
    for (const auto& t : mesh.tri)
      for (int e = 0; e < 3; ++e) {
        nbr[t[e]].insert(t[(e + 1) % 3]);
        nbr[t[(e + 1) % 3]].insert(t[e]);
      }
    const std::vector<Eigen::Vector2d> saved = mesh.v;
    for (int pass = 0; pass < 3; ++pass) {
      std::vector<Eigen::Vector2d> next = mesh.v;
      for (size_t i = 0; i < mesh.v.size(); ++i) {
        if (boundary_nodes.count(static_cast<int>(i)) || nbr[i].empty())
          continue;
        Eigen::Vector2d acc(0, 0);
        for (int q : nbr[i]) acc += mesh.v[q];
        next[i] = acc / static_cast<double>(nbr[i].size());
      }
      mesh.v = std::move(next);
    }
    for (const auto& t : mesh.tri)
      if (signed_area2(mesh.v[t[0]], mesh.v[t[1]], mesh.v[t[2]]) <= 0.0) {
        mesh.v = saved;  // smoothing folded a triangle; keep unsmoothed
        return;
      }
  };

  // uniform 4-splits, smoothing after each, until the smoothed mesh meets
  // the edge target (smoothing may lengthen edges, so test after it)
  check_orientation(m);
  build_boundary(m);
  for (int level = 0; level < 12 && m.max_edge_len() > h; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    const auto mid_id = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int id = static_cast<int>(m.v.size());
      m.v.push_back(0.5 * (m.v[a] + m.v[b]));
      midpoint[key] = id;
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * m.tri.size());
    for (const auto& t : m.tri) {
      const int ab = mid_id(t[0], t[1]), bc = mid_id(t[1], t[2]),
                ca = mid_id(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    m.tri = std::move(next);
    check_orientation(m);
    build_boundary(m);
    smooth(m);
    build_boundary(m);
  }
  if (m.max_edge_len() > h)
    throw MeshError("refinement cap reached before meeting edge target");

  // group = originating polygon edge, located by distance to the segment
  m.n_groups = np;
  const double tol = 1e-9 * (scale + 1.0);
  for (auto& e : m.bedges) {
    e.group = 0;
    for (int i = 0; i < np; ++i) {
      const Eigen::Vector2d a = poly[i], b = poly[(i + 1) % np];
      const Eigen::Vector2d d = b - a;
      const double t = std::clamp((e.mid - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
      if ((e.mid - (a + t * d)).norm() < tol) {
        e.group = i;
        break;
      }
    }
  }
  return m;
}

}  // namespace

double Mesh2D::area() const {
  double a = 0.0;
  for (size_t t = 0; t < tri.size(); ++t) a += tri_area(static_cast<int>(t));
  return a;
}

double Mesh2D::perimeter() const {
  double p = 0.0;
  for (const auto& e : bedges) p += e.len;
  return p;
}

double Mesh2D::tri_area(int t) const {
  const auto& T = tri[t];
  return 0.5 * signed_area2(v[T[0]], v[T[1]], v[T[2]]);
}

double Mesh2D::max_edge_len() const {
  double worst = 0.0;
  for (const auto& t : tri)
    for (int e = 0; e < 3; ++e)
      worst = std::max(worst, (v[t[e]] - v[t[(e + 1) % 3]]).norm());
  return worst;
}

ShapeSpec ShapeSpec::rectangle(double w, double h, bool centered_at_origin) {
  ShapeSpec s;
  s.kind = Kind::Rectangle;
  s.width = w;
  s.height = h;
  s.centered = centered_at_origin;
  return s;
}

ShapeSpec ShapeSpec::disk(double radius, int groups) {
  ShapeSpec s;
  s.kind = Kind::Disk;
  s.radius = radius;
  s.disk_groups = groups;
  return s;
}

ShapeSpec ShapeSpec::polygon(std::vector<Eigen::Vector2d> pts) {
  ShapeSpec s;
  s.kind = Kind::Polygon;
  s.poly = std::move(pts);
  return s;
}

Mesh2D mesh_domain(const ShapeSpec& shape, double h) {
  if (h <= 0.0) throw MeshError("target edge length must be positive");
  Mesh2D m;
  switch (shape.kind) {
    case ShapeSpec::Kind::Rectangle:
      if (shape.width <= 0 || shape.height <= 0)
        throw MeshError("rectangle sides must be positive");
      m = make_rectangle(shape, h);
      break;
    case ShapeSpec::Kind::Disk:
      m = make_disk(shape, h);
      break;
    case ShapeSpec::Kind::Polygon:
      m = make_polygon(shape, h);
      break;
  }
  // closed-loop sanity: every boundary vertex appears once as a tail and
  // once as a head
  std::map<int, int> indeg, outdeg;
  for (const auto& e : m.bedges) {
    ++outdeg[e.a];
    ++indeg[e.b];
  }
  for (const auto& [node, d] : outdeg)
    if (d != 1 || indeg[node] != 1)
      throw MeshError("boundary is not a disjoint union of closed loops");
  return m;
}

void export_mesh(const Mesh2D& mesh, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw MeshError("cannot open mesh export path: " + path);
  os << "# triangulation: 'v x y' vertex lines, 't i j k' 0-based triangles,\n"
     << "# 'e a b group' boundary edges\n";
  char buf[96];
  for (const auto& p : mesh.v) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g\n", p.x(), p.y());
    os << buf;
  }
  for (const auto& t : mesh.tri)
    os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.bedges)
    os << "e " << e.a << ' ' << e.b << ' ' << e.group << '\n';
}

}  // namespace rwg
