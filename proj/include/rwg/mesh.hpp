#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

// Triangulations of the cross-section domain. The three presets cover the
// toolkit: rectangles and the disk are structured grids chosen so that every
// mirror symmetry of the domain is a symmetry of the mesh (symmetry checks
// downstream depend on this), arbitrary simple polygons go through ear
// clipping plus uniform refinement.

namespace rwg {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BoundaryEdge {
  int a = 0, b = 0;        // vertex ids, domain on the left
  Eigen::Vector2d n;       // outward unit normal
  Eigen::Vector2d t;       // unit tangent along the boundary orientation
  Eigen::Vector2d mid;
  double len = 0.0;
  int group = 0;           // Robin coefficient segment id
};

struct Mesh2D {
  std::vector<Eigen::Vector2d> v;
  std::vector<std::array<int, 3>> tri;  // positively oriented
  std::vector<BoundaryEdge> bedges;
  int n_groups = 1;

  int n_nodes() const { return static_cast<int>(v.size()); }
  double area() const;
  double perimeter() const;
  double tri_area(int t) const;
  double max_edge_len() const;
};

struct ShapeSpec {
  enum class Kind { Rectangle, Disk, Polygon };
  Kind kind = Kind::Rectangle;

  // Rectangle: width x height, corner at the origin or centered on it.
  double width = 1.0, height = 1.0;
  bool centered = false;

  // Disk: radius, boundary split into angular sectors as gamma groups.
  double radius = 1.0;
  int disk_groups = 1;

  // Polygon: simple, counterclockwise; each input edge is its own group.
  std::vector<Eigen::Vector2d> poly;

  static ShapeSpec rectangle(double w, double h, bool centered_at_origin);
  static ShapeSpec disk(double radius, int groups = 1);
  static ShapeSpec polygon(std::vector<Eigen::Vector2d> pts);
};

// Target edge length h; structured presets round to an even grid count so
// the mesh keeps the domain's mirror symmetries.
Mesh2D mesh_domain(const ShapeSpec& shape, double h);

// ASCII dump: vertex lines then triangle lines (documented in the header of
// the written file).
void export_mesh(const Mesh2D& mesh, const std::string& path);

}  // namespace rwg
