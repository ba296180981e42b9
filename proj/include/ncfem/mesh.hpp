#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ncfem/poly.hpp"

namespace ncfem {

struct MeshEdge {
  int v[2] = {-1, -1};        // endpoint vertex ids, v[0] < v[1]
  int tri[2] = {-1, -1};      // incident triangles; tri[0] is T+, tri[1] (or -1) is T-
  int local[2] = {-1, -1};    // local edge index within tri[0] / tri[1]
  Vec2 normal;                // fixed orientation (nu_{T+} on the edge)
  Vec2 tangent;
  double length = 0.0;
  bool boundary = false;
};

struct MeshTriangle {
  std::array<int, 3> v = {-1, -1, -1};
  int ref_edge = 0;           // local index of the NVB refinement edge (edge i opposite vertex i)
  int generation = 0;
  std::array<int, 3> edge = {-1, -1, -1};
  double area = 0.0;
  double diameter = 0.0;
};

struct ShapeStats {
  double omega0 = 0.0;  // minimal interior angle (radians)
  int m2 = 0;           // max vertex-patch cardinality
  int m3 = 0;           // max |T(Omega(T))|
};

class Triangulation {
 public:
  Triangulation() = default;

  /// Builds a regular triangulation; triangles are reoriented counter-
  /// clockwise, refinement edges default to the longest edge with ties
  /// broken by the lowest opposite-vertex index.
  static Triangulation from_raw(std::vector<Vec2> vertices,
                                std::vector<std::array<int, 3>> triangles,
                                std::vector<int> ref_edges = {});

  static Triangulation unit_square();        // two tagged triangles
  static Triangulation criss_cross_square(); // four right isosceles triangles
  static Triangulation l_shape();            // right isosceles L-shaped domain

  static Triangulation read(std::istream& in);
  static Triangulation read_file(const std::string& path);
  void write(std::ostream& out) const;
  void write_file(const std::string& path) const;

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_triangles() const { return static_cast<int>(tris_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }

  Vec2 vertex(int i) const { return vertices_[i]; }
  const MeshTriangle& tri(int i) const { return tris_[i]; }
  const MeshEdge& edge(int i) const { return edges_[i]; }

  Triangle geometry(int t) const {
    return Triangle{{vertices_[tris_[t].v[0]], vertices_[tris_[t].v[1]], vertices_[tris_[t].v[2]]}};
  }

  const std::vector<int>& vertex_patch(int z) const { return patch_[z]; }
  const std::vector<int>& vertex_edges(int z) const { return vertex_edges_[z]; }
  bool boundary_vertex(int z) const { return boundary_vertex_[z]; }

  /// Local index (0..2) of vertex z within triangle t; -1 if absent.
  int local_vertex(int t, int z) const;
  int opposite_vertex(int t, int local_edge) const { return tris_[t].v[local_edge]; }

  /// T(Omega(T)): triangles sharing at least one vertex with t.
  std::vector<int> neighborhood(int t) const;

  /// Edge id between two vertex ids, or -1.
  int find_edge(int a, int b) const;

  ShapeStats shape_stats() const;

  std::uint64_t id() const { return id_; }
  std::uint64_t parent_id() const { return parent_id_; }
  const std::vector<int>& parent_tri() const { return parent_tri_; }

  friend Triangulation nvb_refine(const Triangulation&, const std::vector<int>&);

 private:
  void build_derived();

  std::vector<Vec2> vertices_;
  std::vector<MeshTriangle> tris_;
  std::vector<MeshEdge> edges_;
  std::vector<std::vector<int>> patch_;
  std::vector<std::vector<int>> vertex_edges_;
  std::vector<char> boundary_vertex_;

  std::uint64_t id_ = 0;
  std::uint64_t parent_id_ = 0;
  std::vector<int> parent_tri_;
};

/// Bisects every marked triangle at least once; closure keeps the result
/// regular.  An empty marked set returns an identical copy (fresh id).
Triangulation nvb_refine(const Triangulation& mesh, const std::vector<int>& marked);

/// A coarse mesh, an admissible refinement and the derived index sets of the
/// refined analysis.  Holds non-owning pointers; the caller keeps both
/// triangulations alive.
struct RefinementPair {
  const Triangulation* coarse = nullptr;
  const Triangulation* fine = nullptr;
  std::vector<int> ancestor;            // fine triangle -> coarse triangle
  std::vector<std::vector<int>> children;  // coarse triangle -> fine triangles
  std::vector<char> survives;           // coarse triangle in T cap hat(T)
  std::vector<int> refined;             // T \ hat(T)
  std::vector<int> layer;               // R
  std::vector<char> edge_refined;       // F' = F \ hat(F), flag per coarse edge
  std::vector<int> fprime;              // F' as a list

  bool identical() const { return refined.empty(); }
};

/// Requires fine.parent_id() == coarse.id() (one nvb_refine step).
RefinementPair derive_refinement_pair(const Triangulation& coarse, const Triangulation& fine);

/// General form with an explicit ancestor map for chained refinements.
RefinementPair derive_refinement_pair(const Triangulation& coarse, const Triangulation& fine,
                                      std::vector<int> ancestor);

/// Composition of parent maps along a refinement chain.
std::vector<int> compose_parent_maps(const std::vector<int>& coarse_of_mid,
                                     const std::vector<int>& mid_of_fine);

struct SideConnectivity {
  std::vector<int> tris;   // T(K,z), K first
  std::vector<int> edges;  // F(K,z)
};

/// Side-connectivity component of K in the vertex patch of z with respect to
/// the side set F' (flag per edge).  Throws if z is not a vertex of K.
SideConnectivity side_connectivity(const Triangulation& mesh, int k, int z,
                                   const std::vector<char>& fprime);

/// Number of distinct vertex-patch shapes after normalizing position and
/// scale across a hierarchy of meshes.
int patch_configurations(const std::vector<const Triangulation*>& hierarchy);

}  // namespace ncfem
