#include "ncfem/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ncfem {

namespace {
std::atomic<std::uint64_t> g_mesh_counter{1};

double angle_at(const Triangle& t, int i) {
  const Vec2 a = t.v[(i + 1) % 3] - t.v[i];
  const Vec2 b = t.v[(i + 2) % 3] - t.v[i];
  return std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0));
}
}  // namespace

Triangulation Triangulation::from_raw(std::vector<Vec2> vertices,
                                      std::vector<std::array<int, 3>> triangles,
                                      std::vector<int> ref_edges) {
  Triangulation m;
  m.vertices_ = std::move(vertices);
  m.tris_.resize(triangles.size());
  for (size_t t = 0; t < triangles.size(); ++t) {
    auto tv = triangles[t];
    Triangle geo{{m.vertices_[tv[0]], m.vertices_[tv[1]], m.vertices_[tv[2]]}};
    if (std::fabs(geo.signed_area()) < 1e-300)
      throw std::invalid_argument("from_raw: degenerate triangle " + std::to_string(t));
    if (geo.signed_area() < 0.0) std::swap(tv[1], tv[2]);
    m.tris_[t].v = tv;
  }
  if (ref_edges.empty()) {
    for (size_t t = 0; t < m.tris_.size(); ++t) {
      const Triangle geo{{m.vertices_[m.tris_[t].v[0]], m.vertices_[m.tris_[t].v[1]],
                          m.vertices_[m.tris_[t].v[2]]}};
      double len[3];
      double longest = 0.0;
      for (int e = 0; e < 3; ++e) {
        len[e] = (geo.v[(e + 2) % 3] - geo.v[(e + 1) % 3]).norm();
        longest = std::max(longest, len[e]);
      }
      // longest edge, ties broken by the lowest opposite-vertex index
      int best = -1;
      for (int e = 0; e < 3; ++e) {
        if (len[e] < longest * (1.0 - 1e-12)) continue;
        if (best == -1 || m.tris_[t].v[e] < m.tris_[t].v[best]) best = e;
      }
      m.tris_[t].ref_edge = best;
    }
  } else {
    if (ref_edges.size() != m.tris_.size())
      throw std::invalid_argument("from_raw: ref_edges size mismatch");
    for (size_t t = 0; t < m.tris_.size(); ++t) m.tris_[t].ref_edge = ref_edges[t];
  }
  m.id_ = g_mesh_counter.fetch_add(1);
  m.build_derived();
  return m;
}

void Triangulation::build_derived() {
  const int nv = n_vertices();
  const int nt = n_triangles();
  edges_.clear();
  std::map<std::pair<int, int>, int> edge_of;
  for (int t = 0; t < nt; ++t) {
    const Triangle geo = geometry(t);
    tris_[t].area = geo.area();
    tris_[t].diameter = geo.diameter();
    for (int e = 0; e < 3; ++e) {
      int a = tris_[t].v[(e + 1) % 3];
      int b = tris_[t].v[(e + 2) % 3];
      const int lo = std::min(a, b), hi = std::max(a, b);
      auto it = edge_of.find({lo, hi});
      int id;
      if (it == edge_of.end()) {
        id = static_cast<int>(edges_.size());
        edge_of[{lo, hi}] = id;
        MeshEdge me;
        me.v[0] = lo;
        me.v[1] = hi;
        me.length = (vertices_[hi] - vertices_[lo]).norm();
        me.tangent = (vertices_[hi] - vertices_[lo]) / me.length;
        // 90-degree clockwise rotation of the lo->hi tangent
        me.normal = Vec2{me.tangent.y, -me.tangent.x};
        edges_.push_back(me);
      } else {
        id = it->second;
      }
      tris_[t].edge[e] = id;
      MeshEdge& me = edges_[id];
      if (me.tri[0] == -1) {
        me.tri[0] = t;
        me.local[0] = e;
      } else if (me.tri[1] == -1) {
        me.tri[1] = t;
        me.local[1] = e;
      } else {
        throw std::runtime_error("mesh not regular: edge with three incident triangles");
      }
    }
  }
  for (auto& me : edges_) {
    me.boundary = (me.tri[1] == -1);
    // outward normal of tri[0] on this edge
    const MeshTriangle& t0 = tris_[me.tri[0]];
    const Vec2 opp = vertices_[t0.v[me.local[0]]];
    const Vec2 mid = (vertices_[me.v[0]] + vertices_[me.v[1]]) * 0.5;
    const Vec2 out = mid - opp;
    if (me.boundary) {
      if (out.dot(me.normal) < 0.0) me.normal = me.normal * -1.0;  // boundary: nu_F outward
    } else if (out.dot(me.normal) < 0.0) {
      // make tri[0] the T+ side (nu_{T+}|_F = nu_F)
      std::swap(me.tri[0], me.tri[1]);
      std::swap(me.local[0], me.local[1]);
    }
  }
  patch_.assign(nv, {});
  vertex_edges_.assign(nv, {});
  boundary_vertex_.assign(nv, 0);
  for (int t = 0; t < nt; ++t)
    for (int i = 0; i < 3; ++i) patch_[tris_[t].v[i]].push_back(t);
  for (int e = 0; e < n_edges(); ++e) {
    vertex_edges_[edges_[e].v[0]].push_back(e);
    vertex_edges_[edges_[e].v[1]].push_back(e);
    if (edges_[e].boundary) {
      boundary_vertex_[edges_[e].v[0]] = 1;
      boundary_vertex_[edges_[e].v[1]] = 1;
    }
  }
}

int Triangulation::local_vertex(int t, int z) const {
  for (int i = 0; i < 3; ++i)
    if (tris_[t].v[i] == z) return i;
  return -1;
}

std::vector<int> Triangulation::neighborhood(int t) const {
  std::vector<int> out;
  for (int i = 0; i < 3; ++i)
    for (int k : patch_[tris_[t].v[i]]) out.push_back(k);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int Triangulation::find_edge(int a, int b) const {
  const int lo = std::min(a, b), hi = std::max(a, b);
  for (int e : vertex_edges_[lo])
    if (edges_[e].v[0] == lo && edges_[e].v[1] == hi) return e;
  return -1;
}

ShapeStats Triangulation::shape_stats() const {
  ShapeStats s;
  s.omega0 = M_PI;
  for (int t = 0; t < n_triangles(); ++t) {
    const Triangle geo = geometry(t);
    if (geo.area() < 1e-300) throw std::runtime_error("shape_stats: degenerate triangle");
    for (int i = 0; i < 3; ++i) s.omega0 = std::min(s.omega0, angle_at(geo, i));
  }
  for (int z = 0; z < n_vertices(); ++z)
    s.m2 = std::max(s.m2, static_cast<int>(patch_[z].size()));
  for (int t = 0; t < n_triangles(); ++t)
    s.m3 = std::max(s.m3, static_cast<int>(neighborhood(t).size()));
  return s;
}

Triangulation Triangulation::unit_square() {
  return from_raw({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{{0, 1, 2}}, {{0, 2, 3}}});
}

Triangulation Triangulation::criss_cross_square() {
  return from_raw({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}},
                  {{{0, 1, 4}}, {{1, 2, 4}}, {{2, 3, 4}}, {{3, 0, 4}}});
}

Triangulation Triangulation::l_shape() {
  // (-1,1)^2 minus the closed fourth quadrant, six right isosceles triangles
  std::vector<Vec2> v = {{-1, -1}, {0, -1}, {-1, 0}, {0, 0}, {1, 0}, {-1, 1}, {0, 1}, {1, 1}};
  std::vector<std::array<int, 3>> t = {{{0, 1, 3}}, {{0, 3, 2}}, {{2, 3, 6}},
                                       {{2, 6, 5}}, {{3, 4, 7}}, {{3, 7, 6}}};
  return from_raw(std::move(v), std::move(t));
}

Triangulation Triangulation::read(std::istream& in) {
  std::string magic;
  int dim = 0;
  if (!(in >> magic >> dim) || magic != "ncfem-mesh" || dim != 2)
    throw std::runtime_error("mesh file: bad header");
  int nv = 0;
  if (!(in >> nv) || nv < 3) throw std::runtime_error("mesh file: bad vertex count");
  std::vector<Vec2> vertices(nv);
  for (auto& p : vertices)
    if (!(in >> p.x >> p.y)) throw std::runtime_error("mesh file: bad vertex line");
  int nt = 0;
  if (!(in >> nt) || nt < 1) throw std::runtime_error("mesh file: bad triangle count");
  std::vector<std::array<int, 3>> tris(nt);
  std::vector<int> tags(nt);
  for (int t = 0; t < nt; ++t) {
    int marker = 0;
    if (!(in >> tris[t][0] >> tris[t][1] >> tris[t][2] >> tags[t] >> marker))
      throw std::runtime_error("mesh file: bad triangle line");
    for (int i = 0; i < 3; ++i)
      if (tris[t][i] < 0 || tris[t][i] >= nv)
        throw std::runtime_error("mesh file: vertex index out of range");
    if (tags[t] < 0 || tags[t] > 2) throw std::runtime_error("mesh file: bad tag");
  }
  return from_raw(std::move(vertices), std::move(tris), std::move(tags));
}

Triangulation Triangulation::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file: " + path);
  return read(in);
}

void Triangulation::write(std::ostream& out) const {
  out << "ncfem-mesh 2\n" << n_vertices() << "\n";
  out.precision(17);
  for (const Vec2& p : vertices_) out << p.x << " " << p.y << "\n";
  out << n_triangles() << "\n";
  for (const auto& t : tris_)
    out << t.v[0] << " " << t.v[1] << " " << t.v[2] << " " << t.ref_edge << " 0\n";
}

void Triangulation::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write mesh file: " + path);
  write(out);
}

Triangulation nvb_refine(const Triangulation& mesh, const std::vector<int>& marked) {
  const int nt = mesh.n_triangles();
  std::vector<char> split(mesh.n_edges(), 0);
  for (int t : marked) {
    if (t < 0 || t >= nt) throw std::invalid_argument("nvb_refine: triangle id out of range");
    split[mesh.tris_[t].edge[mesh.tris_[t].ref_edge]] = 1;
  }
  // closure: a triangle with any split edge must split its refinement edge
  bool changed = true;
  while (changed) {
    changed = false;
    for (int t = 0; t < nt; ++t) {
      const auto& tr = mesh.tris_[t];
      const int ref = tr.edge[tr.ref_edge];
      if (split[ref]) continue;
      if (split[tr.edge[0]] || split[tr.edge[1]] || split[tr.edge[2]]) {
        split[ref] = 1;
        changed = true;
      }
    }
  }

  Triangulation out;
  out.vertices_ = mesh.vertices_;
  out.id_ = g_mesh_counter.fetch_add(1);
  out.parent_id_ = mesh.id_;
  std::vector<int> midpoint(mesh.n_edges(), -1);
  for (int e = 0; e < mesh.n_edges(); ++e)
    if (split[e]) {
      midpoint[e] = static_cast<int>(out.vertices_.size());
      out.vertices_.push_back((mesh.vertices_[mesh.edges_[e].v[0]] +
                               mesh.vertices_[mesh.edges_[e].v[1]]) * 0.5);
    }

  auto emit = [&](std::array<int, 3> v, int ref, int gen, int parent) {
    MeshTriangle t;
    t.v = v;
    t.ref_edge = ref;
    t.generation = gen;
    out.tris_.push_back(t);
    out.parent_tri_.push_back(parent);
  };

  // bisect(peak c, edge a-b split at m): children keep the old edges as
  // their refinement edges (opposite the newest vertex m)
  for (int t = 0; t < nt; ++t) {
    const auto& tr = mesh.tris_[t];
    const int ref_eid = tr.edge[tr.ref_edge];
    if (!split[ref_eid]) {
      emit(tr.v, tr.ref_edge, tr.generation, t);
      continue;
    }
    const int c = tr.v[tr.ref_edge];
    const int a = tr.v[(tr.ref_edge + 1) % 3];
    const int b = tr.v[(tr.ref_edge + 2) % 3];
    const int m = midpoint[ref_eid];
    // child triangles (c, a, m) and (c, m, b); second-level bisection when
    // the old edge (c,a) resp. (b,c) is split too
    const int eca = tr.edge[(tr.ref_edge + 2) % 3];  // edge opposite b = (c,a)
    const int ebc = tr.edge[(tr.ref_edge + 1) % 3];  // edge opposite a = (b,c)
    if (split[eca] != 0) {
      const int m2 = midpoint[eca];
      emit({m2, m, c}, 0, tr.generation + 2, t);
      emit({m2, a, m}, 0, tr.generation + 2, t);
    } else {
      emit({m, c, a}, 0, tr.generation + 1, t);
    }
    if (split[ebc] != 0) {
      const int m2 = midpoint[ebc];
      emit({m2, m, b}, 0, tr.generation + 2, t);
      emit({m2, c, m}, 0, tr.generation + 2, t);
    } else {
      emit({m, b, c}, 0, tr.generation + 1, t);
    }
  }
  out.build_derived();
  return out;
}

RefinementPair derive_refinement_pair(const Triangulation& coarse, const Triangulation& fine) {
  if (fine.id() == coarse.id()) {
    std::vector<int> idmap(fine.n_triangles());
    for (int i = 0; i < fine.n_triangles(); ++i) idmap[i] = i;
    return derive_refinement_pair(coarse, fine, std::move(idmap));
  }
  if (fine.parent_id() != coarse.id())
    throw std::invalid_argument("derive_refinement_pair: fine mesh is not a refinement of coarse");
  return derive_refinement_pair(coarse, fine, fine.parent_tri());
}

RefinementPair derive_refinement_pair(const Triangulation& coarse, const Triangulation& fine,
                                      std::vector<int> ancestor) {
  if (static_cast<int>(ancestor.size()) != fine.n_triangles())
    throw std::invalid_argument("derive_refinement_pair: ancestor map size mismatch");
  RefinementPair pair;
  pair.coarse = &coarse;
  pair.fine = &fine;
  pair.ancestor = std::move(ancestor);
  pair.children.assign(coarse.n_triangles(), {});
  for (int t = 0; t < fine.n_triangles(); ++t) {
    const int a = pair.ancestor[t];
    if (a < 0 || a >= coarse.n_triangles())
      throw std::invalid_argument("derive_refinement_pair: ancestor out of range");
    pair.children[a].push_back(t);
  }
  pair.survives.assign(coarse.n_triangles(), 0);
  for (int k = 0; k < coarse.n_triangles(); ++k) {
    if (pair.children[k].empty())
      throw std::invalid_argument("derive_refinement_pair: coarse triangle without children");
    if (pair.children[k].size() == 1) {
      auto cv = coarse.tri(k).v;
      auto fv = fine.tri(pair.children[k][0]).v;
      std::sort(cv.begin(), cv.end());
      std::sort(fv.begin(), fv.end());
      if (cv == fv) pair.survives[k] = 1;
    }
    if (!pair.survives[k]) pair.refined.push_back(k);
  }
  // R: coarse triangles sharing a vertex with T \ hat(T)
  std::vector<char> touched(coarse.n_vertices(), 0);
  for (int k : pair.refined)
    for (int i = 0; i < 3; ++i) touched[coarse.tri(k).v[i]] = 1;
  std::vector<char> in_layer(coarse.n_triangles(), 0);
  for (int k = 0; k < coarse.n_triangles(); ++k)
    for (int i = 0; i < 3; ++i)
      if (touched[coarse.tri(k).v[i]]) {
        in_layer[k] = 1;
        break;
      }
  if (pair.refined.empty()) in_layer.assign(coarse.n_triangles(), 0);
  for (int k = 0; k < coarse.n_triangles(); ++k)
    if (in_layer[k]) pair.layer.push_back(k);
  // F' = coarse edges that do not survive into the fine mesh
  pair.edge_refined.assign(coarse.n_edges(), 0);
  for (int e = 0; e < coarse.n_edges(); ++e) {
    if (fine.find_edge(coarse.edge(e).v[0], coarse.edge(e).v[1]) == -1) {
      pair.edge_refined[e] = 1;
      pair.fprime.push_back(e);
    }
  }
  return pair;
}

std::vector<int> compose_parent_maps(const std::vector<int>& coarse_of_mid,
                                     const std::vector<int>& mid_of_fine) {
  std::vector<int> out(mid_of_fine.size());
  for (size_t i = 0; i < mid_of_fine.size(); ++i) out[i] = coarse_of_mid[mid_of_fine[i]];
  return out;
}

SideConnectivity side_connectivity(const Triangulation& mesh, int k, int z,
                                   const std::vector<char>& fprime) {
  if (mesh.local_vertex(k, z) < 0)
    throw std::invalid_argument("side_connectivity: z is not a vertex of K");
  const auto& patch = mesh.vertex_patch(z);
  SideConnectivity sc;
  std::set<int> visited{k};
  std::vector<int> stack{k};
  sc.tris.push_back(k);
  while (!stack.empty()) {
    const int t = stack.back();
    stack.pop_back();
    for (int e = 0; e < 3; ++e) {
      const int eid = mesh.tri(t).edge[e];
      const MeshEdge& me = mesh.edge(eid);
      if (me.boundary || !fprime[eid]) continue;
      if (me.v[0] != z && me.v[1] != z) continue;  // only sides containing z
      const int other = (me.tri[0] == t) ? me.tri[1] : me.tri[0];
      if (std::find(patch.begin(), patch.end(), other) == patch.end()) continue;
      if (visited.insert(other).second) {
        sc.tris.push_back(other);
        stack.push_back(other);
      }
    }
  }
  // interior shared sides within T(K,z) that lie in F'
  std::set<int> edge_set;
  for (int t : sc.tris)
    for (int e = 0; e < 3; ++e) {
      const int eid = mesh.tri(t).edge[e];
      const MeshEdge& me = mesh.edge(eid);
      if (me.boundary || !fprime[eid]) continue;
      if (me.v[0] != z && me.v[1] != z) continue;
      if (visited.count(me.tri[0]) && visited.count(me.tri[1])) edge_set.insert(eid);
    }
  sc.edges.assign(edge_set.begin(), edge_set.end());
  return sc;
}

int patch_configurations(const std::vector<const Triangulation*>& hierarchy) {
  std::set<std::string> shapes;
  for (const Triangulation* mesh : hierarchy) {
    for (int z = 0; z < mesh->n_vertices(); ++z) {
      const auto& patch = mesh->vertex_patch(z);
      if (patch.empty()) continue;
      const Vec2 center = mesh->vertex(z);
      double radius = 0.0;
      for (int t : patch)
        for (int i = 0; i < 3; ++i)
          radius = std::max(radius, (mesh->vertex(mesh->tri(t).v[i]) - center).norm());
      std::vector<std::array<std::pair<long long, long long>, 3>> tris;
      auto snap = [&](Vec2 p) {
        const Vec2 q = (p - center) / radius;
        return std::pair<long long, long long>{std::llround(q.x * 1e8), std::llround(q.y * 1e8)};
      };
      for (int t : patch) {
        std::array<std::pair<long long, long long>, 3> pts;
        for (int i = 0; i < 3; ++i) pts[i] = snap(mesh->vertex(mesh->tri(t).v[i]));
        std::sort(pts.begin(), pts.end());
        tris.push_back(pts);
      }
      std::sort(tris.begin(), tris.end());
      std::ostringstream key;
      for (const auto& t : tris)
        for (const auto& p : t) key << p.first << "," << p.second << ";";
      shapes.insert(key.str());
    }
  }
  return static_cast<int>(shapes.size());
}

}  // namespace ncfem
