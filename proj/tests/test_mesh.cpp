#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ncfem/mesh.hpp"

using namespace ncfem;

namespace {

std::vector<int> all_tris(const Triangulation& m) {
  std::vector<int> v(m.n_triangles());
  for (int i = 0; i < m.n_triangles(); ++i) v[i] = i;
  return v;
}

void check_conforming(const Triangulation& m) {
  for (int e = 0; e < m.n_edges(); ++e) {
    const MeshEdge& me = m.edge(e);
    if (me.boundary)
      CHECK(me.tri[1] == -1);
    else
      CHECK(me.tri[1] >= 0);
  }
}

}  // namespace

TEST_SUITE_BEGIN("mesh");

TEST_CASE("square: marking both triangles bisects each once") {
  const Triangulation m = Triangulation::unit_square();
  const Triangulation r = nvb_refine(m, all_tris(m));
  CHECK(r.n_triangles() == 4);
  check_conforming(r);
  double area = 0.0;
  for (int t = 0; t < r.n_triangles(); ++t) area += r.tri(t).area;
  CHECK(area == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("closure: marking one triangle with a shared refinement edge bisects both") {
  const Triangulation m = Triangulation::unit_square();
  // both initial triangles have the diagonal as their longest edge
  const Triangulation r = nvb_refine(m, {0});
  CHECK(r.n_triangles() == 4);
  check_conforming(r);
}

TEST_CASE("empty marking copies the mesh") {
  const Triangulation m = Triangulation::criss_cross_square();
  const Triangulation r = nvb_refine(m, {});
  CHECK(r.n_triangles() == m.n_triangles());
  CHECK(r.n_vertices() == m.n_vertices());
  for (int t = 0; t < m.n_triangles(); ++t) CHECK(r.parent_tri()[t] == t);
}

TEST_CASE("parent containment: child areas sum to the parent area") {
  Triangulation m = Triangulation::l_shape();
  Rng rng(17);
  for (int level = 0; level < 3; ++level) {
    std::vector<int> marked;
    for (int t = 0; t < m.n_triangles(); ++t)
      if (rng.uniform() < 0.4) marked.push_back(t);
    const Triangulation r = nvb_refine(m, marked);
    check_conforming(r);
    std::vector<double> child_area(m.n_triangles(), 0.0);
    for (int t = 0; t < r.n_triangles(); ++t) child_area[r.parent_tri()[t]] += r.tri(t).area;
    for (int t = 0; t < m.n_triangles(); ++t)
      CHECK(child_area[t] == doctest::Approx(m.tri(t).area).epsilon(1e-12));
    m = r;
  }
}

TEST_CASE("shape stats: criss-cross square and tiny meshes") {
  const Triangulation cc = Triangulation::criss_cross_square();
  const ShapeStats s = cc.shape_stats();
  CHECK(s.omega0 == doctest::Approx(M_PI / 4.0).epsilon(1e-12));
  CHECK(s.m2 <= 8);
  CHECK(s.m3 <= 3 * s.m2);

  const Triangulation single = Triangulation::from_raw({{0, 0}, {1, 0}, {0, 1}}, {{{0, 1, 2}}});
  const ShapeStats s1 = single.shape_stats();
  CHECK(s1.m2 == 1);
  CHECK(s1.m3 == 1);

  const Triangulation pair =
      Triangulation::from_raw({{0, 0}, {1, 0}, {0, 1}, {1, 1}}, {{{0, 1, 2}}, {{1, 3, 2}}});
  CHECK(pair.shape_stats().m2 == 2);
}

TEST_CASE("NVB angle bound over eight levels") {
  Triangulation m = Triangulation::criss_cross_square();
  double omega_level2 = 0.0;
  double omega_min = M_PI;
  Rng rng(5);
  for (int level = 0; level < 8; ++level) {
    std::vector<int> marked;
    for (int t = 0; t < m.n_triangles(); ++t)
      if (rng.uniform() < 0.5) marked.push_back(t);
    m = nvb_refine(m, marked);
    const double w = m.shape_stats().omega0;
    if (level == 1) omega_level2 = w;
    if (level >= 1) omega_min = std::min(omega_min, w);
  }
  CHECK(omega_min >= omega_level2 - 1e-12);
  // right isosceles family: the angle never leaves 45 degrees
  CHECK(omega_min == doctest::Approx(M_PI / 4.0).epsilon(1e-12));
}

TEST_CASE("patch configurations stabilize under uniform refinement") {
  std::vector<Triangulation> meshes;
  meshes.push_back(Triangulation::criss_cross_square());
  for (int level = 0; level < 4; ++level)
    meshes.push_back(nvb_refine(meshes.back(), all_tris(meshes.back())));
  std::vector<const Triangulation*> upto3{&meshes[0], &meshes[1], &meshes[2], &meshes[3]};
  std::vector<const Triangulation*> upto4 = upto3;
  upto4.push_back(&meshes[4]);
  const int c3 = patch_configurations(upto3);
  const int c4 = patch_configurations(upto4);
  CHECK(c4 == c3);  // stable once the interior patterns repeat
  const int single = patch_configurations({&meshes[0]});
  CHECK(single >= 2);  // center patch and the boundary corners
}

TEST_CASE("side connectivity extremes") {
  const Triangulation m = Triangulation::criss_cross_square();
  const int center = 4;  // vertex at (0.5, 0.5)
  std::vector<char> all(m.n_edges(), 1);
  std::vector<char> none(m.n_edges(), 0);
  const SideConnectivity full = side_connectivity(m, 0, center, all);
  CHECK(full.tris.size() == m.vertex_patch(center).size());
  const SideConnectivity empty = side_connectivity(m, 0, center, none);
  CHECK(empty.tris == std::vector<int>{0});
  CHECK(empty.edges.empty());
  CHECK_THROWS(side_connectivity(m, 0, 2, all));  // vertex 2 not in triangle 0
}

TEST_CASE("refinement pair: identical, single-pair, and uniform") {
  const Triangulation m = Triangulation::unit_square();
  const RefinementPair self = derive_refinement_pair(m, m);
  CHECK(self.refined.empty());
  CHECK(self.layer.empty());
  CHECK(self.fprime.empty());

  const Triangulation r1 = nvb_refine(m, {0});
  const RefinementPair p1 = derive_refinement_pair(m, r1);
  CHECK(p1.refined.size() == 2);  // closure bisected both
  CHECK(p1.layer.size() == 2);
  CHECK(p1.fprime.size() == 1);  // only the diagonal disappeared

  // full uniform refinement (two mark-all passes) removes every coarse edge
  const Triangulation mid = nvb_refine(m, all_tris(m));
  const Triangulation fine = nvb_refine(mid, all_tris(mid));
  const RefinementPair pu = derive_refinement_pair(
      m, fine, compose_parent_maps(mid.parent_tri(), fine.parent_tri()));
  CHECK(static_cast<int>(pu.refined.size()) == m.n_triangles());
  CHECK(static_cast<int>(pu.fprime.size()) == m.n_edges());

  CHECK_THROWS(derive_refinement_pair(r1, fine));  // fine is not a child of r1
}

TEST_CASE("side connectivity with F' = F \\ hat(F) on an unrefined patch") {
  // refine one triangle of a finer L-shape; patches far away keep all edges
  Triangulation m = Triangulation::l_shape();
  m = nvb_refine(m, all_tris(m));
  m = nvb_refine(m, all_tris(m));
  const Triangulation r = nvb_refine(m, {0});
  const RefinementPair pair = derive_refinement_pair(m, r);
  int k_far = -1;
  for (int t = 0; t < m.n_triangles(); ++t) {
    bool unrefined_patch = true;
    for (int z = 0; z < 3; ++z)
      for (int k : m.vertex_patch(m.tri(t).v[z]))
        if (!pair.survives[k]) unrefined_patch = false;
    if (unrefined_patch) k_far = t;
  }
  REQUIRE(k_far >= 0);
  for (int z = 0; z < 3; ++z) {
    const SideConnectivity sc =
        side_connectivity(m, k_far, m.tri(k_far).v[z], pair.edge_refined);
    CHECK(sc.tris == std::vector<int>{k_far});
  }
}

TEST_CASE("layer set R contains the refined set plus vertex neighbors") {
  const Triangulation m = Triangulation::l_shape();
  const Triangulation r = nvb_refine(m, {0});
  const RefinementPair pair = derive_refinement_pair(m, r);
  for (int k : pair.refined)
    CHECK(std::find(pair.layer.begin(), pair.layer.end(), k) != pair.layer.end());
  std::vector<char> refined_flag(m.n_triangles(), 0);
  for (int k : pair.refined) refined_flag[k] = 1;
  for (int k : pair.layer) {
    bool touches = false;
    for (int i = 0; i < 3; ++i)
      for (int other : m.vertex_patch(m.tri(k).v[i]))
        if (refined_flag[other]) touches = true;
    CHECK(touches);
  }
}

TEST_CASE("mesh file round trip and error paths") {
  const Triangulation m = Triangulation::l_shape();
  std::stringstream buffer;
  m.write(buffer);
  const Triangulation back = Triangulation::read(buffer);
  CHECK(back.n_vertices() == m.n_vertices());
  CHECK(back.n_triangles() == m.n_triangles());
  for (int t = 0; t < m.n_triangles(); ++t) {
    CHECK(back.tri(t).v == m.tri(t).v);
    CHECK(back.tri(t).ref_edge == m.tri(t).ref_edge);
  }
  std::stringstream bad("wrong-header 2\n");
  CHECK_THROWS(Triangulation::read(bad));
  std::stringstream bad2("ncfem-mesh 3\n");
  CHECK_THROWS(Triangulation::read(bad2));
}

TEST_SUITE_END();
