#include <doctest.h>

#include <cmath>

#include "ncfem/cli.hpp"
#include "ncfem/fem_morley.hpp"

using namespace ncfem;

namespace {

std::vector<int> all_tris(const Triangulation& m) {
  std::vector<int> v(m.n_triangles());
  for (int i = 0; i < m.n_triangles(); ++i) v[i] = i;
  return v;
}

Triangulation uniform2(const Triangulation& m) {
  Triangulation mid = nvb_refine(m, all_tris(m));
  return nvb_refine(mid, all_tris(mid));
}

Triangle random_triangle(Rng& rng) {
  while (true) {
    Triangle t{{Vec2{rng.uniform(-1, 1), rng.uniform(-1, 1)},
                Vec2{rng.uniform(-1, 1), rng.uniform(-1, 1)},
                Vec2{rng.uniform(-1, 1), rng.uniform(-1, 1)}}};
    if (t.area() > 0.08) return t;
  }
}

MorleyFunction represent_quadratic(const MorleySpace& space, const std::array<double, 6>& q) {
  const Triangulation& mesh = space.mesh();
  auto val = [&](Vec2 p) {
    return q[0] + q[1] * p.x + q[2] * p.y + q[3] * p.x * p.x + q[4] * p.x * p.y +
           q[5] * p.y * p.y;
  };
  auto grad = [&](Vec2 p) {
    return Vec2{q[1] + 2 * q[3] * p.x + q[4] * p.y, q[2] + q[4] * p.x + 2 * q[5] * p.y};
  };
  MorleyFunction f;
  f.space = &space;
  f.coeff.assign(space.n_dofs(), 0.0);
  for (int z = 0; z < mesh.n_vertices(); ++z)
    if (space.dof_of_vertex(z) >= 0) f.coeff[space.dof_of_vertex(z)] = val(mesh.vertex(z));
  for (int e = 0; e < mesh.n_edges(); ++e)
    if (space.dof_of_edge(e) >= 0) {
      const MeshEdge& me = mesh.edge(e);
      const Vec2 mid = (mesh.vertex(me.v[0]) + mesh.vertex(me.v[1])) * 0.5;
      f.coeff[space.dof_of_edge(e)] = grad(mid).dot(me.normal);
    }
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("fem_morley");

TEST_CASE("local shape functions reproduce x^2") {
  Rng rng(3);
  const Triangle geo = random_triangle(rng);
  const Triangulation m = Triangulation::from_raw({geo.v[0], geo.v[1], geo.v[2]}, {{{0, 1, 2}}});
  const MorleySpace space(m, /*constrained=*/false);
  const MorleyFunction f = represent_quadratic(space, {0, 0, 0, 1, 0, 0});
  for (int trial = 0; trial < 10; ++trial) {
    double l1 = rng.uniform(), l2 = rng.uniform() * (1 - l1);
    const Vec2 p = m.geometry(0).point(l1, l2, 1 - l1 - l2);
    CHECK(f.eval(0, p) == doctest::Approx(p.x * p.x).epsilon(1e-11));
  }
  const Sym2 h = f.hessian(0);
  CHECK(h.xx == doctest::Approx(2.0).epsilon(1e-11));
  CHECK(h.xy == doctest::Approx(0.0));
  CHECK(h.yy == doctest::Approx(0.0));
}

TEST_CASE("element stiffness kernel is exactly the affine functions") {
  Rng rng(5);
  const Triangle geo = random_triangle(rng);
  const Triangulation m = Triangulation::from_raw({geo.v[0], geo.v[1], geo.v[2]}, {{{0, 1, 2}}});
  const MorleySpace space(m, false);
  const MorleySystem sys = assemble_biharmonic(space, SourceTerm::constant(0.0));
  Mat elem(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) elem(i, j) = sys.stiffness.entry(i, j);
  const std::vector<double> eig = symmetric_eigenvalues(elem);
  int zeros = 0;
  for (double e : eig)
    if (std::fabs(e) < 1e-10 * std::fabs(eig.back())) ++zeros;
  CHECK(zeros == 3);
}

TEST_CASE("zero source solves to zero, defining equations hold") {
  const Triangulation m = uniform2(Triangulation::criss_cross_square());
  const MorleySpace space(m);
  const MorleyFunction zero = solve_biharmonic(space, SourceTerm::constant(0.0));
  for (double c : zero.coeff) CHECK(c == 0.0);

  const SourceTerm f = SourceTerm::constant(1.0);
  const MorleyFunction u = solve_biharmonic(space, f);
  const MorleySystem sys = assemble_biharmonic(space, f);
  std::vector<double> r;
  sys.stiffness.multiply(u.coeff, r);
  double worst = 0.0;
  for (int i = 0; i < space.n_dofs(); ++i) worst = std::max(worst, std::fabs(r[i] - sys.load[i]));
  CHECK(worst <= 1e-9 * norm2(sys.load));
}

TEST_CASE("I_M reproduces global quadratics") {
  const Triangulation m = uniform2(Triangulation::unit_square());
  const MorleySpace space(m, false);
  const std::array<double, 6> q{0.3, -1.0, 0.5, 2.0, 1.0, -0.75};
  const MorleyFunction direct = represent_quadratic(space, q);
  const MorleyFunction interp = interpolate_morley(
      space,
      [&](Vec2 p) {
        return q[0] + q[1] * p.x + q[2] * p.y + q[3] * p.x * p.x + q[4] * p.x * p.y +
               q[5] * p.y * p.y;
      },
      [&](Vec2 p) {
        return Vec2{q[1] + 2 * q[3] * p.x + q[4] * p.y, q[2] + q[4] * p.x + 2 * q[5] * p.y};
      });
  for (int d = 0; d < space.n_dofs(); ++d)
    CHECK(interp.coeff[d] == doctest::Approx(direct.coeff[d]).epsilon(1e-11));
}

TEST_CASE("coarse-from-fine Morley interpolation: identity and Hessian commutation") {
  Triangulation coarse = uniform2(Triangulation::unit_square());
  const Triangulation fine = nvb_refine(coarse, {1, 4});
  const RefinementPair pair = derive_refinement_pair(coarse, fine);
  const MorleySpace cs(coarse);
  const MorleySpace fs(fine);
  Rng rng(11);
  MorleyFunction v;
  v.space = &fs;
  v.coeff.resize(fs.n_dofs());
  for (double& c : v.coeff) c = rng.uniform(-1, 1);
  const MorleyFunction iv = interpolate_morley(cs, v, pair);
  for (int t = 0; t < coarse.n_triangles(); ++t) {
    if (pair.survives[t]) {
      const int ft = pair.children[t][0];
      const Vec2 p = coarse.geometry(t).centroid();
      CHECK(iv.eval(t, p) == doctest::Approx(v.eval(ft, p)).epsilon(1e-10));
    }
    Sym2 avg{0, 0, 0};
    double area = 0.0;
    for (int ft : pair.children[t]) {
      avg = avg + v.hessian(ft) * fine.tri(ft).area;
      area += fine.tri(ft).area;
    }
    const Sym2 diff = iv.hessian(t) - avg * (1.0 / area);
    CHECK(std::sqrt(diff.frobenius2()) <= 1e-12);
  }
}

TEST_CASE("Morley interpolation constant on single triangles") {
  // kappa_M bounds the quadratic approximation on any single triangle
  Rng rng(13);
  const double kappa = 0.257457844658;
  for (int trial = 0; trial < 20; ++trial) {
    const Triangle geo = random_triangle(rng);
    const Triangulation m =
        Triangulation::from_raw({geo.v[0], geo.v[1], geo.v[2]}, {{{0, 1, 2}}});
    const MorleySpace space(m, false);
    // random quartic polynomial as the smooth sample
    BaryPoly v(m.geometry(0), 4);
    for (int b = 0; b <= 4; ++b)
      for (int c = 0; c <= 4 - b; ++c) v.at(4 - b - c, b, c) = rng.uniform(-1, 1);
    auto [vx, vy] = v.gradient();
    const MorleyFunction iv = interpolate_morley(
        space, [&](Vec2 p) { return v.eval(p); },
        [&](Vec2 p) { return Vec2{vx.eval(p), vy.eval(p)}; }, 4);
    const BaryPoly d = v - reexpress(iv.local_poly(0), m.geometry(0));
    auto [dx, dy] = d.gradient();
    auto [dxx, dxy] = dx.gradient();
    auto [dyx, dyy] = dy.gradient();
    (void)dyx;
    const double num = std::sqrt(l2_norm2(d));
    const double den =
        std::sqrt(integrate_triangle(dxx * dxx + dxy * dxy * 2.0 + dyy * dyy));
    if (den > 1e-14) {
      const double h = m.geometry(0).diameter();
      CHECK(num <= kappa * h * h * den * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("HCT interpolation reproduces cubics and is C1") {
  Rng rng(17);
  const Triangulation m = Triangulation::criss_cross_square();
  // global cubic test function
  auto val = [](Vec2 p) {
    return 0.5 + p.x - 2.0 * p.y + p.x * p.x - p.x * p.y + 3.0 * p.y * p.y + p.x * p.x * p.x -
           2.0 * p.x * p.y * p.y + 0.5 * p.y * p.y * p.y;
  };
  auto grad = [](Vec2 p) {
    return Vec2{1.0 + 2.0 * p.x - p.y + 3.0 * p.x * p.x - 2.0 * p.y * p.y,
                -2.0 - p.x + 6.0 * p.y - 4.0 * p.x * p.y + 1.5 * p.y * p.y};
  };
  std::vector<double> values(m.n_vertices());
  std::vector<Vec2> grads(m.n_vertices());
  for (int z = 0; z < m.n_vertices(); ++z) {
    values[z] = val(m.vertex(z));
    grads[z] = grad(m.vertex(z));
  }
  std::vector<double> dn(m.n_edges());
  for (int e = 0; e < m.n_edges(); ++e) {
    const MeshEdge& me = m.edge(e);
    const Vec2 mid = (m.vertex(me.v[0]) + m.vertex(me.v[1])) * 0.5;
    dn[e] = grad(mid).dot(me.normal);
  }
  const HctFunction f = hct_interpolate(m, values, grads, dn);
  for (int t = 0; t < m.n_triangles(); ++t)
    for (int trial = 0; trial < 8; ++trial) {
      double l1 = rng.uniform(), l2 = rng.uniform() * (1 - l1);
      const Vec2 p = m.geometry(t).point(l1, l2, 1 - l1 - l2);
      CHECK(f.eval(t, p) == doctest::Approx(val(p)).epsilon(1e-10));
    }
  // C1 across internal subtriangle edges: probe values and gradients
  for (int t = 0; t < m.n_triangles(); ++t) {
    const Vec2 center = m.geometry(t).centroid();
    for (int i = 0; i < 3; ++i) {
      const Vec2 zi = m.vertex(m.tri(t).v[i]);
      const int sa = (i + 1) % 3;
      const int sb = (i + 2) % 3;
      for (int q = 1; q < 5; ++q) {
        const Vec2 p = zi + (center - zi) * (q / 5.0);
        const double va = f.piece(t).cubic[sa].eval(p);
        const double vb = f.piece(t).cubic[sb].eval(p);
        CHECK(std::fabs(va - vb) <= 1e-9);
        auto [gax, gay] = f.piece(t).cubic[sa].gradient();
        auto [gbx, gby] = f.piece(t).cubic[sb].gradient();
        CHECK(std::fabs(gax.eval(p) - gbx.eval(p)) <= 1e-9);
        CHECK(std::fabs(gay.eval(p) - gby.eval(p)) <= 1e-9);
      }
    }
  }
  // Bernstein C0 stitching: shared-edge control points of adjacent pieces
  // agree after conversion
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto b0 = f.piece(t).cubic[0].bernstein_coefficients();
    CHECK(b0.size() == 10);
  }
}

TEST_CASE("zero HCT degrees of freedom give the zero function") {
  const Triangulation m = Triangulation::unit_square();
  const HctFunction f = hct_interpolate(m, std::vector<double>(m.n_vertices(), 0.0),
                                        std::vector<Vec2>(m.n_vertices()),
                                        std::vector<double>(m.n_edges(), 0.0));
  Rng rng(23);
  for (int t = 0; t < m.n_triangles(); ++t) {
    double l1 = rng.uniform(), l2 = rng.uniform() * (1 - l1);
    CHECK(std::fabs(f.eval(t, m.geometry(t).point(l1, l2, 1 - l1 - l2))) <= 1e-12);
  }
}

TEST_CASE("edge bubble: unit normal mean and exact L2 norm") {
  Rng rng(29);
  for (int trial = 0; trial < 8; ++trial) {
    const Triangle geo = random_triangle(rng);
    const Triangulation m =
        Triangulation::from_raw({geo.v[0], geo.v[1], geo.v[2]}, {{{0, 1, 2}}});
    for (int e = 0; e < 3; ++e) {
      const BaryPoly b = morley_edge_bubble(m, 0, e);
      const MeshEdge& me = m.edge(m.tri(0).edge[e]);
      auto [bx, by] = b.gradient();
      const BaryPoly bn = bx * me.normal.x + by * me.normal.y;
      const EdgePoly trace = restrict_to_edge(bn, (e + 1) % 3, (e + 2) % 3);
      CHECK(integrate_edge(trace) / me.length == doctest::Approx(1.0).epsilon(1e-12));
      // normal-derivative means vanish on the other edges
      for (int o = 0; o < 3; ++o) {
        if (o == e) continue;
        const MeshEdge& oe = m.edge(m.tri(0).edge[o]);
        const BaryPoly on = bx * oe.normal.x + by * oe.normal.y;
        CHECK(std::fabs(integrate_edge(restrict_to_edge(on, (o + 1) % 3, (o + 2) % 3))) <=
              1e-12);
      }
      // ||b|| = 2 sqrt(|K|^3) / (|E| sqrt(231)); exact by the moment formula
      const double expect =
          2.0 * std::pow(m.geometry(0).area(), 1.5) / (me.length * std::sqrt(231.0));
      CHECK(std::sqrt(l2_norm2(b)) == doctest::Approx(expect).epsilon(1e-12));
      // value and gradient vanish at the vertices
      for (int i = 0; i < 3; ++i) {
        CHECK(std::fabs(b.eval(m.geometry(0).v[i])) <= 1e-13);
        CHECK(std::fabs(bx.eval(m.geometry(0).v[i])) <= 1e-12);
        CHECK(std::fabs(by.eval(m.geometry(0).v[i])) <= 1e-12);
      }
    }
  }
}

TEST_CASE("HCT vertex-gradient basis functions scale like h^2") {
  // || h^{-2} psi_{z,alpha} ||_{L2(K)} stays bounded across a shape-regular
  // scaling family (the constant itself is only measured)
  double worst = 0.0;
  for (double scale : {1.0, 0.5, 0.25, 0.125, 0.0625}) {
    const Triangulation m = Triangulation::from_raw(
        {{0, 0}, {scale, 0}, {0, scale}}, {{{0, 1, 2}}});
    HctDofs dofs;
    dofs.grad[0] = Vec2{1.0, 0.0};
    const HctPiece psi = hct_solve_local(m, 0, dofs);
    double norm2_val = 0.0;
    for (int s = 0; s < 3; ++s) norm2_val += l2_norm2(psi.cubic[s]);
    const double h = m.geometry(0).diameter();
    worst = std::max(worst, std::sqrt(norm2_val) / (h * h));
  }
  CHECK(worst < 1.0);  // measured: ~0.05 for this family
}

TEST_CASE("manufactured biharmonic solution converges") {
  // the sin^2 target needs two initial halvings to reach the asymptotic range
  Triangulation mesh = uniform2(uniform2(Triangulation::criss_cross_square()));
  const SourceTerm f =
      SourceTerm::callback([](Vec2 p) { return cli::Manufactured::morley_f(p.x, p.y); });
  const TriangleQuadrature quad(8);
  std::vector<double> errors;
  for (int level = 0; level < 2; ++level) {
    const MorleySpace space(mesh);
    const MorleyFunction u = solve_biharmonic(space, f);
    double err2 = 0.0;
    for (int t = 0; t < mesh.n_triangles(); ++t) {
      const Sym2 hh = u.hessian(t);
      err2 += quad.integrate(mesh.geometry(t), [&](Vec2 p) {
        double uxx, uxy, uyy;
        cli::Manufactured::morley_hessian(p.x, p.y, &uxx, &uxy, &uyy);
        return (Sym2{uxx, uxy, uyy} - hh).frobenius2();
      });
    }
    errors.push_back(std::sqrt(err2));
    if (level < 1) mesh = uniform2(mesh);
  }
  const double ratio = errors[0] / errors[1];
  CHECK(ratio >= 1.6);
  CHECK(ratio <= 2.4);
}

TEST_SUITE_END();
