#include "ncfem/companion.hpp"

#include <algorithm>
#include <cmath>

namespace ncfem {

CompanionConfig CompanionConfig::all(const Triangulation& mesh, Family family) {
  CompanionConfig c;
  c.family = family;
  c.mesh = &mesh;
  c.fprime.assign(mesh.n_edges(), 1);
  return c;
}

CompanionConfig CompanionConfig::none(const Triangulation& mesh, Family family) {
  CompanionConfig c;
  c.family = family;
  c.mesh = &mesh;
  c.fprime.assign(mesh.n_edges(), 0);
  return c;
}

CompanionConfig CompanionConfig::refined(const RefinementPair& pair, Family family) {
  CompanionConfig c;
  c.family = family;
  c.mesh = pair.coarse;
  c.fprime = pair.edge_refined;
  return c;
}

namespace {

// The zero rule fires at (K,z) when the side-connectivity component T(K,z)
// contains a triangle with a boundary side of F' through z.  A component-wide
// rule keeps the companion single-valued along F' while triangles whose
// component never reaches the boundary stay untouched.
bool boundary_zero_fires(const Triangulation& mesh, const std::vector<char>& fprime, int z,
                         const SideConnectivity& sc) {
  for (int t : sc.tris)
    for (int e = 0; e < 3; ++e) {
      const int eid = mesh.tri(t).edge[e];
      const MeshEdge& me = mesh.edge(eid);
      if (me.boundary && fprime[eid] && (me.v[0] == z || me.v[1] == z)) return true;
    }
  return false;
}

double cr_vertex_value(const CrFunction& u, int t, int local) {
  const auto& mesh = u.space->mesh();
  double c[3];
  for (int e = 0; e < 3; ++e) c[e] = u.edge_value(mesh.tri(t).edge[e]);
  return c[(local + 1) % 3] + c[(local + 2) % 3] - c[local];
}

}  // namespace

CrCompanion cr_j1(const CrFunction& u, const CompanionConfig& config) {
  const Triangulation& mesh = u.space->mesh();
  if (config.mesh != &mesh) throw std::invalid_argument("cr_j1: config mesh mismatch");
  if (config.family != Family::CR) throw std::invalid_argument("cr_j1: config family mismatch");
  CrCompanion out;
  out.mesh = &mesh;
  out.piece.resize(mesh.n_triangles());
  out.j1_value.resize(mesh.n_triangles());
  out.patch_size.resize(mesh.n_triangles());
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    std::array<double, 3> val{};
    for (int i = 0; i < 3; ++i) {
      const int z = mesh.tri(k).v[i];
      const SideConnectivity sc = side_connectivity(mesh, k, z, config.fprime);
      out.patch_size[k][i] = static_cast<int>(sc.tris.size());
      if (boundary_zero_fires(mesh, config.fprime, z, sc)) {
        val[i] = 0.0;
        continue;
      }
      double s = 0.0;
      for (int t : sc.tris) s += cr_vertex_value(u, t, mesh.local_vertex(t, z));
      val[i] = s / static_cast<double>(sc.tris.size());
    }
    out.j1_value[k] = val;
    out.piece[k] =
        BaryPoly::affine_from_vertex_values(mesh.geometry(k), val[0], val[1], val[2]);
  }
  return out;
}

CrCompanion cr_jn(const CrFunction& u, const CompanionConfig& config) {
  const Triangulation& mesh = u.space->mesh();
  CrCompanion out = cr_j1(u, config);
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    const Triangle geo = mesh.geometry(k);
    BaryPoly p = out.piece[k];
    for (int e = 0; e < 3; ++e) {
      // affine means over the edge are endpoint averages
      const int a = (e + 1) % 3;
      const int b = (e + 2) % 3;
      const double u_mean = u.edge_value(mesh.tri(k).edge[e]);
      const double j1_mean = 0.5 * (out.j1_value[k][a] + out.j1_value[k][b]);
      const double coef = u_mean - j1_mean;
      if (coef == 0.0) continue;
      // normalized side bubble restricted to K: 6 la lb
      BaryPoly bubble(geo, 2);
      int exps[3] = {0, 0, 0};
      exps[a] = 1;
      exps[b] = 1;
      bubble.at(exps[0], exps[1], exps[2]) = 6.0;
      p += bubble * coef;
    }
    out.piece[k] = p;
  }
  return out;
}

Vec2 CrCompanion::gradient(int t, Vec2 p) const {
  auto [gx, gy] = piece[t].gradient();
  return {gx.eval(p), gy.eval(p)};
}

double CrCompanion::edge_mean(int t, int e) const {
  const EdgePoly tr = restrict_to_edge(piece[t], (e + 1) % 3, (e + 2) % 3);
  return integrate_edge(tr) / tr.length;
}

MorleyCompanion morley_j1(const MorleyFunction& u, const CompanionConfig& config,
                          bool zero_boundary_rule) {
  const Triangulation& mesh = u.space->mesh();
  if (config.mesh != &mesh) throw std::invalid_argument("morley_j1: config mesh mismatch");
  if (config.family != Family::Morley)
    throw std::invalid_argument("morley_j1: config family mismatch");
  std::vector<HctPiece> pieces(mesh.n_triangles());
  std::vector<std::array<Vec2, 3>> grads(mesh.n_triangles());
  std::vector<std::array<int, 3>> sizes(mesh.n_triangles());
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    HctDofs dofs;
    for (int i = 0; i < 3; ++i) {
      const int z = mesh.tri(k).v[i];
      dofs.value[i] = u.vertex_value(z);
      const SideConnectivity sc = side_connectivity(mesh, k, z, config.fprime);
      sizes[k][i] = static_cast<int>(sc.tris.size());
      if (zero_boundary_rule && boundary_zero_fires(mesh, config.fprime, z, sc)) {
        dofs.grad[i] = Vec2{0.0, 0.0};
      } else {
        Vec2 s{0, 0};
        for (int t : sc.tris) s += u.gradient(t, mesh.vertex(z));
        dofs.grad[i] = s / static_cast<double>(sc.tris.size());
      }
    }
    for (int e = 0; e < 3; ++e) dofs.normal_deriv[e] = u.edge_normal_value(mesh.tri(k).edge[e]);
    pieces[k] = hct_solve_local(mesh, k, dofs);
    grads[k] = dofs.grad;
  }
  return MorleyCompanion{HctFunction(mesh, std::move(pieces)), std::move(grads),
                         std::move(sizes)};
}

MorleyCompanion morley_j2(const MorleyFunction& u, const CompanionConfig& config,
                          bool zero_boundary_rule) {
  const Triangulation& mesh = u.space->mesh();
  MorleyCompanion out = morley_j1(u, config, zero_boundary_rule);
  for (int k = 0; k < mesh.n_triangles(); ++k) {
    for (int e = 0; e < 3; ++e) {
      const double u_mean = u.edge_normal_value(mesh.tri(k).edge[e]);
      const double j1_mean = out.fn.edge_normal_mean(k, e);
      out.fn.piece(k).bubble[e] = u_mean - j1_mean;
    }
  }
  return out;
}

namespace {

double segment_mean(const BaryPoly& p, Vec2 a, Vec2 b) {
  const int pts = p.degree() / 2 + 1;
  const GaussRule& g = gauss_rule(pts);
  double s = 0.0;
  for (int i = 0; i < pts; ++i) s += g.weight[i] * p.eval(a + (b - a) * g.node[i]);
  return s;
}

}  // namespace

CrFunction transfer_cr(const CrFunction& u, const RefinementPair& pair,
                       const CrSpace& fine_space, double tol) {
  const Triangulation& fine = *pair.fine;
  if (&fine_space.mesh() != pair.fine)
    throw std::invalid_argument("transfer_cr: fine space does not live on pair.fine");
  if (&u.space->mesh() != pair.coarse)
    throw std::invalid_argument("transfer_cr: u does not live on pair.coarse");
  const CrCompanion jn = cr_jn(u, CompanionConfig::refined(pair, Family::CR));
  double scale = 1.0;
  for (double c : u.coeff) scale = std::max(scale, std::fabs(c));
  CrFunction out;
  out.space = &fine_space;
  out.coeff.assign(fine_space.n_dofs(), 0.0);
  for (int e = 0; e < fine.n_edges(); ++e) {
    const MeshEdge& fe = fine.edge(e);
    const Vec2 a = fine.vertex(fe.v[0]);
    const Vec2 b = fine.vertex(fe.v[1]);
    const double m0 = segment_mean(jn.piece[pair.ancestor[fe.tri[0]]], a, b);
    if (fe.boundary) {
      if (std::fabs(m0) > tol * scale)
        throw std::runtime_error("transfer_cr: companion mean does not vanish on the boundary");
      continue;
    }
    const double m1 = segment_mean(jn.piece[pair.ancestor[fe.tri[1]]], a, b);
    if (std::fabs(m0 - m1) > tol * scale)
      throw std::runtime_error("transfer_cr: companion mean jumps across a fine edge");
    out.coeff[fine_space.dof_of_edge(e)] = 0.5 * (m0 + m1);
  }
  return out;
}

double hct_segment_normal_mean(const HctFunction& f, int t, Vec2 a, Vec2 b, Vec2 nu) {
  const Triangulation& mesh = f.mesh();
  const Vec2 center = mesh.geometry(t).centroid();
  // clip against the three internal rays [center, v_i]
  std::vector<double> cuts{0.0, 1.0};
  for (int i = 0; i < 3; ++i) {
    const Vec2 p = center;
    const Vec2 q = mesh.vertex(mesh.tri(t).v[i]);
    const Vec2 d1 = b - a;
    const Vec2 d2 = q - p;
    const double det = d1.cross(d2);
    if (std::fabs(det) < 1e-14 * d1.norm() * d2.norm()) continue;
    const double s = (p - a).cross(d2) / det;
    const double r = (p - a).cross(d1) / det;
    if (s > 1e-12 && s < 1.0 - 1e-12 && r > -1e-9 && r < 1.0 + 1e-9) cuts.push_back(s);
  }
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  const GaussRule& g = gauss_rule(3);  // gradient pieces have degree <= 4 along a line
  for (size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
    const double s0 = cuts[seg];
    const double s1 = cuts[seg + 1];
    if (s1 - s0 < 1e-13) continue;
    const Vec2 pa = a + (b - a) * s0;
    const Vec2 pb = a + (b - a) * s1;
    double part = 0.0;
    for (size_t k = 0; k < g.node.size(); ++k)
      part += g.weight[k] * f.gradient(t, pa + (pb - pa) * g.node[k]).dot(nu);
    acc += part * (s1 - s0);
  }
  return acc;
}

MorleyFunction transfer_morley(const MorleyFunction& u, const RefinementPair& pair,
                               const MorleySpace& fine_space, double tol) {
  const Triangulation& fine = *pair.fine;
  if (&fine_space.mesh() != pair.fine)
    throw std::invalid_argument("transfer_morley: fine space does not live on pair.fine");
  if (&u.space->mesh() != pair.coarse)
    throw std::invalid_argument("transfer_morley: u does not live on pair.coarse");
  const MorleyCompanion j2 = morley_j2(u, CompanionConfig::refined(pair, Family::Morley));
  double scale = 1.0;
  for (double c : u.coeff) scale = std::max(scale, std::fabs(c));

  MorleyFunction out;
  out.space = &fine_space;
  out.coeff.assign(fine_space.n_dofs(), 0.0);

  // fine vertex values: evaluate the companion from every incident ancestor
  std::vector<std::vector<int>> anc_of_vertex(fine.n_vertices());
  for (int t = 0; t < fine.n_triangles(); ++t)
    for (int i = 0; i < 3; ++i) {
      auto& list = anc_of_vertex[fine.tri(t).v[i]];
      if (std::find(list.begin(), list.end(), pair.ancestor[t]) == list.end())
        list.push_back(pair.ancestor[t]);
    }
  for (int z = 0; z < fine.n_vertices(); ++z) {
    const Vec2 p = fine.vertex(z);
    double v0 = 0.0;
    bool first = true;
    for (int anc : anc_of_vertex[z]) {
      const double v = j2.eval(anc, p);
      if (first) {
        v0 = v;
        first = false;
      } else if (std::fabs(v - v0) > tol * scale) {
        throw std::runtime_error("transfer_morley: companion value jumps at a fine vertex");
      }
    }
    const int d = fine_space.dof_of_vertex(z);
    if (d >= 0)
      out.coeff[d] = v0;
    else if (std::fabs(v0) > tol * scale)
      throw std::runtime_error("transfer_morley: companion does not vanish at a boundary vertex");
  }
  for (int e = 0; e < fine.n_edges(); ++e) {
    const MeshEdge& fe = fine.edge(e);
    const Vec2 a = fine.vertex(fe.v[0]);
    const Vec2 b = fine.vertex(fe.v[1]);
    const double m0 = hct_segment_normal_mean(j2.fn, pair.ancestor[fe.tri[0]], a, b, fe.normal);
    const int d = fine_space.dof_of_edge(e);
    if (fe.boundary) {
      if (std::fabs(m0) > tol * scale)
        throw std::runtime_error(
            "transfer_morley: companion normal derivative does not vanish on the boundary");
      continue;
    }
    const double m1 = hct_segment_normal_mean(j2.fn, pair.ancestor[fe.tri[1]], a, b, fe.normal);
    if (std::fabs(m0 - m1) > tol * scale)
      throw std::runtime_error(
          "transfer_morley: companion normal-derivative mean jumps across a fine edge");
    out.coeff[d] = 0.5 * (m0 + m1);
  }
  return out;
}

double cr_companion_max_jump(const CrCompanion& c, const std::vector<char>& fprime, int probes) {
  const Triangulation& mesh = *c.mesh;
  double worst = 0.0;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (!fprime[e]) continue;
    const MeshEdge& me = mesh.edge(e);
    const Vec2 a = mesh.vertex(me.v[0]);
    const Vec2 b = mesh.vertex(me.v[1]);
    for (int q = 0; q < probes; ++q) {
      const Vec2 p = a + (b - a) * ((q + 0.5) / probes);
      const double plus = c.eval(me.tri[0], p);
      const double minus = me.boundary ? 0.0 : c.eval(me.tri[1], p);
      worst = std::max(worst, std::fabs(plus - minus));
    }
  }
  return worst;
}

MorleyJumps morley_companion_max_jump(const MorleyCompanion& c, const std::vector<char>& fprime,
                                      int probes) {
  const Triangulation& mesh = c.fn.mesh();
  MorleyJumps worst;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (!fprime[e]) continue;
    const MeshEdge& me = mesh.edge(e);
    const Vec2 a = mesh.vertex(me.v[0]);
    const Vec2 b = mesh.vertex(me.v[1]);
    for (int q = 0; q < probes; ++q) {
      const Vec2 p = a + (b - a) * ((q + 0.5) / probes);
      const double vp = c.eval(me.tri[0], p);
      const Vec2 gp = c.gradient(me.tri[0], p);
      const double vm = me.boundary ? 0.0 : c.eval(me.tri[1], p);
      const Vec2 gm = me.boundary ? Vec2{0, 0} : c.gradient(me.tri[1], p);
      worst.value = std::max(worst.value, std::fabs(vp - vm));
      worst.gradient = std::max(worst.gradient, (gp - gm).norm());
    }
  }
  return worst;
}

}  // namespace ncfem
