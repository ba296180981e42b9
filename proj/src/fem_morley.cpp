#include "ncfem/fem_morley.hpp"

#include <algorithm>
#include <cmath>

namespace ncfem {

namespace {

std::array<BaryPoly, 6> quadratic_monomials(const Triangle& geo) {
  const BaryPoly l1 = BaryPoly::barycentric(geo, 0);
  const BaryPoly l2 = BaryPoly::barycentric(geo, 1);
  const BaryPoly l3 = BaryPoly::barycentric(geo, 2);
  return {l1 * l1, l2 * l2, l3 * l3, l1 * l2, l1 * l3, l2 * l3};
}

Sym2 poly_hessian(const BaryPoly& p) {
  // valid for degree <= 2: the Hessian is constant
  auto [gx, gy] = p.gradient();
  auto [gxx, gxy] = gx.gradient();
  auto [gyx, gyy] = gy.gradient();
  (void)gyx;
  return Sym2{gxx.eval_bary(1, 0, 0), gxy.eval_bary(1, 0, 0), gyy.eval_bary(1, 0, 0)};
}

double sym_dot(const Sym2& a, const Sym2& b) {
  return a.xx * b.xx + 2.0 * a.xy * b.xy + a.yy * b.yy;
}

}  // namespace

MorleySpace::MorleySpace(const Triangulation& mesh, bool constrained) : mesh_(&mesh) {
  vertex_dof_.assign(mesh.n_vertices(), -1);
  edge_dof_.assign(mesh.n_edges(), -1);
  for (int z = 0; z < mesh.n_vertices(); ++z)
    if (!constrained || !mesh.boundary_vertex(z)) vertex_dof_[z] = n_dofs_++;
  for (int e = 0; e < mesh.n_edges(); ++e)
    if (!constrained || !mesh.edge(e).boundary) edge_dof_[e] = n_dofs_++;

  const int nt = mesh.n_triangles();
  basis_.resize(nt);
  hess_.resize(nt);
  parallel_for(nt, [&](int t) {
    const Triangle geo = mesh.geometry(t);
    const auto mono = quadratic_monomials(geo);
    Mat d(6, 6);
    for (int k = 0; k < 6; ++k) {
      auto [gx, gy] = mono[k].gradient();
      for (int i = 0; i < 3; ++i) {
        double l[3] = {0, 0, 0};
        l[i] = 1.0;
        d(i, k) = mono[k].eval_bary(l[0], l[1], l[2]);
      }
      for (int e = 0; e < 3; ++e) {
        const MeshEdge& me = mesh.edge(mesh.tri(t).edge[e]);
        double l[3] = {0.5, 0.5, 0.5};
        l[e] = 0.0;  // midpoint of the edge opposite vertex e
        const Vec2 g{gx.eval_bary(l[0], l[1], l[2]), gy.eval_bary(l[0], l[1], l[2])};
        d(3 + e, k) = g.dot(me.normal);
      }
    }
    for (int j = 0; j < 6; ++j) {
      std::vector<double> rhs(6, 0.0);
      rhs[j] = 1.0;
      const std::vector<double> c = solve_lu(d, rhs);
      BaryPoly b(geo, 2);
      for (int k = 0; k < 6; ++k) b += mono[k] * c[k];
      basis_[t][j] = b;
      hess_[t][j] = poly_hessian(b);
    }
  });
}

double MorleyFunction::vertex_value(int z) const {
  const int d = space->dof_of_vertex(z);
  return d < 0 ? 0.0 : coeff[d];
}

double MorleyFunction::edge_normal_value(int e) const {
  const int d = space->dof_of_edge(e);
  return d < 0 ? 0.0 : coeff[d];
}

double MorleyFunction::local_dof(int t, int i) const {
  const auto& tr = space->mesh().tri(t);
  return i < 3 ? vertex_value(tr.v[i]) : edge_normal_value(tr.edge[i - 3]);
}

double MorleyFunction::eval(int t, Vec2 p) const {
  double s = 0.0;
  for (int i = 0; i < 6; ++i) {
    const double c = local_dof(t, i);
    if (c != 0.0) s += c * space->local_basis(t)[i].eval(p);
  }
  return s;
}

Vec2 MorleyFunction::gradient(int t, Vec2 p) const {
  Vec2 s{0, 0};
  for (int i = 0; i < 6; ++i) {
    const double c = local_dof(t, i);
    if (c == 0.0) continue;
    auto [gx, gy] = space->local_basis(t)[i].gradient();
    s += Vec2{gx.eval(p), gy.eval(p)} * c;
  }
  return s;
}

Sym2 MorleyFunction::hessian(int t) const {
  Sym2 s;
  for (int i = 0; i < 6; ++i) {
    const double c = local_dof(t, i);
    if (c != 0.0) s = s + space->local_hessians(t)[i] * c;
  }
  return s;
}

BaryPoly MorleyFunction::local_poly(int t) const {
  BaryPoly p(space->mesh().geometry(t), 2);
  for (int i = 0; i < 6; ++i) {
    const double c = local_dof(t, i);
    if (c != 0.0) p += space->local_basis(t)[i] * c;
  }
  return p;
}

MorleySystem assemble_biharmonic(const MorleySpace& space, const SourceTerm& f) {
  const Triangulation& mesh = space.mesh();
  const int nt = mesh.n_triangles();
  std::vector<std::array<double, 36>> elem(nt);
  std::vector<std::array<double, 6>> load(nt);
  parallel_for(nt, [&](int t) {
    const double area = mesh.tri(t).area;
    const auto& h = space.local_hessians(t);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) elem[t][6 * i + j] = area * sym_dot(h[i], h[j]);
    for (int i = 0; i < 6; ++i)
      load[t][i] = f.is_zero() ? 0.0 : f.integrate_against(mesh, t, space.local_basis(t)[i]);
  });
  std::vector<std::array<int, 2>> idx;
  std::vector<double> val;
  MorleySystem sys;
  sys.load.assign(space.n_dofs(), 0.0);
  for (int t = 0; t < nt; ++t) {
    int dof[6];
    for (int i = 0; i < 3; ++i) dof[i] = space.dof_of_vertex(mesh.tri(t).v[i]);
    for (int e = 0; e < 3; ++e) dof[3 + e] = space.dof_of_edge(mesh.tri(t).edge[e]);
    for (int i = 0; i < 6; ++i) {
      if (dof[i] < 0) continue;
      sys.load[dof[i]] += load[t][i];
      for (int j = 0; j < 6; ++j) {
        if (dof[j] < 0) continue;
        idx.push_back({dof[i], dof[j]});
        val.push_back(elem[t][6 * i + j]);
      }
    }
  }
  sys.stiffness = SparseMatrix::from_triplets(space.n_dofs(), std::move(idx), std::move(val));
  return sys;
}

MorleyFunction solve_biharmonic(const MorleySpace& space, const SourceTerm& f,
                                const SolverOptions& opts) {
  MorleySystem sys = assemble_biharmonic(space, f);
  MorleyFunction u;
  u.space = &space;
  const int max_iter = std::max(100, opts.max_iter_per_dof * space.n_dofs());
  const CgResult res = pcg_solve(sys.stiffness, sys.load, u.coeff, opts.rel_tol, max_iter);
  if (!res.converged)
    throw std::runtime_error("solve_biharmonic: CG stalled after " +
                             std::to_string(res.iterations) + " iterations, relative residual " +
                             std::to_string(res.relative_residual));
  return u;
}

MorleyFunction interpolate_morley(const MorleySpace& target,
                                  const std::function<double(Vec2)>& v,
                                  const std::function<Vec2(Vec2)>& grad_v, int gauss_points) {
  const Triangulation& mesh = target.mesh();
  const GaussRule& g = gauss_rule(gauss_points);
  MorleyFunction out;
  out.space = &target;
  out.coeff.assign(target.n_dofs(), 0.0);
  for (int z = 0; z < mesh.n_vertices(); ++z) {
    const int d = target.dof_of_vertex(z);
    if (d >= 0) out.coeff[d] = v(mesh.vertex(z));
  }
  for (int e = 0; e < mesh.n_edges(); ++e) {
    const int d = target.dof_of_edge(e);
    if (d < 0) continue;
    const MeshEdge& me = mesh.edge(e);
    const Vec2 a = mesh.vertex(me.v[0]);
    const Vec2 b = mesh.vertex(me.v[1]);
    double mean = 0.0;
    for (int k = 0; k < gauss_points; ++k)
      mean += g.weight[k] * grad_v(a + (b - a) * g.node[k]).dot(me.normal);
    out.coeff[d] = mean;
  }
  return out;
}

MorleyFunction interpolate_morley(const MorleySpace& target, const MorleyFunction& fine_v,
                                  const RefinementPair& pair) {
  const Triangulation& coarse = *pair.coarse;
  const Triangulation& fine = *pair.fine;
  if (&target.mesh() != pair.coarse)
    throw std::invalid_argument("interpolate_morley: target space does not live on pair.coarse");
  MorleyFunction out;
  out.space = &target;
  out.coeff.assign(target.n_dofs(), 0.0);
  // coarse vertices keep their ids in the fine mesh
  for (int z = 0; z < coarse.n_vertices(); ++z) {
    const int d = target.dof_of_vertex(z);
    if (d >= 0) out.coeff[d] = fine_v.vertex_value(z);
  }
  for (int e = 0; e < coarse.n_edges(); ++e) {
    const int d = target.dof_of_edge(e);
    if (d < 0) continue;
    const MeshEdge& me = coarse.edge(e);
    const Vec2 a = coarse.vertex(me.v[0]);
    const Vec2 b = coarse.vertex(me.v[1]);
    const double ab2 = (b - a).dot(b - a);
    // int_E dv/dnu_E = sum over fine sub-edges of |e^| * (DOF value), with the
    // sign of nu_E against the fine edge normal
    double acc = 0.0, len = 0.0;
    for (int ft : pair.children[me.tri[0]]) {
      for (int k = 0; k < 3; ++k) {
        const int feid = fine.tri(ft).edge[k];
        const MeshEdge& fe = fine.edge(feid);
        auto on_segment = [&](Vec2 x) {
          if (std::fabs((x - a).cross(b - a)) > 1e-9 * ab2) return false;
          const double s = (x - a).dot(b - a) / ab2;
          return s >= -1e-9 && s <= 1.0 + 1e-9;
        };
        if (!on_segment(fine.vertex(fe.v[0])) || !on_segment(fine.vertex(fe.v[1]))) continue;
        const double sign = fe.normal.dot(me.normal) > 0.0 ? 1.0 : -1.0;
        acc += fe.length * sign * fine_v.edge_normal_value(feid);
        len += fe.length;
      }
    }
    if (std::fabs(len - me.length) > 1e-9 * me.length)
      throw std::runtime_error("interpolate_morley: fine edges do not cover the coarse edge");
    out.coeff[d] = acc / me.length;
  }
  return out;
}

double energy_norm_diff_morley(const RefinementPair& pair, const MorleyFunction& coarse_u,
                               const MorleyFunction& fine_u) {
  const Triangulation& fine = *pair.fine;
  double s = 0.0;
  for (int t = 0; t < fine.n_triangles(); ++t) {
    const Sym2 d = fine_u.hessian(t) - coarse_u.hessian(pair.ancestor[t]);
    s += fine.tri(t).area * d.frobenius2();
  }
  return std::sqrt(s);
}

double energy_norm_morley(const MorleyFunction& u) {
  const Triangulation& mesh = u.space->mesh();
  double s = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t)
    s += mesh.tri(t).area * u.hessian(t).frobenius2();
  return std::sqrt(s);
}

Triangle hct_subtriangle(const Triangulation& mesh, int t, int s) {
  const auto& tr = mesh.tri(t);
  const Vec2 center = mesh.geometry(t).centroid();
  return Triangle{{center, mesh.vertex(tr.v[(s + 1) % 3]), mesh.vertex(tr.v[(s + 2) % 3])}};
}

int hct_locate_subtriangle(const Triangulation& mesh, int t, Vec2 p) {
  int best = 0;
  double best_min = -1e300;
  for (int s = 0; s < 3; ++s) {
    const auto l = hct_subtriangle(mesh, t, s).bary_coords(p);
    const double m = std::min({l[0], l[1], l[2]});
    if (m > best_min) {
      best_min = m;
      best = s;
    }
  }
  return best;
}

BaryPoly morley_edge_bubble(const Triangulation& mesh, int t, int e) {
  const Triangle geo = mesh.geometry(t);
  const MeshEdge& me = mesh.edge(mesh.tri(t).edge[e]);
  const double sigma = (me.tri[0] == t) ? 1.0 : -1.0;  // nu_K . nu_E
  const double d3 = 2.0 * geo.area() / me.length;      // height of the opposite vertex
  BaryPoly b(geo, 5);
  // -30 sigma d3 * la^2 lb^2 lc with (a,b) the edge endpoints, c opposite;
  // the sign makes the edge mean of d/d nu_E equal to +1
  int exps[3] = {0, 0, 0};
  exps[(e + 1) % 3] = 2;
  exps[(e + 2) % 3] = 2;
  exps[e] = 1;
  b.at(exps[0], exps[1], exps[2]) = -30.0 * sigma * d3;
  return b;
}

HctPiece hct_solve_local(const Triangulation& mesh, int t, const HctDofs& dofs) {
  const Triangle geo = mesh.geometry(t);
  const double h = geo.diameter();
  const Vec2 center = geo.centroid();

  // cubic monomial bases and their gradients per subtriangle
  std::array<Triangle, 3> sub;
  std::array<std::vector<BaryPoly>, 3> mono;
  std::array<std::vector<std::pair<BaryPoly, BaryPoly>>, 3> grad;
  for (int s = 0; s < 3; ++s) {
    sub[s] = hct_subtriangle(mesh, t, s);
    for (int b = 0; b <= 3; ++b)
      for (int c = 0; c <= 3 - b; ++c) {
        BaryPoly m(sub[s], 3);
        m.at(3 - b - c, b, c) = 1.0;
        mono[s].push_back(m);
        grad[s].push_back(m.gradient());
      }
  }
  const int terms = static_cast<int>(mono[0].size());  // 10

  const int n_rows = 12 + 21;
  Mat a(n_rows, 30);
  std::vector<double> rhs(n_rows, 0.0);
  int row = 0;
  auto value_row = [&](int s, Vec2 p, double w, int r) {
    for (int k = 0; k < terms; ++k) a(r, s * terms + k) += w * mono[s][k].eval(p);
  };
  auto grad_row = [&](int s, Vec2 p, Vec2 dir, double w, int r) {
    for (int k = 0; k < terms; ++k)
      a(r, s * terms + k) +=
          w * (grad[s][k].first.eval(p) * dir.x + grad[s][k].second.eval(p) * dir.y);
  };

  // 12 DOF rows; vertex i is handled on subtriangle (i+1)%3, gradient rows
  // scaled by h for conditioning
  for (int i = 0; i < 3; ++i) {
    const Vec2 p = geo.v[i];
    const int s = (i + 1) % 3;
    value_row(s, p, 1.0, row);
    rhs[row++] = dofs.value[i];
    grad_row(s, p, Vec2{h, 0.0}, 1.0, row);
    rhs[row++] = h * dofs.grad[i].x;
    grad_row(s, p, Vec2{0.0, h}, 1.0, row);
    rhs[row++] = h * dofs.grad[i].y;
  }
  for (int e = 0; e < 3; ++e) {
    const MeshEdge& me = mesh.edge(mesh.tri(t).edge[e]);
    const Vec2 p = (geo.v[(e + 1) % 3] + geo.v[(e + 2) % 3]) * 0.5;
    grad_row(e, p, me.normal * h, 1.0, row);
    rhs[row++] = h * dofs.normal_deriv[e];
  }

  // C0 (4 points) and C1 (3 normal-derivative points) along each internal
  // edge [v_i, center], shared by subtriangles (i+1)%3 and (i+2)%3
  for (int i = 0; i < 3; ++i) {
    const int sa = (i + 1) % 3;
    const int sb = (i + 2) % 3;
    const Vec2 p0 = geo.v[i];
    const Vec2 p1 = center;
    Vec2 tang = (p1 - p0);
    tang = tang / tang.norm();
    const Vec2 nrm{-tang.y, tang.x};
    for (int q = 0; q < 4; ++q) {
      const Vec2 p = p0 + (p1 - p0) * (q / 3.0);
      value_row(sa, p, 1.0, row);
      value_row(sb, p, -1.0, row);
      ++row;
    }
    for (int q = 0; q < 3; ++q) {
      const Vec2 p = p0 + (p1 - p0) * ((2.0 * q + 1.0) / 6.0);
      grad_row(sa, p, nrm * h, 1.0, row);
      grad_row(sb, p, nrm * h, -1.0, row);
      ++row;
    }
  }

  const std::vector<double> x = solve_least_squares(a, rhs);
  HctPiece piece;
  for (int s = 0; s < 3; ++s) {
    BaryPoly p(sub[s], 3);
    for (int k = 0; k < terms; ++k) p += mono[s][k] * x[s * terms + k];
    piece.cubic[s] = p;
  }
  return piece;
}

double HctFunction::eval(int t, Vec2 p) const {
  const int s = hct_locate_subtriangle(*mesh_, t, p);
  double v = pieces_[t].cubic[s].eval(p);
  for (int e = 0; e < 3; ++e)
    if (pieces_[t].bubble[e] != 0.0)
      v += pieces_[t].bubble[e] * morley_edge_bubble(*mesh_, t, e).eval(p);
  return v;
}

Vec2 HctFunction::gradient(int t, Vec2 p) const {
  const int s = hct_locate_subtriangle(*mesh_, t, p);
  auto [gx, gy] = pieces_[t].cubic[s].gradient();
  Vec2 g{gx.eval(p), gy.eval(p)};
  for (int e = 0; e < 3; ++e)
    if (pieces_[t].bubble[e] != 0.0) {
      auto [bx, by] = morley_edge_bubble(*mesh_, t, e).gradient();
      g += Vec2{bx.eval(p), by.eval(p)} * pieces_[t].bubble[e];
    }
  return g;
}

double HctFunction::edge_normal_mean(int t, int e) const {
  const MeshEdge& me = mesh_->edge(mesh_->tri(t).edge[e]);
  // the subtriangle adjacent to local edge e has that edge between its local
  // vertices 1 and 2
  auto [gx, gy] = pieces_[t].cubic[e].gradient();
  const BaryPoly gn = gx * me.normal.x + gy * me.normal.y;
  double mean = integrate_edge(restrict_to_edge(gn, 1, 2)) / me.length;
  for (int k = 0; k < 3; ++k) {
    if (pieces_[t].bubble[k] == 0.0) continue;
    // bubble normal-derivative means are delta_{ke} by construction
    if (k == e) mean += pieces_[t].bubble[k];
  }
  return mean;
}

HctFunction hct_interpolate(const Triangulation& mesh, const std::vector<double>& values,
                            const std::vector<Vec2>& gradients,
                            const std::vector<double>& normal_derivs) {
  std::vector<HctPiece> pieces(mesh.n_triangles());
  std::vector<int> ids(mesh.n_triangles());
  parallel_for(mesh.n_triangles(), [&](int t) {
    HctDofs dofs;
    for (int i = 0; i < 3; ++i) {
      dofs.value[i] = values[mesh.tri(t).v[i]];
      dofs.grad[i] = gradients[mesh.tri(t).v[i]];
    }
    for (int e = 0; e < 3; ++e) dofs.normal_deriv[e] = normal_derivs[mesh.tri(t).edge[e]];
    pieces[t] = hct_solve_local(mesh, t, dofs);
  });
  return HctFunction(mesh, std::move(pieces));
}

}  // namespace ncfem
