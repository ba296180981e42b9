#include "ncfem/fem_cr.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ncfem {

SourceTerm SourceTerm::constant(double c) {
  SourceTerm s;
  s.kind_ = Kind::Constant;
  s.c_ = c;
  return s;
}

SourceTerm SourceTerm::callback(std::function<double(Vec2)> f, int quad_degree) {
  SourceTerm s;
  s.kind_ = Kind::Callback;
  s.f_ = std::move(f);
  s.quad_degree_ = quad_degree;
  return s;
}

SourceTerm SourceTerm::piecewise(std::vector<BaryPoly> pw) {
  SourceTerm s;
  s.kind_ = Kind::Piecewise;
  s.pw_ = std::move(pw);
  return s;
}

double SourceTerm::integrate_against(const Triangulation& mesh, int t,
                                     const BaryPoly& test) const {
  switch (kind_) {
    case Kind::Constant:
      if (c_ == 0.0) return 0.0;
      return c_ * integrate_triangle(test, mesh.tri(t).area);
    case Kind::Piecewise:
      return integrate_triangle(pw_[t] * test, mesh.tri(t).area);
    case Kind::Callback: {
      const TriangleQuadrature quad(quad_degree_ + test.degree());
      return quad.integrate(mesh.geometry(t), [&](Vec2 p) { return f_(p) * test.eval(p); });
    }
  }
  return 0.0;
}

double SourceTerm::l2_norm2(const Triangulation& mesh, int t) const {
  switch (kind_) {
    case Kind::Constant:
      return c_ * c_ * mesh.tri(t).area;
    case Kind::Piecewise:
      return integrate_triangle(pw_[t] * pw_[t], mesh.tri(t).area);
    case Kind::Callback: {
      const TriangleQuadrature quad(2 * quad_degree_);
      return quad.integrate(mesh.geometry(t), [&](Vec2 p) {
        const double v = f_(p);
        return v * v;
      });
    }
  }
  return 0.0;
}

CrSpace::CrSpace(const Triangulation& mesh, bool constrained) : mesh_(&mesh) {
  edge_dof_.assign(mesh.n_edges(), -1);
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (constrained && mesh.edge(e).boundary) continue;
    edge_dof_[e] = n_dofs_++;
    dof_edge_.push_back(e);
  }
}

double CrFunction::edge_value(int e) const {
  const int d = space->dof_of_edge(e);
  return d < 0 ? 0.0 : coeff[d];
}

double CrFunction::eval(int t, Vec2 p) const {
  const auto& mesh = space->mesh();
  const auto l = mesh.geometry(t).bary_coords(p);
  double s = 0.0;
  for (int e = 0; e < 3; ++e)
    s += edge_value(mesh.tri(t).edge[e]) * (1.0 - 2.0 * l[e]);
  return s;
}

Vec2 CrFunction::gradient(int t) const {
  const auto& mesh = space->mesh();
  const auto g = mesh.geometry(t).bary_gradients();
  Vec2 s{0.0, 0.0};
  for (int e = 0; e < 3; ++e) s += g[e] * (-2.0 * edge_value(mesh.tri(t).edge[e]));
  return s;
}

BaryPoly CrFunction::local_poly(int t) const {
  const auto& mesh = space->mesh();
  const Triangle geo = mesh.geometry(t);
  // psi_F = 1 - 2 lambda_opp, so the nodal values are c_j + c_k - c_i
  double c[3];
  for (int e = 0; e < 3; ++e) c[e] = edge_value(mesh.tri(t).edge[e]);
  return BaryPoly::affine_from_vertex_values(geo, c[1] + c[2] - c[0], c[0] + c[2] - c[1],
                                             c[0] + c[1] - c[2]);
}

CrSystem assemble_poisson(const CrSpace& space, const SourceTerm& f) {
  const Triangulation& mesh = space.mesh();
  const int nt = mesh.n_triangles();
  std::vector<std::array<double, 9>> elem(nt);
  std::vector<std::array<double, 3>> load(nt);
  parallel_for(nt, [&](int t) {
    const Triangle geo = mesh.geometry(t);
    const auto g = geo.bary_gradients();
    const double area = geo.area();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) elem[t][3 * i + j] = 4.0 * area * g[i].dot(g[j]);
    for (int i = 0; i < 3; ++i) {
      if (f.is_zero()) {
        load[t][i] = 0.0;
        continue;
      }
      const BaryPoly psi =
          BaryPoly::constant(geo, 1.0) - BaryPoly::barycentric(geo, i) * 2.0;
      load[t][i] = f.integrate_against(mesh, t, psi);
    }
  });
  std::vector<std::array<int, 2>> idx;
  std::vector<double> val;
  CrSystem sys;
  sys.load.assign(space.n_dofs(), 0.0);
  for (int t = 0; t < nt; ++t) {
    int dof[3];
    for (int e = 0; e < 3; ++e) dof[e] = space.dof_of_edge(mesh.tri(t).edge[e]);
    for (int i = 0; i < 3; ++i) {
      if (dof[i] < 0) continue;
      sys.load[dof[i]] += load[t][i];
      for (int j = 0; j < 3; ++j) {
        if (dof[j] < 0) continue;
        idx.push_back({dof[i], dof[j]});
        val.push_back(elem[t][3 * i + j]);
      }
    }
  }
  sys.stiffness = SparseMatrix::from_triplets(space.n_dofs(), std::move(idx), std::move(val));
  return sys;
}

CrFunction solve_poisson(const CrSpace& space, const SourceTerm& f, const SolverOptions& opts) {
  CrSystem sys = assemble_poisson(space, f);
  CrFunction u;
  u.space = &space;
  const int max_iter = std::max(100, opts.max_iter_per_dof * space.n_dofs());
  const CgResult res = pcg_solve(sys.stiffness, sys.load, u.coeff, opts.rel_tol, max_iter);
  if (!res.converged)
    throw std::runtime_error("solve_poisson: CG stalled after " + std::to_string(res.iterations) +
                             " iterations, relative residual " +
                             std::to_string(res.relative_residual));
  return u;
}

CrFunction interpolate_nc(const CrSpace& target, const std::function<double(Vec2)>& v,
                          int gauss_points) {
  const Triangulation& mesh = target.mesh();
  const GaussRule& g = gauss_rule(gauss_points);
  CrFunction out;
  out.space = &target;
  out.coeff.assign(target.n_dofs(), 0.0);
  for (int d = 0; d < target.n_dofs(); ++d) {
    const MeshEdge& e = mesh.edge(target.edge_of_dof(d));
    const Vec2 a = mesh.vertex(e.v[0]);
    const Vec2 b = mesh.vertex(e.v[1]);
    double mean = 0.0;
    for (int k = 0; k < gauss_points; ++k) mean += g.weight[k] * v(a + (b - a) * g.node[k]);
    out.coeff[d] = mean;
  }
  return out;
}

namespace {
// Fine edges of children of the coarse triangle that lie on the coarse edge
// [a,b]; the mean of an affine CR function over such an edge is its midpoint
// value, i.e. the fine DOF.
double coarse_edge_mean_one_sided(const CrFunction& fine_v, const RefinementPair& pair,
                                  int coarse_tri, Vec2 a, Vec2 b) {
  const Triangulation& fine = *pair.fine;
  const double ab2 = (b - a).dot(b - a);
  double acc = 0.0;
  double len = 0.0;
  for (int ft : pair.children[coarse_tri]) {
    for (int e = 0; e < 3; ++e) {
      const MeshEdge& me = fine.edge(fine.tri(ft).edge[e]);
      const Vec2 p = fine.vertex(me.v[0]);
      const Vec2 q = fine.vertex(me.v[1]);
      auto on_segment = [&](Vec2 x) {
        if (std::fabs((x - a).cross(b - a)) > 1e-9 * ab2) return false;
        const double s = (x - a).dot(b - a) / ab2;
        return s >= -1e-9 && s <= 1.0 + 1e-9;
      };
      if (!on_segment(p) || !on_segment(q)) continue;
      acc += me.length * fine_v.edge_value(fine.tri(ft).edge[e]);
      len += me.length;
    }
  }
  const double total = std::sqrt(ab2);
  if (std::fabs(len - total) > 1e-9 * total)
    throw std::runtime_error("interpolate_nc: fine edges do not cover the coarse edge");
  return acc / total;
}
}  // namespace

CrFunction interpolate_nc(const CrSpace& target, const CrFunction& fine_v,
                          const RefinementPair& pair, double tol) {
  const Triangulation& coarse = *pair.coarse;
  if (&target.mesh() != pair.coarse)
    throw std::invalid_argument("interpolate_nc: target space does not live on pair.coarse");
  CrFunction out;
  out.space = &target;
  out.coeff.assign(target.n_dofs(), 0.0);
  double scale = 0.0;
  for (double c : fine_v.coeff) scale = std::max(scale, std::fabs(c));
  for (int d = 0; d < target.n_dofs(); ++d) {
    const MeshEdge& e = coarse.edge(target.edge_of_dof(d));
    const Vec2 a = coarse.vertex(e.v[0]);
    const Vec2 b = coarse.vertex(e.v[1]);
    const double mean0 = coarse_edge_mean_one_sided(fine_v, pair, e.tri[0], a, b);
    if (!e.boundary) {
      const double mean1 = coarse_edge_mean_one_sided(fine_v, pair, e.tri[1], a, b);
      if (std::fabs(mean0 - mean1) > tol * (1.0 + scale))
        throw std::runtime_error("interpolate_nc: coarse-edge mean not single-valued");
    }
    out.coeff[d] = mean0;
  }
  return out;
}

double energy_norm_diff_cr(const RefinementPair& pair, const CrFunction& coarse_u,
                           const CrFunction& fine_u) {
  const Triangulation& fine = *pair.fine;
  double s = 0.0;
  for (int t = 0; t < fine.n_triangles(); ++t) {
    const Vec2 d = fine_u.gradient(t) - coarse_u.gradient(pair.ancestor[t]);
    s += fine.tri(t).area * d.dot(d);
  }
  return std::sqrt(s);
}

double energy_norm_cr(const CrFunction& u) {
  const Triangulation& mesh = u.space->mesh();
  double s = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const Vec2 g = u.gradient(t);
    s += mesh.tri(t).area * g.dot(g);
  }
  return std::sqrt(s);
}

}  // namespace ncfem
