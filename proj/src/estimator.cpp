#include "ncfem/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ncfem {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// sample barycentric points for sup probes
const std::array<std::array<double, 3>, 8> kProbes = {{{1, 0, 0},
                                                       {0, 1, 0},
                                                       {0, 0, 1},
                                                       {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                                       {0.5, 0.5, 0},
                                                       {0, 0.5, 0.5},
                                                       {0.5, 0, 0.5},
                                                       {0.2, 0.3, 0.5}}};

// tangential jump of grad u across edge e (scalar in 2D); boundary edges
// contribute the trace itself
double cr_edge_jump(const CrFunction& u, const Triangulation& mesh, int e) {
  const MeshEdge& me = mesh.edge(e);
  const double plus = u.gradient(me.tri[0]).dot(me.tangent);
  const double minus = me.boundary ? 0.0 : u.gradient(me.tri[1]).dot(me.tangent);
  return plus - minus;
}

Vec2 morley_edge_jump(const MorleyFunction& u, const Triangulation& mesh, int e) {
  const MeshEdge& me = mesh.edge(e);
  const Vec2 plus = u.hessian(me.tri[0]).apply(me.tangent);
  const Vec2 minus = me.boundary ? Vec2{0, 0} : u.hessian(me.tri[1]).apply(me.tangent);
  return plus - minus;
}

// F(Omega(T)): sides between neighborhood triangles plus their boundary sides
std::vector<int> patch_sides(const Triangulation& mesh, int t) {
  const std::vector<int> hood = mesh.neighborhood(t);
  std::vector<char> in(mesh.n_triangles(), 0);
  for (int k : hood) in[k] = 1;
  std::vector<int> sides;
  std::vector<char> seen(mesh.n_edges(), 0);
  for (int k : hood)
    for (int e = 0; e < 3; ++e) {
      const int eid = mesh.tri(k).edge[e];
      if (seen[eid]) continue;
      seen[eid] = 1;
      const MeshEdge& me = mesh.edge(eid);
      if (me.boundary || (in[me.tri[0]] && in[me.tri[1]])) sides.push_back(eid);
    }
  return sides;
}

}  // namespace

EtaLocal eta_local(const CrFunction& u, const SourceTerm& f, int k) {
  const Triangulation& mesh = u.space->mesh();
  EtaLocal out;
  const double ht = mesh.tri(k).diameter;
  out.volume2 = ht * ht * f.l2_norm2(mesh, k);
  for (int e = 0; e < 3; ++e) {
    const int eid = mesh.tri(k).edge[e];
    const double j = cr_edge_jump(u, mesh, eid);
    out.jump2 += ht * mesh.edge(eid).length * j * j;
  }
  return out;
}

EtaLocal eta_local(const MorleyFunction& u, const SourceTerm& f, int k) {
  const Triangulation& mesh = u.space->mesh();
  EtaLocal out;
  const double ht = mesh.tri(k).diameter;
  out.volume2 = std::pow(ht, 4) * f.l2_norm2(mesh, k);
  for (int e = 0; e < 3; ++e) {
    const int eid = mesh.tri(k).edge[e];
    const Vec2 j = morley_edge_jump(u, mesh, eid);
    out.jump2 += ht * mesh.edge(eid).length * j.dot(j);
  }
  return out;
}

double EstimatorReport::eta2_of(const std::vector<int>& set) const {
  double s = 0.0;
  for (int k : set) s += local[k].total2();
  return s;
}

namespace {
template <class Fn>
EstimatorReport estimate_impl(int nt, const Fn& local_fn) {
  EstimatorReport rep;
  rep.local.resize(nt);
  parallel_for(nt, [&](int k) { rep.local[k] = local_fn(k); });
  for (const EtaLocal& l : rep.local) rep.total2 += l.total2();
  return rep;
}
}  // namespace

EstimatorReport estimate(const CrFunction& u, const SourceTerm& f) {
  return estimate_impl(u.space->mesh().n_triangles(),
                       [&](int k) { return eta_local(u, f, k); });
}

EstimatorReport estimate(const MorleyFunction& u, const SourceTerm& f) {
  return estimate_impl(u.space->mesh().n_triangles(),
                       [&](int k) { return eta_local(u, f, k); });
}

std::vector<int> dorfler_mark(const EstimatorReport& report, double theta) {
  if (!(theta > 0.0) || theta > 1.0) throw std::invalid_argument("dorfler_mark: theta not in (0,1]");
  std::vector<int> order(report.local.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double ea = report.local[a].total2();
    const double eb = report.local[b].total2();
    if (ea != eb) return ea > eb;
    return a < b;
  });
  std::vector<int> marked;
  double acc = 0.0;
  const double goal = theta * report.total2 * (1.0 - 1e-12);
  for (int k : order) {
    if (acc >= goal && !marked.empty()) break;
    marked.push_back(k);
    acc += report.local[k].total2();
  }
  return marked;
}

namespace {

double mu_of(const Triangulation& mesh, int t, const std::function<double(int)>& edge_jump2) {
  // h_F || [D^m w] x nu ||^2_{L2(F)} with a constant jump value per side
  double s = 0.0;
  for (int eid : patch_sides(mesh, t)) {
    const double len = mesh.edge(eid).length;
    s += len * len * edge_jump2(eid);
  }
  return std::sqrt(s);
}

double rho_cr(const CrFunction& w, const CrCompanion& j, int t) {
  const BaryPoly d = w.local_poly(t) - j.piece[t];
  auto [gx, gy] = d.gradient();
  return std::sqrt(integrate_triangle(gx * gx + gy * gy));
}

double hessian_norm2(const BaryPoly& p) {
  auto [gx, gy] = p.gradient();
  auto [gxx, gxy] = gx.gradient();
  auto [gyx, gyy] = gy.gradient();
  (void)gyx;
  return integrate_triangle(gxx * gxx + gxy * gxy * 2.0 + gyy * gyy);
}

double rho_morley(const MorleyFunction& w, const MorleyCompanion& j, int t) {
  const Triangulation& mesh = w.space->mesh();
  const BaryPoly wp = w.local_poly(t);
  double s = 0.0;
  for (int sub = 0; sub < 3; ++sub) {
    const Triangle geo = hct_subtriangle(mesh, t, sub);
    BaryPoly d = reexpress(wp, geo) - reexpress(j.fn.piece(t).cubic[sub], geo);
    for (int e = 0; e < 3; ++e)
      if (j.fn.piece(t).bubble[e] != 0.0)
        d = d - reexpress(morley_edge_bubble(mesh, t, e), geo) * j.fn.piece(t).bubble[e];
    s += hessian_norm2(d);
  }
  return std::sqrt(s);
}

}  // namespace

Seminorms seminorms_mu_rho(const CrFunction& w, int t, const CompanionConfig& config) {
  const Triangulation& mesh = w.space->mesh();
  const CrCompanion j = cr_jn(w, config);
  Seminorms out;
  out.mu = mu_of(mesh, t, [&](int e) {
    const double v = cr_edge_jump(w, mesh, e);
    return v * v;
  });
  out.rho = rho_cr(w, j, t);
  return out;
}

Seminorms seminorms_mu_rho(const MorleyFunction& w, int t, const CompanionConfig& config) {
  const Triangulation& mesh = w.space->mesh();
  const MorleyCompanion j = morley_j2(w, config);
  Seminorms out;
  out.mu = mu_of(mesh, t, [&](int e) {
    const Vec2 v = morley_edge_jump(w, mesh, e);
    return v.dot(v);
  });
  out.rho = rho_morley(w, j, t);
  return out;
}

namespace {

struct Check {
  std::vector<ConditionReport>* out;
  void hard(const std::string& name, double measured, double threshold) {
    out->push_back({name, true, measured <= threshold, measured, threshold});
  }
  void monitored(const std::string& name, double measured) {
    out->push_back({name, false, true, measured, kNan});
  }
};

CrFunction random_cr(const CrSpace& space, Rng& rng) {
  CrFunction f;
  f.space = &space;
  f.coeff.resize(space.n_dofs());
  for (double& c : f.coeff) c = rng.uniform(-1.0, 1.0);
  return f;
}

MorleyFunction random_morley(const MorleySpace& space, Rng& rng) {
  MorleyFunction f;
  f.space = &space;
  f.coeff.resize(space.n_dofs());
  for (double& c : f.coeff) c = rng.uniform(-1.0, 1.0);
  return f;
}

// continuous piecewise P1 with zero boundary values, written as CR coefficients
CrFunction random_s10(const CrSpace& space, Rng& rng) {
  const Triangulation& mesh = space.mesh();
  std::vector<double> nodal(mesh.n_vertices(), 0.0);
  for (int z = 0; z < mesh.n_vertices(); ++z)
    if (!mesh.boundary_vertex(z)) nodal[z] = rng.uniform(-1.0, 1.0);
  CrFunction f;
  f.space = &space;
  f.coeff.assign(space.n_dofs(), 0.0);
  for (int d = 0; d < space.n_dofs(); ++d) {
    const MeshEdge& me = mesh.edge(space.edge_of_dof(d));
    f.coeff[d] = 0.5 * (nodal[me.v[0]] + nodal[me.v[1]]);
  }
  return f;
}

// a global quadratic represented exactly in the unconstrained Morley space
MorleyFunction global_quadratic_morley(const MorleySpace& space, const std::array<double, 6>& q) {
  const Triangulation& mesh = space.mesh();
  auto val = [&](Vec2 p) {
    return q[0] + q[1] * p.x + q[2] * p.y + q[3] * p.x * p.x + q[4] * p.x * p.y +
           q[5] * p.y * p.y;
  };
  auto grad = [&](Vec2 p) {
    return Vec2{q[1] + 2.0 * q[3] * p.x + q[4] * p.y, q[2] + q[4] * p.x + 2.0 * q[5] * p.y};
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

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double c : v) m = std::max(m, std::fabs(c));
  return m;
}

}  // namespace

std::vector<ConditionReport> verify_conditions_cr(const RefinementPair& pair,
                                                  const CrFunction& u, const CrFunction& uhat,
                                                  std::uint64_t seed) {
  const Triangulation& coarse = *pair.coarse;
  const Triangulation& fine = *pair.fine;
  const CrSpace& cs = *u.space;
  const CrSpace& fs = *uhat.space;
  Rng rng(seed);
  std::vector<ConditionReport> out;
  Check check{&out};

  std::vector<CrFunction> fine_samples;
  for (int i = 0; i < 3; ++i) fine_samples.push_back(random_cr(fs, rng));
  fine_samples.push_back(uhat);

  // (C1): L2 approximation constant of I_NC on every coarse triangle
  double c1 = 0.0;
  for (const CrFunction& v : fine_samples) {
    const CrFunction iv = interpolate_nc(cs, v, pair);
    for (int t = 0; t < coarse.n_triangles(); ++t) {
      double num2 = 0.0, den2 = 0.0;
      for (int ft : pair.children[t]) {
        const Triangle geo = fine.geometry(ft);
        const BaryPoly d = v.local_poly(ft) - reexpress(iv.local_poly(t), geo);
        num2 += l2_norm2(d);
        const Vec2 gd = v.gradient(ft) - iv.gradient(t);
        den2 += geo.area() * gd.dot(gd);
      }
      if (den2 > 1e-24)
        c1 = std::max(c1, std::sqrt(num2) / (coarse.tri(t).diameter * std::sqrt(den2)));
    }
  }
  check.hard("C1", c1, constants::lambda1_cr(2) * (1.0 + 1e-9));

  // (C2): a_h(w, v - I v) = 0
  double c2 = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    const CrFunction w = random_cr(cs, rng);
    const CrFunction& v = fine_samples[trial % fine_samples.size()];
    const CrFunction iv = interpolate_nc(cs, v, pair);
    double a = 0.0;
    for (int ft = 0; ft < fine.n_triangles(); ++ft) {
      const int anc = pair.ancestor[ft];
      a += fine.tri(ft).area * w.gradient(anc).dot(v.gradient(ft) - iv.gradient(anc));
    }
    double nw = energy_norm_cr(w);
    double nv = 0.0;
    for (int ft = 0; ft < fine.n_triangles(); ++ft)
      nv += fine.tri(ft).area * v.gradient(ft).dot(v.gradient(ft));
    nv = std::sqrt(nv);
    if (nw * nv > 0.0) c2 = std::max(c2, std::fabs(a) / (nw * nv));
  }
  check.hard("C2", c2, 1e-10);

  // (C3): identity on unrefined triangles
  double c3 = 0.0;
  for (const CrFunction& v : fine_samples) {
    const CrFunction iv = interpolate_nc(cs, v, pair);
    for (int t = 0; t < coarse.n_triangles(); ++t) {
      if (!pair.survives[t]) continue;
      const int ft = pair.children[t][0];
      for (const auto& l : kProbes) {
        const Vec2 p = fine.geometry(ft).point(l[0], l[1], l[2]);
        c3 = std::max(c3, std::fabs(v.eval(ft, p) - iv.eval(t, p)));
      }
    }
  }
  check.hard("C3", c3, 1e-9 * std::max(1.0, max_abs(u.coeff)));

  // (C4): I_NC(u*) = u
  const CrFunction ustar = transfer_cr(u, pair, fs);
  const CrFunction iustar = interpolate_nc(cs, ustar, pair);
  double c4 = 0.0;
  for (int d = 0; d < cs.n_dofs(); ++d) c4 = std::max(c4, std::fabs(iustar.coeff[d] - u.coeff[d]));
  check.hard("C4", c4, 1e-9 * std::max(1.0, max_abs(u.coeff)));

  // (C5): fine-level projection identity grad I_NC-hat v = Pi0-hat grad v for
  // v = J_2 u (conforming companion)
  const CrCompanion j2 = cr_jn(u, CompanionConfig::all(coarse, Family::CR));
  CrFunction vjhat;
  vjhat.space = &fs;
  vjhat.coeff.assign(fs.n_dofs(), 0.0);
  for (int d = 0; d < fs.n_dofs(); ++d) {
    const MeshEdge& fe = fine.edge(fs.edge_of_dof(d));
    const Vec2 a = fine.vertex(fe.v[0]);
    const Vec2 b = fine.vertex(fe.v[1]);
    const int anc = pair.ancestor[fe.tri[0]];
    const double mean =
        integrate_segment(a, b, 2, [&](Vec2 p) { return j2.eval(anc, p); }) / fe.length;
    vjhat.coeff[d] = mean;
  }
  double c5 = 0.0;
  double gscale = 0.0;
  for (int ft = 0; ft < fine.n_triangles(); ++ft) {
    const int anc = pair.ancestor[ft];
    const Triangle geo = fine.geometry(ft);
    auto [gx, gy] = j2.piece[anc].gradient();
    const Vec2 mean_grad{integrate_triangle(reexpress(gx, geo)) / geo.area(),
                         integrate_triangle(reexpress(gy, geo)) / geo.area()};
    gscale = std::max(gscale, mean_grad.norm());
    c5 = std::max(c5, (vjhat.gradient(ft) - mean_grad).norm());
  }
  check.hard("C5", c5, 1e-10 * std::max(1.0, gscale));

  // (C6): exactness on conforming arguments, classical and refined side sets
  double c6 = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const CrFunction w = random_s10(cs, rng);
    for (const auto& config : {CompanionConfig::all(coarse, Family::CR),
                               CompanionConfig::refined(pair, Family::CR)}) {
      const CrCompanion j = cr_jn(w, config);
      for (int t = 0; t < coarse.n_triangles(); ++t)
        for (const auto& l : kProbes) {
          const Vec2 p = coarse.geometry(t).point(l[0], l[1], l[2]);
          c6 = std::max(c6, std::fabs(j.eval(t, p) - w.eval(t, p)));
        }
    }
  }
  check.hard("C6", c6, 1e-9);

  // (C7): conforming null-space probe: mu = 0 implies rho = 0
  double c7 = 0.0;
  {
    const CrFunction w = random_s10(cs, rng);
    const auto config = CompanionConfig::all(coarse, Family::CR);
    const CrCompanion j = cr_jn(w, config);
    for (int t = 0; t < coarse.n_triangles(); ++t) {
      const double mu = mu_of(coarse, t, [&](int e) {
        const double v = cr_edge_jump(w, coarse, e);
        return v * v;
      });
      c7 = std::max(c7, std::max(mu, rho_cr(w, j, t)));
    }
  }
  check.hard("C7", c7, 1e-9);

  return out;
}

std::vector<ConditionReport> verify_conditions_morley(const RefinementPair& pair,
                                                      const MorleyFunction& u,
                                                      const MorleyFunction& uhat,
                                                      std::uint64_t seed) {
  const Triangulation& coarse = *pair.coarse;
  const Triangulation& fine = *pair.fine;
  const MorleySpace& cs = *u.space;
  const MorleySpace& fs = *uhat.space;
  Rng rng(seed);
  std::vector<ConditionReport> out;
  Check check{&out};

  std::vector<MorleyFunction> fine_samples;
  for (int i = 0; i < 2; ++i) fine_samples.push_back(random_morley(fs, rng));
  fine_samples.push_back(uhat);

  // (C1): monitored quadratic approximation constant of I_M
  double c1 = 0.0;
  for (const MorleyFunction& v : fine_samples) {
    const MorleyFunction iv = interpolate_morley(cs, v, pair);
    for (int t = 0; t < coarse.n_triangles(); ++t) {
      double num2 = 0.0, den2 = 0.0;
      for (int ft : pair.children[t]) {
        const Triangle geo = fine.geometry(ft);
        const BaryPoly d = v.local_poly(ft) - reexpress(iv.local_poly(t), geo);
        num2 += l2_norm2(d);
        const Sym2 hd = v.hessian(ft) - iv.hessian(t);
        den2 += geo.area() * hd.frobenius2();
      }
      const double ht = coarse.tri(t).diameter;
      if (den2 > 1e-24) c1 = std::max(c1, std::sqrt(num2) / (ht * ht * std::sqrt(den2)));
    }
  }
  check.monitored("C1", c1);

  // (C2)
  double c2 = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const MorleyFunction w = random_morley(cs, rng);
    const MorleyFunction& v = fine_samples[trial % fine_samples.size()];
    const MorleyFunction iv = interpolate_morley(cs, v, pair);
    double a = 0.0;
    for (int ft = 0; ft < fine.n_triangles(); ++ft) {
      const int anc = pair.ancestor[ft];
      const Sym2 wh = w.hessian(anc);
      const Sym2 dh = v.hessian(ft) - iv.hessian(anc);
      a += fine.tri(ft).area * (wh.xx * dh.xx + 2.0 * wh.xy * dh.xy + wh.yy * dh.yy);
    }
    const double nw = energy_norm_morley(w);
    double nv = 0.0;
    for (int ft = 0; ft < fine.n_triangles(); ++ft)
      nv += fine.tri(ft).area * v.hessian(ft).frobenius2();
    nv = std::sqrt(nv);
    if (nw * nv > 0.0) c2 = std::max(c2, std::fabs(a) / (nw * nv));
  }
  check.hard("C2", c2, 1e-10);

  // (C3)
  double c3 = 0.0;
  for (const MorleyFunction& v : fine_samples) {
    const MorleyFunction iv = interpolate_morley(cs, v, pair);
    for (int t = 0; t < coarse.n_triangles(); ++t) {
      if (!pair.survives[t]) continue;
      const int ft = pair.children[t][0];
      for (const auto& l : kProbes) {
        const Vec2 p = fine.geometry(ft).point(l[0], l[1], l[2]);
        c3 = std::max(c3, std::fabs(v.eval(ft, p) - iv.eval(t, p)));
      }
    }
  }
  check.hard("C3", c3, 1e-9 * std::max(1.0, max_abs(u.coeff)));

  // (C4): I_M(u*) = u
  const MorleyFunction ustar = transfer_morley(u, pair, fs);
  const MorleyFunction iustar = interpolate_morley(cs, ustar, pair);
  double c4 = 0.0;
  for (int d = 0; d < cs.n_dofs(); ++d) c4 = std::max(c4, std::fabs(iustar.coeff[d] - u.coeff[d]));
  check.hard("C4", c4, 1e-9 * std::max(1.0, max_abs(u.coeff)));

  // (C5): D^2 I_M-hat v = Pi0-hat D^2 v for the conforming companion
  const MorleyCompanion jg = morley_j2(u, CompanionConfig::all(coarse, Family::Morley));
  MorleyFunction vjhat;
  vjhat.space = &fs;
  vjhat.coeff.assign(fs.n_dofs(), 0.0);
  for (int z = 0; z < fine.n_vertices(); ++z) {
    const int d = fs.dof_of_vertex(z);
    if (d < 0) continue;
    // any incident ancestor gives the same value for the conforming companion
    int anc = -1;
    for (int ft : fine.vertex_patch(z)) {
      anc = pair.ancestor[ft];
      break;
    }
    vjhat.coeff[d] = jg.eval(anc, fine.vertex(z));
  }
  for (int e = 0; e < fine.n_edges(); ++e) {
    const int d = fs.dof_of_edge(e);
    if (d < 0) continue;
    const MeshEdge& fe = fine.edge(e);
    vjhat.coeff[d] = hct_segment_normal_mean(jg.fn, pair.ancestor[fe.tri[0]],
                                             fine.vertex(fe.v[0]), fine.vertex(fe.v[1]),
                                             fe.normal);
  }
  double c5 = 0.0;
  double hscale = 0.0;
  for (int ft = 0; ft < fine.n_triangles(); ++ft) {
    const int anc = pair.ancestor[ft];
    const Triangle geo = fine.geometry(ft);
    // mean Hessian through boundary integrals of the gradient
    Sym2 mean{0, 0, 0};
    double myx = 0.0;
    for (int e = 0; e < 3; ++e) {
      const MeshEdge& fe = fine.edge(fine.tri(ft).edge[e]);
      Vec2 a = fine.vertex(fe.v[0]);
      Vec2 b = fine.vertex(fe.v[1]);
      Vec2 nu = fe.normal;
      if (fe.tri[0] != ft) nu = nu * -1.0;  // outward for this triangle
      const Vec2 gint = Vec2{hct_segment_normal_mean(jg.fn, anc, a, b, Vec2{1, 0}),
                             hct_segment_normal_mean(jg.fn, anc, a, b, Vec2{0, 1})} *
                        fe.length;
      mean.xx += gint.x * nu.x;
      mean.xy += gint.x * nu.y;
      myx += gint.y * nu.x;
      mean.yy += gint.y * nu.y;
    }
    const double inv_area = 1.0 / geo.area();
    mean.xx *= inv_area;
    mean.yy *= inv_area;
    mean.xy = 0.5 * (mean.xy + myx) * inv_area;
    const Sym2 diff = vjhat.hessian(ft) - mean;
    hscale = std::max(hscale, std::sqrt(mean.frobenius2()));
    c5 = std::max(c5, std::sqrt(diff.frobenius2()));
  }
  check.hard("C5", c5, 1e-10 * std::max(1.0, hscale));

  // (C6): exactness for a global quadratic with interior side sets
  MorleySpace free_space(coarse, false);
  std::array<double, 6> q{};
  for (double& c : q) c = rng.uniform(-1.0, 1.0);
  const MorleyFunction wq = global_quadratic_morley(free_space, q);
  CompanionConfig interior = CompanionConfig::all(coarse, Family::Morley);
  for (int e = 0; e < coarse.n_edges(); ++e)
    if (coarse.edge(e).boundary) interior.fprime[e] = 0;
  const MorleyCompanion jq = morley_j2(wq, interior);
  double c6 = 0.0;
  for (int t = 0; t < coarse.n_triangles(); ++t)
    for (const auto& l : kProbes) {
      const Vec2 p = coarse.geometry(t).point(l[0], l[1], l[2]);
      c6 = std::max(c6, std::fabs(jq.eval(t, p) - wq.eval(t, p)));
    }
  check.hard("C6", c6, 1e-9);

  // (C7): interior triangles of the quadratic probe have mu = rho = 0
  double c7 = 0.0;
  for (int t = 0; t < coarse.n_triangles(); ++t) {
    bool interior_patch = true;
    for (int k : coarse.neighborhood(t))
      for (int e = 0; e < 3; ++e)
        if (coarse.edge(coarse.tri(k).edge[e]).boundary) interior_patch = false;
    if (!interior_patch) continue;
    const double mu = mu_of(coarse, t, [&](int e) {
      const Vec2 v = morley_edge_jump(wq, coarse, e);
      return v.dot(v);
    });
    c7 = std::max(c7, std::max(mu, rho_morley(wq, jq, t)));
  }
  check.hard("C7", c7, 1e-9);

  return out;
}

namespace {

template <class Fn>
DrelReport drel_common(const RefinementPair& pair, const EstimatorReport& est, double lhs,
                       double uhstar_diff, int m, const SourceTerm& f, const Fn& jump2_of_edge) {
  const Triangulation& coarse = *pair.coarse;
  DrelReport rep;
  rep.lhs = lhs;
  rep.uhstar_diff = uhstar_diff;
  double vol = 0.0;
  for (int t : pair.refined)
    vol += std::pow(coarse.tri(t).diameter, 2 * m) * f.l2_norm2(coarse, t);
  rep.volume_term = std::sqrt(vol);
  rep.eta_layer = std::sqrt(est.eta2_of(pair.layer));
  rep.eta_refined = std::sqrt(est.eta2_of(pair.refined));
  double js = 0.0;
  for (int e : pair.fprime) js += coarse.edge(e).length * coarse.edge(e).length * jump2_of_edge(e);
  rep.jump_fprime = std::sqrt(js);
  rep.ratio_layer = rep.eta_layer > 0.0 ? lhs / rep.eta_layer : 0.0;
  rep.ratio_refined = rep.eta_refined > 0.0 ? lhs / rep.eta_refined : 0.0;
  return rep;
}

}  // namespace

DrelReport drel_check(const RefinementPair& pair, const CrFunction& u, const CrFunction& uhat,
                      const SourceTerm& f, double theory_omega0, int theory_m2) {
  const Triangulation& coarse = *pair.coarse;
  const EstimatorReport est = estimate(u, f);
  const double lhs = energy_norm_diff_cr(pair, u, uhat);
  const CrFunction ustar = transfer_cr(u, pair, *uhat.space);
  const double uhstar_diff = energy_norm_diff_cr(pair, u, ustar);
  DrelReport rep = drel_common(pair, est, lhs, uhstar_diff, 1, f, [&](int e) {
    const double j = cr_edge_jump(u, coarse, e);
    return j * j;
  });
  rep.coarse_dofs = u.space->n_dofs();
  rep.fine_dofs = uhat.space->n_dofs();

  const double slack = 1e-9 * std::max(1.0, lhs);
  rep.two_level_ok = 2.0 / (1.0 + std::sqrt(2.0)) * lhs <=
                rep.uhstar_diff + constants::lambda1_cr(2) * rep.volume_term + slack;
  rep.lambda_drel = kNan;
  rep.lambda2_refined = kNan;
  if (theory_m2 >= 3 && theory_omega0 > 0.0) {
    rep.lambda_drel = constants::lambda_drel(theory_omega0, theory_m2);
    rep.lambda2_refined = std::sqrt(constants::lambda2_refined_sq(theory_omega0, theory_m2));
    rep.refined_bound_ok = rep.uhstar_diff <= rep.lambda2_refined * rep.jump_fprime + slack;
    rep.drel_ok = lhs <= rep.lambda_drel * rep.eta_refined + slack;
  }
  return rep;
}

DrelReport drel_check(const RefinementPair& pair, const MorleyFunction& u,
                      const MorleyFunction& uhat, const SourceTerm& f) {
  const Triangulation& coarse = *pair.coarse;
  const EstimatorReport est = estimate(u, f);
  const double lhs = energy_norm_diff_morley(pair, u, uhat);
  const MorleyFunction ustar = transfer_morley(u, pair, *uhat.space);
  const double uhstar_diff = energy_norm_diff_morley(pair, u, ustar);
  DrelReport rep = drel_common(pair, est, lhs, uhstar_diff, 2, f, [&](int e) {
    const Vec2 j = morley_edge_jump(u, coarse, e);
    return j.dot(j);
  });
  rep.coarse_dofs = u.space->n_dofs();
  rep.fine_dofs = uhat.space->n_dofs();
  rep.lambda_drel = kNan;
  rep.lambda2_refined = kNan;
  return rep;
}

double measured_c_inv(const Triangulation& mesh, int degree) {
  double worst = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const Triangle geo = mesh.geometry(t);
    std::vector<BaryPoly> basis;
    for (int b = 0; b <= degree; ++b)
      for (int c = 0; c <= degree - b; ++c) {
        BaryPoly m(geo, degree);
        m.at(degree - b - c, b, c) = 1.0;
        basis.push_back(m);
      }
    const int n = static_cast<int>(basis.size());
    Mat stiff(n, n), mass(n, n);
    std::vector<std::pair<BaryPoly, BaryPoly>> grads;
    for (const auto& m : basis) grads.push_back(m.gradient());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        stiff(i, j) = integrate_triangle(grads[i].first * grads[j].first +
                                         grads[i].second * grads[j].second);
        mass(i, j) = integrate_triangle(basis[i] * basis[j]);
      }
    const double lam = generalized_eig_max(stiff, mass);
    worst = std::max(worst, geo.diameter() * std::sqrt(std::max(lam, 0.0)));
  }
  return worst;
}

CtEstimate estimate_ct(const Triangulation& mesh, Family family, int samples,
                       std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("estimate_ct: samples must be >= 1");
  Rng rng(seed);
  CtEstimate out;
  if (family == Family::CR) {
    CrSpace space(mesh);
    for (int s = 0; s < samples; ++s) {
      const CrFunction w = random_cr(space, rng);
      const CrCompanion j = cr_jn(w, CompanionConfig::all(mesh, Family::CR));
      for (int t = 0; t < mesh.n_triangles(); ++t) {
        const double mu = mu_of(mesh, t, [&](int e) {
          const double v = cr_edge_jump(w, mesh, e);
          return v * v;
        });
        if (mu < 1e-14) continue;
        out.measured = std::max(out.measured, rho_cr(w, j, t) / mu);
      }
    }
    out.c_inv2 = measured_c_inv(mesh, 2);
    const ShapeStats stats = mesh.shape_stats();
    out.bound = out.c_inv2 * constants::cj_bubble(2) * std::sqrt(2.0 * constants::c_loc(stats.m2));
  } else {
    MorleySpace space(mesh);
    for (int s = 0; s < samples; ++s) {
      const MorleyFunction w = random_morley(space, rng);
      const MorleyCompanion j = morley_j2(w, CompanionConfig::all(mesh, Family::Morley));
      for (int t = 0; t < mesh.n_triangles(); ++t) {
        const double mu = mu_of(mesh, t, [&](int e) {
          const Vec2 v = morley_edge_jump(w, mesh, e);
          return v.dot(v);
        });
        if (mu < 1e-14) continue;
        out.measured = std::max(out.measured, rho_morley(w, j, t) / mu);
      }
    }
    out.c_inv2 = measured_c_inv(mesh, 3);
    out.bound = kNan;
  }
  return out;
}

AdaptiveRun adaptive_loop(const Triangulation& initial, Family family, const SourceTerm& f,
                          double theta, int steps, double theory_omega0, int theory_m2,
                          const SolverOptions& opts) {
  if (!(theta > 0.0) || theta > 1.0)
    throw std::invalid_argument("adaptive_loop: theta must lie in (0,1]");
  if (steps < 0) throw std::invalid_argument("adaptive_loop: steps must be >= 0");
  AdaptiveRun run;
  run.family = family;
  auto solve_step = [&](std::unique_ptr<Triangulation> mesh) {
    AdaptiveStep step;
    step.mesh = std::move(mesh);
    if (family == Family::CR) {
      step.cr_space = std::make_unique<CrSpace>(*step.mesh);
      const CrFunction u = solve_poisson(*step.cr_space, f, opts);
      step.coeff = u.coeff;
      step.est = estimate(u, f);
      step.dofs = step.cr_space->n_dofs();
    } else {
      step.morley_space = std::make_unique<MorleySpace>(*step.mesh);
      const MorleyFunction u = solve_biharmonic(*step.morley_space, f, opts);
      step.coeff = u.coeff;
      step.est = estimate(u, f);
      step.dofs = step.morley_space->n_dofs();
    }
    return step;
  };

  run.steps.push_back(solve_step(std::make_unique<Triangulation>(initial)));
  for (int s = 0; s < steps; ++s) {
    AdaptiveStep& prev = run.steps.back();
    const std::vector<int> marked = dorfler_mark(prev.est, theta);
    auto fine_mesh = std::make_unique<Triangulation>(nvb_refine(*prev.mesh, marked));
    AdaptiveStep next = solve_step(std::move(fine_mesh));
    const RefinementPair pair = derive_refinement_pair(*prev.mesh, *next.mesh);
    if (family == Family::CR) {
      const CrFunction u = prev.cr();
      const CrFunction uhat = next.cr();
      next.drel = drel_check(pair, u, uhat, f, theory_omega0, theory_m2);
    } else {
      const MorleyFunction u = prev.morley();
      const MorleyFunction uhat = next.morley();
      next.drel = drel_check(pair, u, uhat, f);
    }
    run.steps.push_back(std::move(next));
  }
  return run;
}

}  // namespace ncfem
