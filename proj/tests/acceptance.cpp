// Acceptance suite: one pass/fail line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ncfem/cli.hpp"
#include "ncfem/estimator.hpp"

using namespace ncfem;

namespace {

struct Runner {
  int index = 0;
  bool all_ok = true;

  void run(const std::string& name, double budget_s, const std::function<bool()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string note;
    try {
      ok = body();
    } catch (const std::exception& e) {
      ok = false;
      note = std::string(" (") + e.what() + ")";
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0.0 && elapsed > budget_s) {
      ok = false;
      note += " (over time budget)";
    }
    std::printf("[%2d/10] %-34s %s (%.2f s)%s\n", ++index, name.c_str(),
                ok ? "PASS" : "FAIL", elapsed, note.c_str());
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
};

std::vector<int> all_tris(const Triangulation& m) {
  std::vector<int> v(m.n_triangles());
  for (int i = 0; i < m.n_triangles(); ++i) v[i] = i;
  return v;
}

Triangulation uniform2(const Triangulation& m) {
  Triangulation mid = nvb_refine(m, all_tris(m));
  return nvb_refine(mid, all_tris(mid));
}

CrFunction random_cr(const CrSpace& space, Rng& rng) {
  CrFunction f;
  f.space = &space;
  f.coeff.resize(space.n_dofs());
  for (double& c : f.coeff) c = rng.uniform(-1, 1);
  return f;
}

MorleyFunction random_morley(const MorleySpace& space, Rng& rng) {
  MorleyFunction f;
  f.space = &space;
  f.coeff.resize(space.n_dofs());
  for (double& c : f.coeff) c = rng.uniform(-1, 1);
  return f;
}

}  // namespace

int main() {
  Runner r;
  const SourceTerm f1 = SourceTerm::constant(1.0);

  // shared adaptive runs (criteria 5-9)
  const AdaptiveRun cr_conditions =
      adaptive_loop(uniform2(Triangulation::l_shape()), Family::CR, f1, 0.5, 5);
  const AdaptiveRun morley_conditions =
      adaptive_loop(uniform2(Triangulation::criss_cross_square()), Family::Morley, f1, 0.5, 5);
  const AdaptiveRun cr_drel =
      adaptive_loop(uniform2(uniform2(Triangulation::criss_cross_square())), Family::CR, f1,
                    0.5, 8, M_PI / 4.0, 8);
  const AdaptiveRun morley_drel = adaptive_loop(
      uniform2(uniform2(Triangulation::criss_cross_square())), Family::Morley, f1, 0.5, 8);

  r.run("trace-equality-witnesses", 5.0, [&] {
    bool ok = true;
    Rng rng(1001);
    int done = 0;
    while (done < 100) {
      Simplex tri;
      tri.dim = 2;
      tri.vertex = {{rng.uniform(-1, 1), rng.uniform(-1, 1)},
                    {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                    {rng.uniform(-1, 1), rng.uniform(-1, 1)}};
      if (tri.volume() < 0.02) continue;
      ++done;
      const TraceCheck tc = discrete_trace_check(tri, 50, 2000 + done);
      ok = ok && tc.eq_constant <= 1e-12 && tc.eq_face_witness <= 1e-10 &&
           tc.eq_vertex_witness <= 1e-10 && tc.max_ratio_sum <= 1.0 + 1e-12;
    }
    const TraceCheck tet = discrete_trace_check(Simplex::reference(3), 2000, 77);
    ok = ok && tet.eq_constant <= 1e-12 && tet.eq_face_witness <= 1e-10 &&
         tet.eq_vertex_witness <= 1e-10 && tet.max_ratio_sum <= 1.0 + 1e-12 &&
         tet.max_ratio_face <= 1.0 + 1e-12 && tet.max_ratio_vertex <= 1.0 + 1e-12;
    return ok;
  });

  r.run("mass-matrix-spectra", 0.0, [&] {
    bool ok = true;
    for (int dim : {2, 3}) {
      const Simplex ref = Simplex::reference(dim);
      const double vol = ref.volume();
      const std::vector<double> eig = symmetric_eigenvalues(ref.p1_mass());
      ok = ok && std::fabs(eig.back() - vol / (dim + 1.0)) <= 1e-12;
      for (size_t k = 0; k + 1 < eig.size(); ++k)
        ok = ok && std::fabs(eig[k] - vol / ((dim + 1.0) * (dim + 2.0))) <= 1e-12;
    }
    const Simplex tri = Simplex::reference(2);
    const std::vector<double> beig = symmetric_eigenvalues(tri.bubble_mass());
    ok = ok && std::fabs(beig[0] - tri.volume() / 5.0) <= 1e-12 &&
         std::fabs(beig[1] - tri.volume() / 5.0) <= 1e-12 &&
         std::fabs(beig[2] - 4.0 * tri.volume() / 5.0) <= 1e-12;
    return ok;
  });

  r.run("spanning-tree-oracle", 0.0, [&] {
    Rng rng(31);
    for (int n = 3; n <= 6; ++n)
      for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(n);
        for (double& v : x) v = rng.uniform(-3, 3);
        std::sort(x.begin(), x.end());
        const MinSumCheck mc = min_connected_sum(x);
        if (mc.brute != mc.chain) return false;
      }
    return true;
  });

  r.run("sharp-bound-optimality", 0.0, [&] {
    bool ok = true;
    for (int k = 0; k <= 6; ++k) {
      const LegendreCheck lc = legendre_endpoint_check(k, 100000 / 7 + 1, -0.5, 1.5, 41 + k);
      ok = ok && lc.max_random_ratio <= lc.bound * (1.0 + 1e-12) &&
           std::fabs(lc.extremal_ratio - lc.bound) <= 1e-9 * lc.bound;
    }
    for (int n = 2; n <= 8; ++n) {
      const MaxCompCheck mc = max_component_bound(n, 100000 / 7 + 1, 53 + n);
      ok = ok && mc.max_random_ratio <= mc.bound + 1e-12 &&
           std::fabs(mc.extremal_ratio - mc.bound) <= 1e-9 * mc.bound;
    }
    return ok;
  });

  r.run("condition-suite", 60.0, [&] {
    bool ok = true;
    for (size_t s = 1; s < cr_conditions.steps.size(); ++s) {
      const RefinementPair pair = derive_refinement_pair(*cr_conditions.steps[s - 1].mesh,
                                                         *cr_conditions.steps[s].mesh);
      const auto reports = verify_conditions_cr(pair, cr_conditions.steps[s - 1].cr(),
                                                cr_conditions.steps[s].cr(), 600 + s);
      for (const auto& c : reports) {
        if (!c.pass) std::printf("        CR %s measured %.3e\n", c.name.c_str(), c.measured);
        ok = ok && c.pass;
      }
    }
    for (size_t s = 1; s < morley_conditions.steps.size(); ++s) {
      const RefinementPair pair = derive_refinement_pair(*morley_conditions.steps[s - 1].mesh,
                                                         *morley_conditions.steps[s].mesh);
      const auto reports = verify_conditions_morley(pair, morley_conditions.steps[s - 1].morley(),
                                                    morley_conditions.steps[s].morley(), 700 + s);
      for (const auto& c : reports) {
        if (!c.pass)
          std::printf("        Morley %s measured %.3e\n", c.name.c_str(), c.measured);
        ok = ok && c.pass;
      }
    }
    return ok;
  });

  r.run("transfer-identities", 0.0, [&] {
    bool ok = true;
    auto probe_points = [](const Triangle& geo) {
      std::vector<Vec2> pts;
      for (int k = 0; k < 10; ++k) {
        const double l1 = (k + 1) / 12.0;
        const double l2 = 0.4 * (1.0 - l1);
        pts.push_back(geo.point(l1, l2, 1.0 - l1 - l2));
      }
      return pts;
    };
    for (size_t s = 1; s < cr_conditions.steps.size(); ++s) {
      const RefinementPair pair = derive_refinement_pair(*cr_conditions.steps[s - 1].mesh,
                                                         *cr_conditions.steps[s].mesh);
      const CrFunction u = cr_conditions.steps[s - 1].cr();
      const CrFunction ustar = transfer_cr(u, pair, *cr_conditions.steps[s].cr_space);
      const CrFunction back = interpolate_nc(*u.space, ustar, pair);
      for (int d = 0; d < u.space->n_dofs(); ++d)
        ok = ok && std::fabs(back.coeff[d] - u.coeff[d]) <= 1e-9;
      for (int t = 0; t < pair.coarse->n_triangles(); ++t) {
        if (!pair.survives[t]) continue;
        const int ft = pair.children[t][0];
        for (const Vec2 p : probe_points(pair.fine->geometry(ft)))
          ok = ok && std::fabs(ustar.eval(ft, p) - u.eval(t, p)) <= 1e-9;
      }
    }
    for (size_t s = 1; s < morley_conditions.steps.size(); ++s) {
      const RefinementPair pair = derive_refinement_pair(*morley_conditions.steps[s - 1].mesh,
                                                         *morley_conditions.steps[s].mesh);
      const MorleyFunction u = morley_conditions.steps[s - 1].morley();
      const MorleyFunction ustar =
          transfer_morley(u, pair, *morley_conditions.steps[s].morley_space);
      const MorleyFunction back = interpolate_morley(*u.space, ustar, pair);
      for (int d = 0; d < u.space->n_dofs(); ++d)
        ok = ok && std::fabs(back.coeff[d] - u.coeff[d]) <= 1e-9;
      for (int t = 0; t < pair.coarse->n_triangles(); ++t) {
        if (!pair.survives[t]) continue;
        const int ft = pair.children[t][0];
        for (const Vec2 p : probe_points(pair.fine->geometry(ft)))
          ok = ok && std::fabs(ustar.eval(ft, p) - u.eval(t, p)) <= 1e-9;
      }
    }
    return ok;
  });

  r.run("jump-vanishing", 0.0, [&] {
    bool ok = true;
    Rng rng(4242);
    for (size_t s : {size_t{0}, size_t{2}, size_t{4}}) {
      const Triangulation& mesh_cr = *cr_conditions.steps[s].mesh;
      const CrSpace space_cr(mesh_cr);
      const Triangulation& mesh_mo = *morley_conditions.steps[s].mesh;
      const MorleySpace space_mo(mesh_mo);
      for (int draw = 0; draw < 20; ++draw) {
        CompanionConfig ccr = CompanionConfig::all(mesh_cr, Family::CR);
        for (int e = 0; e < mesh_cr.n_edges(); ++e) ccr.fprime[e] = rng.uniform() < 0.5;
        const CrFunction w = random_cr(space_cr, rng);
        ok = ok && cr_companion_max_jump(cr_j1(w, ccr), ccr.fprime, 5) <= 1e-9;
        ok = ok && cr_companion_max_jump(cr_jn(w, ccr), ccr.fprime, 5) <= 1e-9;

        CompanionConfig cmo = CompanionConfig::all(mesh_mo, Family::Morley);
        for (int e = 0; e < mesh_mo.n_edges(); ++e) cmo.fprime[e] = rng.uniform() < 0.5;
        const MorleyFunction v = random_morley(space_mo, rng);
        const MorleyJumps j1 = morley_companion_max_jump(morley_j1(v, cmo), cmo.fprime, 5);
        const MorleyJumps j2 = morley_companion_max_jump(morley_j2(v, cmo), cmo.fprime, 5);
        ok = ok && j1.value <= 1e-9 && j1.gradient <= 1e-9;
        ok = ok && j2.value <= 1e-9 && j2.gradient <= 1e-9;
      }
    }
    return ok;
  });

  r.run("drel-explicit-bound", 120.0, [&] {
    bool ok = true;
    for (size_t s = 1; s < cr_drel.steps.size(); ++s) {
      const DrelReport& d = *cr_drel.steps[s].drel;
      ok = ok && d.lhs <= 12.4121 * d.eta_refined + 1e-12;
      ok = ok && d.lambda_drel <= 12.4121;
      ok = ok && d.drel_ok && d.two_level_ok && d.refined_bound_ok;
      ok = ok && cr_drel.steps[s].dofs <= 100000;
    }
    return ok;
  });

  r.run("refined-vs-layer-and-baseline", 0.0, [&] {
    bool ok = true;
    for (const AdaptiveRun* run : {&cr_conditions, &morley_conditions, &cr_drel, &morley_drel})
      for (size_t s = 1; s < run->steps.size(); ++s) {
        const DrelReport& d = *run->steps[s].drel;
        ok = ok && d.eta_refined <= d.eta_layer + 1e-15;
      }
    // seeded baseline for the Morley ratio (generic constant), 110% regression
    const double baseline[8] = {0.125381910064, 0.110338263492, 0.176226237261,
                                0.133686020495, 0.119291199903, 0.160136445793,
                                0.166438099556, 0.151663410328};
    for (size_t s = 1; s < morley_drel.steps.size(); ++s) {
      const double ratio = morley_drel.steps[s].drel->ratio_refined;
      ok = ok && ratio <= 1.1 * baseline[s - 1];
    }
    return ok;
  });

  r.run("convergence-sanity", 0.0, [&] {
    bool ok = true;
    const TriangleQuadrature quad(8);
    {
      Triangulation mesh = uniform2(Triangulation::criss_cross_square());
      const SourceTerm f =
          SourceTerm::callback([](Vec2 p) { return cli::Manufactured::cr_f(p.x, p.y); });
      std::vector<double> err;
      for (int level = 0; level < 4; ++level) {
        const CrSpace space(mesh);
        const CrFunction u = solve_poisson(space, f);
        double e2 = 0.0;
        for (int t = 0; t < mesh.n_triangles(); ++t) {
          const Vec2 gh = u.gradient(t);
          e2 += quad.integrate(mesh.geometry(t), [&](Vec2 p) {
            double gx, gy;
            cli::Manufactured::cr_grad(p.x, p.y, &gx, &gy);
            return (Vec2{gx, gy} - gh).dot(Vec2{gx, gy} - gh);
          });
        }
        err.push_back(std::sqrt(e2));
        if (level < 3) mesh = uniform2(mesh);
      }
      for (size_t i = 0; i + 1 < err.size(); ++i) {
        const double ratio = err[i] / err[i + 1];
        ok = ok && ratio >= 1.8 && ratio <= 2.2;
      }
    }
    {
      Triangulation mesh = uniform2(uniform2(Triangulation::criss_cross_square()));
      const SourceTerm f =
          SourceTerm::callback([](Vec2 p) { return cli::Manufactured::morley_f(p.x, p.y); });
      std::vector<double> err;
      for (int level = 0; level < 4; ++level) {
        const MorleySpace space(mesh);
        const MorleyFunction u = solve_biharmonic(space, f);
        double e2 = 0.0;
        for (int t = 0; t < mesh.n_triangles(); ++t) {
          const Sym2 hh = u.hessian(t);
          e2 += quad.integrate(mesh.geometry(t), [&](Vec2 p) {
            double uxx, uxy, uyy;
            cli::Manufactured::morley_hessian(p.x, p.y, &uxx, &uxy, &uyy);
            return (Sym2{uxx, uxy, uyy} - hh).frobenius2();
          });
        }
        err.push_back(std::sqrt(e2));
        if (level < 3) mesh = uniform2(mesh);
      }
      for (size_t i = 0; i + 1 < err.size(); ++i) {
        const double ratio = err[i] / err[i + 1];
        ok = ok && ratio >= 1.6 && ratio <= 2.4;
      }
    }
    return ok;
  });

  std::printf("%s\n", r.all_ok ? "acceptance: all criteria satisfied"
                               : "acceptance: FAILURES present");
  return r.all_ok ? 0 : 1;
}
