#include "ncfem/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ncfem/estimator.hpp"

namespace ncfem::cli {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

Triangulation load_mesh(const std::string& mesh_path, const std::string& domain) {
  if (!mesh_path.empty()) {
    try {
      return Triangulation::read_file(mesh_path);
    } catch (const std::runtime_error& e) {
      throw std::invalid_argument(e.what());  // bad input, not a failed run
    }
  }
  if (domain == "square") return Triangulation::unit_square();
  if (domain == "crisscross") return Triangulation::criss_cross_square();
  if (domain == "lshape") return Triangulation::l_shape();
  throw CLI::ValidationError("--domain", "unknown domain " + domain);
}

Family parse_family(const std::string& family) {
  if (family == "cr") return Family::CR;
  if (family == "morley") return Family::Morley;
  throw CLI::ValidationError("--family", "unknown family " + family);
}

SourceTerm make_rhs(const std::string& rhs, double value, Family family) {
  if (rhs == "constant") return SourceTerm::constant(value);
  if (rhs == "manufactured") {
    if (family == Family::CR)
      return SourceTerm::callback([](Vec2 p) { return Manufactured::cr_f(p.x, p.y); });
    return SourceTerm::callback([](Vec2 p) { return Manufactured::morley_f(p.x, p.y); });
  }
  throw CLI::ValidationError("--rhs", "unknown rhs " + rhs);
}

// two mark-all bisection passes halve the mesh size of the NVB families here
Triangulation uniform_refine(const Triangulation& mesh, std::vector<int>* chain_map) {
  std::vector<int> all(mesh.n_triangles());
  for (int i = 0; i < mesh.n_triangles(); ++i) all[i] = i;
  Triangulation mid = nvb_refine(mesh, all);
  std::vector<int> all2(mid.n_triangles());
  for (int i = 0; i < mid.n_triangles(); ++i) all2[i] = i;
  Triangulation fine = nvb_refine(mid, all2);
  if (chain_map) *chain_map = compose_parent_maps(mid.parent_tri(), fine.parent_tri());
  return fine;
}

double manufactured_error(const Triangulation& mesh, Family family,
                          const std::vector<double>& coeff, const CrSpace* cs,
                          const MorleySpace* ms) {
  const TriangleQuadrature quad(8);
  double err2 = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    if (family == Family::CR) {
      const CrFunction u{cs, coeff};
      const Vec2 gh = u.gradient(t);
      err2 += quad.integrate(mesh.geometry(t), [&](Vec2 p) {
        double gx, gy;
        Manufactured::cr_grad(p.x, p.y, &gx, &gy);
        const Vec2 d{gx - gh.x, gy - gh.y};
        return d.dot(d);
      });
    } else {
      const MorleyFunction u{ms, coeff};
      const Sym2 hh = u.hessian(t);
      err2 += quad.integrate(mesh.geometry(t), [&](Vec2 p) {
        double uxx, uxy, uyy;
        Manufactured::morley_hessian(p.x, p.y, &uxx, &uxy, &uyy);
        const Sym2 d{uxx - hh.xx, uxy - hh.xy, uyy - hh.yy};
        return d.frobenius2();
      });
    }
  }
  return std::sqrt(err2);
}

struct CommonOpts {
  std::string mesh_path;
  std::string domain = "square";
  std::string family = "cr";
  std::string rhs = "constant";
  double rhs_value = 1.0;
  double theta = 0.5;
  int steps = 0;
  double tol = 1e-10;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
};

void add_common(CLI::App* cmd, CommonOpts* o) {
  cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--mesh", o->mesh_path, "mesh file (ncfem-mesh 2 format)");
  cmd->add_option("--domain", o->domain, "builtin domain: square | crisscross | lshape");
  cmd->add_option("--family", o->family, "cr | morley");
  cmd->add_option("--rhs", o->rhs, "constant | manufactured");
  cmd->add_option("--rhs-value", o->rhs_value, "value for the constant rhs");
  cmd->add_option("--theta", o->theta, "Doerfler bulk parameter in (0,1]");
  cmd->add_option("--steps", o->steps, "refinement steps");
  cmd->add_option("--tol", o->tol, "relative solver tolerance");
  cmd->add_option("--out", o->out_dir, "output directory");
  cmd->add_option("--seed", o->seed, "random seed for seeded subcommands");
}

// flat `key = value` configuration, overridden by command-line flags
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  std::vector<std::string> out;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
      continue;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      continue;
    }
    out.push_back(args[i]);
  }
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::vector<std::string> from_file;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) continue;
    from_file.push_back("--" + key);
    from_file.push_back(value);
  }
  // config values go right after the subcommand so explicit flags win
  std::vector<std::string> merged;
  if (!out.empty()) merged.push_back(out[0]);
  merged.insert(merged.end(), from_file.begin(), from_file.end());
  merged.insert(merged.end(), out.begin() + (out.empty() ? 0 : 1), out.end());
  return merged;
}

std::ofstream open_csv(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/" + name);
  if (!out) throw std::runtime_error("cannot write " + dir + "/" + name);
  return out;
}

int cmd_solve(const CommonOpts& o) {
  const Family family = parse_family(o.family);
  const SourceTerm f = make_rhs(o.rhs, o.rhs_value, family);
  Triangulation mesh = load_mesh(o.mesh_path, o.domain);
  std::ofstream csv = open_csv(o.out_dir, "solve.csv");
  csv << "step,triangles,dofs,energy,error\n";
  SolverOptions opts;
  opts.rel_tol = o.tol;
  for (int step = 0; step <= o.steps; ++step) {
    double energy = 0.0, error = std::nan("");
    int dofs = 0;
    if (family == Family::CR) {
      CrSpace space(mesh);
      const CrFunction u = solve_poisson(space, f, opts);
      energy = energy_norm_cr(u);
      dofs = space.n_dofs();
      if (o.rhs == "manufactured")
        error = manufactured_error(mesh, family, u.coeff, &space, nullptr);
    } else {
      MorleySpace space(mesh);
      const MorleyFunction u = solve_biharmonic(space, f, opts);
      energy = energy_norm_morley(u);
      dofs = space.n_dofs();
      if (o.rhs == "manufactured")
        error = manufactured_error(mesh, family, u.coeff, nullptr, &space);
    }
    csv << step << "," << mesh.n_triangles() << "," << dofs << "," << fmt(energy) << ","
        << fmt(error) << "\n";
    if (step < o.steps) mesh = uniform_refine(mesh, nullptr);
  }
  return 0;
}

void write_adapt_csv(const AdaptiveRun& run, const std::string& out_dir) {
  std::ofstream eta = open_csv(out_dir, "eta.csv");
  eta << "step,triangle,volume2,jump2\n";
  for (size_t s = 0; s < run.steps.size(); ++s)
    for (size_t k = 0; k < run.steps[s].est.local.size(); ++k)
      eta << s << "," << k << "," << fmt(run.steps[s].est.local[k].volume2) << ","
          << fmt(run.steps[s].est.local[k].jump2) << "\n";
  std::ofstream sum = open_csv(out_dir, "summary.csv");
  sum << "step,triangles,dofs,eta,lhs,uhstar_diff,volume_term,eta_layer,eta_refined,"
         "jump_fprime,ratio_layer,ratio_refined,lambda_drel\n";
  for (size_t s = 0; s < run.steps.size(); ++s) {
    const AdaptiveStep& st = run.steps[s];
    sum << s << "," << st.mesh->n_triangles() << "," << st.dofs << "," << fmt(st.est.eta());
    if (st.drel) {
      const DrelReport& d = *st.drel;
      sum << "," << fmt(d.lhs) << "," << fmt(d.uhstar_diff) << "," << fmt(d.volume_term) << ","
          << fmt(d.eta_layer) << "," << fmt(d.eta_refined) << "," << fmt(d.jump_fprime) << ","
          << fmt(d.ratio_layer) << "," << fmt(d.ratio_refined) << "," << fmt(d.lambda_drel);
    } else {
      sum << ",0,0,0,0,0,0,0,0,nan";
    }
    sum << "\n";
  }
}

int cmd_adapt(const CommonOpts& o) {
  const Family family = parse_family(o.family);
  const SourceTerm f = make_rhs(o.rhs, o.rhs_value, family);
  const Triangulation initial = load_mesh(o.mesh_path, o.domain);
  SolverOptions opts;
  opts.rel_tol = o.tol;
  const AdaptiveRun run = adaptive_loop(initial, family, f, o.theta, o.steps, 0.0, 0, opts);
  write_adapt_csv(run, o.out_dir);
  return 0;
}

int cmd_verify_drel(const CommonOpts& o, bool svg) {
  const Family family = parse_family(o.family);
  const SourceTerm f = make_rhs(o.rhs, o.rhs_value, family);
  const Triangulation initial = load_mesh(o.mesh_path, o.domain);

  // The explicit constants require a mesh family with omega0 = 45 deg and
  // M2 <= 8 on every level.  Right isosceles triangles tagged on the
  // hypotenuse are closed under bisection and keep both properties.
  bool right_isosceles = true;
  for (int t = 0; t < initial.n_triangles() && right_isosceles; ++t) {
    const Triangle geo = initial.geometry(t);
    double len[3];
    for (int e = 0; e < 3; ++e) len[e] = (geo.v[(e + 2) % 3] - geo.v[(e + 1) % 3]).norm();
    const int ref = initial.tri(t).ref_edge;
    right_isosceles = len[ref] >= len[(ref + 1) % 3] - 1e-12 &&
                      len[ref] >= len[(ref + 2) % 3] - 1e-12 &&
                      std::fabs(len[(ref + 1) % 3] - len[(ref + 2) % 3]) <= 1e-12 &&
                      std::fabs(len[ref] - std::sqrt(2.0) * len[(ref + 1) % 3]) <= 1e-12;
  }
  double theory_omega0 = 0.0;
  int theory_m2 = 0;
  if (family == Family::CR && right_isosceles) {
    theory_omega0 = M_PI / 4.0;
    theory_m2 = 8;
  }

  SolverOptions opts;
  opts.rel_tol = o.tol;
  const AdaptiveRun run =
      adaptive_loop(initial, family, f, o.theta, o.steps, theory_omega0, theory_m2, opts);

  std::ofstream csv = open_csv(o.out_dir, "drel.csv");
  csv << "step,coarse_dofs,fine_dofs,lhs,uhstar_diff,volume_term,eta_layer,eta_refined,"
         "jump_fprime,ratio_refined,lambda_drel,two_level_ok,refined_bound_ok,drel_ok\n";
  // the self-pair row: identical meshes give a vanishing left-hand side
  csv << "0," << run.steps[0].dofs << "," << run.steps[0].dofs
      << ",0,0,0,0,0,0,0,nan,1,1,1\n";
  bool all_ok = true;
  std::vector<double> xs, ratio_series, bound_series;
  std::string failed;
  for (size_t s = 1; s < run.steps.size(); ++s) {
    const DrelReport& d = *run.steps[s].drel;
    csv << s << "," << d.coarse_dofs << "," << d.fine_dofs << "," << fmt(d.lhs) << ","
        << fmt(d.uhstar_diff) << "," << fmt(d.volume_term) << "," << fmt(d.eta_layer) << ","
        << fmt(d.eta_refined) << "," << fmt(d.jump_fprime) << "," << fmt(d.ratio_refined) << ","
        << fmt(d.lambda_drel) << "," << d.two_level_ok << "," << d.refined_bound_ok << ","
        << d.drel_ok << "\n";
    if (!d.two_level_ok) failed = "two-level comparison bound";
    if (!d.refined_bound_ok) failed = "refined companion bound over F-prime";
    if (!d.drel_ok) failed = "dRel with Lambda_drel";
    all_ok = all_ok && d.two_level_ok && d.refined_bound_ok && d.drel_ok;
    xs.push_back(static_cast<double>(s));
    ratio_series.push_back(d.ratio_refined);
    bound_series.push_back(d.lambda_drel);
  }
  if (svg && !xs.empty())
    write_svg_lineplot(o.out_dir + "/drel.svg", xs, {ratio_series, bound_series},
                       {"ratio", "lambda_drel"});
  if (!all_ok) {
    std::fprintf(stderr, "verify-drel: %s violated\n", failed.c_str());
    return 1;
  }
  return 0;
}

int cmd_verify_constants(const CommonOpts& o, int dim, int trials) {
  if (trials <= 0) throw CLI::ValidationError("--trials", "must be positive");
  struct Row {
    std::string name;
    double measured;
    double bound;
    bool pass;
  };
  std::vector<Row> rows;
  auto add = [&](const std::string& name, double measured, double bound, bool pass) {
    rows.push_back({name, measured, bound, pass});
  };
  auto close_to = [](double a, double b, double tol) { return std::fabs(a - b) <= tol * b; };

  using namespace constants;
  add("lambda1_cr_2d", lambda1_cr(2), 0.629153, lambda1_cr(2) <= 0.629153);
  add("lambda1_cr_3d", lambda1_cr(3), 0.749074, lambda1_cr(3) <= 0.749074);
  add("kappa_morley", kappa_morley(), 0.257457844658,
      close_to(kappa_morley(), 0.257457844658, 1e-12));
  add("cj_bubble_2d", cj_bubble(2), 2.5492, cj_bubble(2) <= 2.5492);
  add("cj_bubble_3d", cj_bubble(3), 3.1822, cj_bubble(3) <= 3.1822);
  add("c_prime_2_m2_8", c_prime_n(2, 8), 0.5924, c_prime_n(2, 8) <= 0.5924);
  add("cj_omega_45deg", cj_omega(M_PI / 4.0), 8.5147,
      close_to(cj_omega(M_PI / 4.0), std::sqrt(145.0 / 2.0), 1e-12));
  add("lambda_drel_45deg_m2_8", lambda_drel(M_PI / 4.0, 8), 12.4121,
      lambda_drel(M_PI / 4.0, 8) <= 12.4121);

  Rng rng(o.seed);
  for (int k = 0; k <= 6; ++k) {
    const LegendreCheck lc = legendre_endpoint_check(k, trials, -1.0, 1.0, o.seed + k);
    add("legendre_endpoint_k" + std::to_string(k), lc.max_random_ratio, lc.bound,
        lc.max_random_ratio <= lc.bound * (1.0 + 1e-12) &&
            close_to(lc.extremal_ratio, lc.bound, 1e-9));
  }
  for (int n = 3; n <= 6; ++n) {
    bool ok = true;
    for (int t = 0; t < std::min(trials, 100); ++t) {
      std::vector<double> x(n);
      for (double& c : x) c = rng.uniform(-1.0, 1.0);
      std::sort(x.begin(), x.end());
      const MinSumCheck mc = min_connected_sum(x);
      ok = ok && (mc.brute == mc.chain);
    }
    add("min_connected_sum_n" + std::to_string(n), ok ? 0.0 : 1.0, 0.0, ok);
  }
  for (int n = 2; n <= 8; ++n) {
    const MaxCompCheck mc = max_component_bound(n, trials, o.seed + n);
    add("max_component_n" + std::to_string(n), mc.max_random_ratio, mc.bound,
        mc.max_random_ratio <= mc.bound + 1e-12 && close_to(mc.extremal_ratio, mc.bound, 1e-9));
  }
  for (int d = 2; d <= std::max(2, dim); ++d) {
    const Simplex ref = Simplex::reference(d);
    const TraceCheck tc = discrete_trace_check(ref, trials, o.seed + d);
    const bool ok = tc.max_ratio_sum <= 1.0 + 1e-12 && tc.max_ratio_face <= 1.0 + 1e-12 &&
                    tc.max_ratio_vertex <= 1.0 + 1e-12 && tc.eq_constant <= 1e-10 &&
                    tc.eq_face_witness <= 1e-10 && tc.eq_vertex_witness <= 1e-10;
    add("trace_reference_simplex_n" + std::to_string(d),
        std::max({tc.max_ratio_sum, tc.max_ratio_face, tc.max_ratio_vertex}), 1.0, ok);
    const std::vector<double> eig = symmetric_eigenvalues(ref.p1_mass());
    const double vol = ref.volume();
    const bool mass_ok =
        std::fabs(eig.back() - vol / (d + 1.0)) <= 1e-12 &&
        std::fabs(eig.front() - vol / ((d + 1.0) * (d + 2.0))) <= 1e-12;
    add("p1_mass_spectrum_n" + std::to_string(d), eig.back(), vol / (d + 1.0), mass_ok);
    const std::vector<double> beig = symmetric_eigenvalues(ref.bubble_mass());
    const double lmin = std::pow(2.0, d - 3.0) * factorial(2 * d) * factorial(2 * d) * vol /
                        (factorial(3 * d) * factorial(d));
    const bool bubble_ok = std::fabs(beig.front() - lmin) <= 1e-12 * lmin &&
                           std::fabs(beig.back() - (d + 2.0) * lmin) <= 1e-12;
    add("bubble_mass_spectrum_n" + std::to_string(d), beig.front(), lmin, bubble_ok);
  }
  // M3 <= 3 M2 across a refinement hierarchy
  {
    Triangulation mesh = Triangulation::criss_cross_square();
    bool ok = true;
    for (int level = 0; level < 4; ++level) {
      const ShapeStats s = mesh.shape_stats();
      ok = ok && (s.m3 <= 3 * s.m2);
      mesh = uniform_refine(mesh, nullptr);
    }
    add("m3_le_3m2", ok ? 0.0 : 1.0, 0.0, ok);
  }

  std::ofstream csv = open_csv(o.out_dir, "constants.csv");
  csv << "name,measured,bound,pass\n";
  bool all = true;
  for (const Row& r : rows) {
    csv << r.name << "," << fmt(r.measured) << "," << fmt(r.bound) << "," << (r.pass ? 1 : 0)
        << "\n";
    std::printf("%-32s measured=%-22.15g bound=%-18.10g %s\n", r.name.c_str(), r.measured,
                r.bound, r.pass ? "pass" : "FAIL");
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

int cmd_mesh_info(const CommonOpts& o, const std::string& write_path) {
  const Triangulation mesh = load_mesh(o.mesh_path, o.domain);
  const ShapeStats s = mesh.shape_stats();
  std::printf("vertices   %d\n", mesh.n_vertices());
  std::printf("triangles  %d\n", mesh.n_triangles());
  std::printf("edges      %d\n", mesh.n_edges());
  std::printf("omega0     %.6f deg\n", s.omega0 * 180.0 / M_PI);
  std::printf("M2         %d\n", s.m2);
  std::printf("M3         %d\n", s.m3);
  std::printf("patches    %d\n", patch_configurations({&mesh}));
  if (!write_path.empty()) mesh.write_file(write_path);
  return 0;
}

}  // namespace

void write_svg_lineplot(const std::string& path, const std::vector<double>& x,
                        const std::vector<std::vector<double>>& series,
                        const std::vector<std::string>& labels) {
  const int w = 640, h = 420, ml = 60, mb = 40, mt = 20, mr = 20;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  for (const auto& s : series)
    for (double v : s)
      if (std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double v) { return h - mb - (v - ymin) / (ymax - ymin) * (h - mb - mt); };
  const char* colors[] = {"#1f6fb2", "#b23a1f", "#3ab21f", "#7a1fb2"};
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
  for (size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << colors[s % 4] << "\" points=\"";
    for (size_t i = 0; i < x.size(); ++i)
      if (std::isfinite(series[s][i])) out << px(x[i]) << "," << py(series[s][i]) << " ";
    out << "\"/>\n";
    if (s < labels.size())
      out << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 16 * (s + 1) << "\" fill=\""
          << colors[s % 4] << "\">" << labels[s] << "</text>\n";
  }
  out << "</svg>\n";
}

double Manufactured::cr_u(double x, double y) { return std::sin(M_PI * x) * std::sin(M_PI * y); }

void Manufactured::cr_grad(double x, double y, double* gx, double* gy) {
  *gx = M_PI * std::cos(M_PI * x) * std::sin(M_PI * y);
  *gy = M_PI * std::sin(M_PI * x) * std::cos(M_PI * y);
}

double Manufactured::cr_f(double x, double y) { return 2.0 * M_PI * M_PI * cr_u(x, y); }

double Manufactured::morley_u(double x, double y) {
  const double sx = std::sin(M_PI * x), sy = std::sin(M_PI * y);
  return sx * sx * sy * sy;
}

void Manufactured::morley_hessian(double x, double y, double* uxx, double* uxy, double* uyy) {
  const double p = M_PI;
  const double ax = std::sin(p * x) * std::sin(p * x);
  const double ay = std::sin(p * y) * std::sin(p * y);
  const double axx = 2.0 * p * p * std::cos(2.0 * p * x);
  const double ayy = 2.0 * p * p * std::cos(2.0 * p * y);
  const double axp = p * std::sin(2.0 * p * x);
  const double ayp = p * std::sin(2.0 * p * y);
  *uxx = axx * ay;
  *uyy = ax * ayy;
  *uxy = axp * ayp;
}

double Manufactured::morley_f(double x, double y) {
  const double p4 = std::pow(M_PI, 4);
  const double ax = std::sin(M_PI * x) * std::sin(M_PI * x);
  const double ay = std::sin(M_PI * y) * std::sin(M_PI * y);
  const double cx = std::cos(2.0 * M_PI * x);
  const double cy = std::cos(2.0 * M_PI * y);
  return 8.0 * p4 * (cx * cy - cx * ay - ax * cy);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"nonconforming FEM toolkit"};
  app.require_subcommand(1);

  CommonOpts solve_o, adapt_o, drel_o, const_o, info_o;
  bool drel_svg = false;
  int const_dim = 2;
  int const_trials = 1000;
  std::string info_write;

  add_common(app.add_subcommand("solve", "solve with uniform refinements"), &solve_o);
  add_common(app.add_subcommand("adapt", "adaptive Doerfler loop"), &adapt_o);
  CLI::App* drel = app.add_subcommand("verify-drel", "discrete-reliability experiment");
  add_common(drel, &drel_o);
  drel->add_flag("--svg", drel_svg, "emit an SVG ratio plot");
  CLI::App* vconst = app.add_subcommand("verify-constants", "sharp-constant oracles");
  add_common(vconst, &const_o);
  vconst->add_option("--dim", const_dim, "trace checks up to this simplex dimension (2..4)");
  vconst->add_option("--trials", const_trials, "random trials per oracle");
  CLI::App* info = app.add_subcommand("mesh-info", "mesh statistics");
  add_common(info, &info_o);
  info->add_option("--write", info_write, "write the mesh back to this path");

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "ncfem: %s\n", e.what());
    return 2;
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("solve")) return cmd_solve(solve_o);
    if (app.got_subcommand("adapt")) return cmd_adapt(adapt_o);
    if (app.got_subcommand("verify-drel")) return cmd_verify_drel(drel_o, drel_svg);
    if (app.got_subcommand("verify-constants")) {
      if (const_dim < 2 || const_dim > 4)
        throw CLI::ValidationError("--dim", "must be in [2,4]");
      return cmd_verify_constants(const_o, const_dim, const_trials);
    }
    if (app.got_subcommand("mesh-info")) return cmd_mesh_info(info_o, info_write);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "ncfem: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "ncfem: %s\n", e.what());
    return 2;
  } catch (const std::runtime_error& e) {
    // failed solves or violated continuity assertions
    std::fprintf(stderr, "ncfem: %s\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace ncfem::cli
