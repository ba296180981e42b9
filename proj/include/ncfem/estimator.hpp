#pragma once

#include <memory>
#include <optional>

#include "ncfem/companion.hpp"
#include "ncfem/constants.hpp"

namespace ncfem {

struct EtaLocal {
  double volume2 = 0.0;
  double jump2 = 0.0;
  double total2() const { return volume2 + jump2; }
};

EtaLocal eta_local(const CrFunction& u, const SourceTerm& f, int k);
EtaLocal eta_local(const MorleyFunction& u, const SourceTerm& f, int k);

struct EstimatorReport {
  std::vector<EtaLocal> local;
  double total2 = 0.0;

  double eta2_of(const std::vector<int>& set) const;
  double eta() const { return std::sqrt(total2); }
};

EstimatorReport estimate(const CrFunction& u, const SourceTerm& f);
EstimatorReport estimate(const MorleyFunction& u, const SourceTerm& f);

/// Smallest bulk set with sum eta^2 >= theta * total, greedy by size with
/// ties broken by triangle id.
std::vector<int> dorfler_mark(const EstimatorReport& report, double theta);

struct Seminorms {
  double mu = 0.0;
  double rho = 0.0;
};

Seminorms seminorms_mu_rho(const CrFunction& w, int t, const CompanionConfig& config);
Seminorms seminorms_mu_rho(const MorleyFunction& w, int t, const CompanionConfig& config);

struct ConditionReport {
  std::string name;
  bool hard = false;       // asserted against a pinned threshold
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;  // NaN for monitored quantities
};

/// Conditions (C1)-(C7) of the reliability analysis on a refinement pair.
/// CR asserts the known sharp constants; the generic Morley constants are
/// monitored, the exact identities are asserted for both families.
std::vector<ConditionReport> verify_conditions_cr(const RefinementPair& pair,
                                                  const CrFunction& u, const CrFunction& uhat,
                                                  std::uint64_t seed);
std::vector<ConditionReport> verify_conditions_morley(const RefinementPair& pair,
                                                      const MorleyFunction& u,
                                                      const MorleyFunction& uhat,
                                                      std::uint64_t seed);

struct DrelReport {
  int coarse_dofs = 0;
  int fine_dofs = 0;
  double lhs = 0.0;           // || u_hat - u ||_h
  double uhstar_diff = 0.0;   // || u*_hat - u ||_h
  double volume_term = 0.0;   // || h^m f ||_{L2(T \ hat T)}
  double eta_layer = 0.0;     // eta(T, R)
  double eta_refined = 0.0;   // eta(T, T \ hat T)
  double jump_fprime = 0.0;   // (sum_{F'} h_F ||[D^m u] x nu||^2)^{1/2}
  double ratio_layer = 0.0;
  double ratio_refined = 0.0;
  double lambda_drel = 0.0;       // explicit bound, NaN when unavailable
  double lambda2_refined = 0.0;   // explicit Lambda_2 over F', NaN when unavailable
  bool two_level_ok = true;
  bool refined_bound_ok = true;
  bool drel_ok = true;
};

/// Discrete-reliability report for a solved pair.  When theory_omega0 /
/// theory_m2 describe the mesh family the explicit CR bounds are asserted.
DrelReport drel_check(const RefinementPair& pair, const CrFunction& u, const CrFunction& uhat,
                      const SourceTerm& f, double theory_omega0 = 0.0, int theory_m2 = 0);
DrelReport drel_check(const RefinementPair& pair, const MorleyFunction& u,
                      const MorleyFunction& uhat, const SourceTerm& f);

struct CtEstimate {
  double measured = 0.0;     // sup rho_T / mu_T over random samples
  double bound = 0.0;        // c_inv2 * C_J * sqrt(2 C_loc) for CR, NaN for Morley
  double c_inv2 = 0.0;       // exact per-mesh inverse constant for quadratics
};

CtEstimate estimate_ct(const Triangulation& mesh, Family family, int samples,
                       std::uint64_t seed);

/// Exact inverse-estimate constant sup ||grad p|| h_T / ||p|| over P_degree
/// on the triangles of the mesh (generalized eigenvalue problem).
double measured_c_inv(const Triangulation& mesh, int degree);

struct AdaptiveStep {
  std::unique_ptr<Triangulation> mesh;
  std::unique_ptr<CrSpace> cr_space;
  std::unique_ptr<MorleySpace> morley_space;
  std::vector<double> coeff;
  EstimatorReport est;
  std::optional<DrelReport> drel;  // between the previous mesh and this one
  int dofs = 0;

  CrFunction cr() const { return CrFunction{cr_space.get(), coeff}; }
  MorleyFunction morley() const { return MorleyFunction{morley_space.get(), coeff}; }
};

struct AdaptiveRun {
  Family family = Family::CR;
  std::vector<AdaptiveStep> steps;
};

/// Doerfler-driven solve-estimate-mark-refine loop; emits a DrelReport for
/// every consecutive mesh pair.
AdaptiveRun adaptive_loop(const Triangulation& initial, Family family, const SourceTerm& f,
                          double theta, int steps, double theory_omega0 = 0.0,
                          int theory_m2 = 0, const SolverOptions& opts = {});

}  // namespace ncfem
