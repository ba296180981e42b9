#pragma once

#include <functional>
#include <optional>

#include "ncfem/mesh.hpp"

namespace ncfem {

/// Right-hand side f: a constant, a callback integrated with a fixed-degree
/// quadrature, or an exact piecewise polynomial.
class SourceTerm {
 public:
  static SourceTerm constant(double c);
  static SourceTerm callback(std::function<double(Vec2)> f, int quad_degree = 6);
  static SourceTerm piecewise(std::vector<BaryPoly> pw);

  bool is_zero() const { return kind_ == Kind::Constant && c_ == 0.0; }

  /// int_T f * test  (exact when f is constant or piecewise polynomial)
  double integrate_against(const Triangulation& mesh, int t, const BaryPoly& test) const;
  /// int_T f^2
  double l2_norm2(const Triangulation& mesh, int t) const;

 private:
  enum class Kind { Constant, Callback, Piecewise };
  Kind kind_ = Kind::Constant;
  double c_ = 0.0;
  std::function<double(Vec2)> f_;
  std::vector<BaryPoly> pw_;
  int quad_degree_ = 6;
};

struct SolverOptions {
  double rel_tol = 1e-10;
  int max_iter_per_dof = 20;
};

class CrSpace {
 public:
  /// constrained: homogeneous midpoint values on boundary edges (CR^1_0);
  /// otherwise every edge carries a DOF (CR^1).
  explicit CrSpace(const Triangulation& mesh, bool constrained = true);

  const Triangulation& mesh() const { return *mesh_; }
  int n_dofs() const { return n_dofs_; }
  int dof_of_edge(int e) const { return edge_dof_[e]; }  // -1 on boundary edges
  int edge_of_dof(int d) const { return dof_edge_[d]; }

 private:
  const Triangulation* mesh_;
  std::vector<int> edge_dof_;
  std::vector<int> dof_edge_;
  int n_dofs_ = 0;
};

struct CrFunction {
  const CrSpace* space = nullptr;
  std::vector<double> coeff;

  /// midpoint value on edge e (0 on boundary edges)
  double edge_value(int e) const;
  double eval(int t, Vec2 p) const;
  Vec2 gradient(int t) const;
  BaryPoly local_poly(int t) const;
};

struct CrSystem {
  SparseMatrix stiffness;
  std::vector<double> load;
};

/// a_h(psi_E, psi_F) and F(psi_F) over interior-edge DOFs; boundary DOFs are
/// eliminated.
CrSystem assemble_poisson(const CrSpace& space, const SourceTerm& f);

CrFunction solve_poisson(const CrSpace& space, const SourceTerm& f,
                         const SolverOptions& opts = {});

/// I_NC of an evaluable H^1 function (edge means by Gauss quadrature).
CrFunction interpolate_nc(const CrSpace& target, const std::function<double(Vec2)>& v,
                          int gauss_points = 5);

/// I_NC of a fine Crouzeix-Raviart function onto the coarse space of an
/// admissible refinement pair.  Asserts that the coarse-edge means are
/// single-valued; throws on a violation.
CrFunction interpolate_nc(const CrSpace& target, const CrFunction& fine_v,
                          const RefinementPair& pair, double tol = 1e-9);

/// || D_NC(u_hat - u) ||_{L^2} for a fine function and a coarse function
/// evaluated per fine triangle through the ancestor map.
double energy_norm_diff_cr(const RefinementPair& pair, const CrFunction& coarse_u,
                           const CrFunction& fine_u);

double energy_norm_cr(const CrFunction& u);

}  // namespace ncfem
