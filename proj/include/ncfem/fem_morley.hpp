#pragma once

#include "ncfem/fem_cr.hpp"

namespace ncfem {

/// Morley space: one value DOF per interior vertex, one signed
/// normal-derivative DOF per interior edge (sign tied to the global nu_E).
class MorleySpace {
 public:
  /// constrained: M(T) with clamped boundary DOFs; otherwise M'(T).
  explicit MorleySpace(const Triangulation& mesh, bool constrained = true);

  const Triangulation& mesh() const { return *mesh_; }
  int n_dofs() const { return n_dofs_; }
  int dof_of_vertex(int z) const { return vertex_dof_[z]; }  // -1 on boundary
  int dof_of_edge(int e) const { return edge_dof_[e]; }      // -1 on boundary

  /// Local shape functions on triangle t: value 1 at one vertex or unit
  /// normal derivative at one edge midpoint, all other local DOFs zero.
  /// Index order: vertices 0,1,2 then edges 0,1,2.
  const std::array<BaryPoly, 6>& local_basis(int t) const { return basis_[t]; }
  const std::array<Sym2, 6>& local_hessians(int t) const { return hess_[t]; }

 private:
  const Triangulation* mesh_;
  std::vector<int> vertex_dof_;
  std::vector<int> edge_dof_;
  int n_dofs_ = 0;
  std::vector<std::array<BaryPoly, 6>> basis_;
  std::vector<std::array<Sym2, 6>> hess_;
};

struct MorleyFunction {
  const MorleySpace* space = nullptr;
  std::vector<double> coeff;

  double vertex_value(int z) const;
  double edge_normal_value(int e) const;  // d/d nu_E at mid(E), 0 on boundary
  double local_dof(int t, int i) const;   // i in 0..5
  double eval(int t, Vec2 p) const;
  Vec2 gradient(int t, Vec2 p) const;
  Sym2 hessian(int t) const;
  BaryPoly local_poly(int t) const;
};

struct MorleySystem {
  SparseMatrix stiffness;
  std::vector<double> load;
};

MorleySystem assemble_biharmonic(const MorleySpace& space, const SourceTerm& f);
MorleyFunction solve_biharmonic(const MorleySpace& space, const SourceTerm& f,
                                const SolverOptions& opts = {});

/// I_M of a C^1-evaluable function: vertex values plus edge means of the
/// normal derivative (Gauss quadrature on each edge).
MorleyFunction interpolate_morley(const MorleySpace& target,
                                  const std::function<double(Vec2)>& v,
                                  const std::function<Vec2(Vec2)>& grad_v,
                                  int gauss_points = 5);

/// I_M of a fine Morley function onto the coarse space of an admissible
/// refinement pair.  Coarse vertex values and edge means are read off the
/// (single-valued) fine degrees of freedom.
MorleyFunction interpolate_morley(const MorleySpace& target, const MorleyFunction& fine_v,
                                  const RefinementPair& pair);

double energy_norm_diff_morley(const RefinementPair& pair, const MorleyFunction& coarse_u,
                               const MorleyFunction& fine_u);
double energy_norm_morley(const MorleyFunction& u);

/// Hsieh-Clough-Tocher macro element: three C^1-joined cubics on the
/// subtriangles conv{E, mid(T)}, optionally plus P5 edge-bubble corrections.
struct HctPiece {
  std::array<BaryPoly, 3> cubic;           // piece s lives on subtriangle(t, s)
  std::array<double, 3> bubble = {0, 0, 0};  // coefficients of b_{E,K}
};

struct HctDofs {
  std::array<double, 3> value = {0, 0, 0};
  std::array<Vec2, 3> grad = {};
  std::array<double, 3> normal_deriv = {0, 0, 0};  // at mid(E), sign of global nu_E
};

/// Subtriangle s of triangle t: conv{mid(T), v_{s+1}, v_{s+2}} (contains
/// local edge s).
Triangle hct_subtriangle(const Triangulation& mesh, int t, int s);
int hct_locate_subtriangle(const Triangulation& mesh, int t, Vec2 p);

/// Degree-5 edge bubble on the full triangle with unit edge mean of the
/// normal derivative along local edge e (in the global nu_E direction) and
/// vanishing value/gradient at all vertices.
BaryPoly morley_edge_bubble(const Triangulation& mesh, int t, int e);

/// Solves the 12-DOF C^1-constrained local interpolation problem.
HctPiece hct_solve_local(const Triangulation& mesh, int t, const HctDofs& dofs);

class HctFunction {
 public:
  HctFunction(const Triangulation& mesh, std::vector<HctPiece> pieces)
      : mesh_(&mesh), pieces_(std::move(pieces)) {}

  const Triangulation& mesh() const { return *mesh_; }
  const HctPiece& piece(int t) const { return pieces_[t]; }
  HctPiece& piece(int t) { return pieces_[t]; }

  double eval(int t, Vec2 p) const;
  Vec2 gradient(int t, Vec2 p) const;

  /// Exact mean of the normal derivative along local edge e of triangle t
  /// (direction: global nu_E).
  double edge_normal_mean(int t, int e) const;

 private:
  const Triangulation* mesh_;
  std::vector<HctPiece> pieces_;
};

/// C^1 interpolation of global DOF arrays (values/gradients per vertex,
/// normal-derivative midpoint values per edge).
HctFunction hct_interpolate(const Triangulation& mesh, const std::vector<double>& values,
                            const std::vector<Vec2>& gradients,
                            const std::vector<double>& normal_derivs);

}  // namespace ncfem
