#pragma once

#include "ncfem/fem_morley.hpp"

namespace ncfem {

enum class Family { CR, Morley };

/// Side set F' driving the piecewise companion construction.
struct CompanionConfig {
  Family family = Family::CR;
  const Triangulation* mesh = nullptr;
  std::vector<char> fprime;  // flag per edge of *mesh

  static CompanionConfig all(const Triangulation& mesh, Family family);
  static CompanionConfig none(const Triangulation& mesh, Family family);
  /// F' = F \ hat(F) on pair.coarse.
  static CompanionConfig refined(const RefinementPair& pair, Family family);
};

/// Piecewise polynomial companion of a CR function: affine J1 part plus
/// quadratic side-bubble corrections.  Possibly discontinuous off F'.
struct CrCompanion {
  const Triangulation* mesh = nullptr;
  std::vector<BaryPoly> piece;                   // per triangle, degree <= 2
  std::vector<std::array<double, 3>> j1_value;   // averaged nodal values per triangle
  std::vector<std::array<int, 3>> patch_size;    // |T(K,z)| actually used

  double eval(int t, Vec2 p) const { return piece[t].eval(p); }
  Vec2 gradient(int t, Vec2 p) const;
  /// exact mean over local edge e of triangle t
  double edge_mean(int t, int e) const;
};

/// Piecewise HCT companion of a Morley function, plus P5 bubble part.
struct MorleyCompanion {
  HctFunction fn;
  std::vector<std::array<Vec2, 3>> j1_gradient;  // averaged vertex gradients per triangle
  std::vector<std::array<int, 3>> patch_size;

  double eval(int t, Vec2 p) const { return fn.eval(t, p); }
  Vec2 gradient(int t, Vec2 p) const { return fn.gradient(t, p); }
};

CrCompanion cr_j1(const CrFunction& u, const CompanionConfig& config);
CrCompanion cr_jn(const CrFunction& u, const CompanionConfig& config);

/// zero_boundary_rule=false gives the fine-triangulation variant with purely
/// interior gradient averaging (used by the interpolation-constant probes).
MorleyCompanion morley_j1(const MorleyFunction& u, const CompanionConfig& config,
                          bool zero_boundary_rule = true);
MorleyCompanion morley_j2(const MorleyFunction& u, const CompanionConfig& config,
                          bool zero_boundary_rule = true);

/// u*_hat = I_NC-hat (J_n u) with F' = F \ hat(F).  Asserts single-valued
/// fine-edge means; throws when the continuity assertions fail.
CrFunction transfer_cr(const CrFunction& u, const RefinementPair& pair,
                       const CrSpace& fine_space, double tol = 1e-9);

/// u*_hat = I_M-hat (J_2 u) with E' = E \ hat(E).
MorleyFunction transfer_morley(const MorleyFunction& u, const RefinementPair& pair,
                               const MorleySpace& fine_space, double tol = 1e-8);

/// Largest absolute jump of the companion along edges of F' sampled at
/// `probes` points per edge (boundary edges contribute the trace itself).
double cr_companion_max_jump(const CrCompanion& c, const std::vector<char>& fprime, int probes);

struct MorleyJumps {
  double value = 0.0;
  double gradient = 0.0;
};
MorleyJumps morley_companion_max_jump(const MorleyCompanion& c, const std::vector<char>& fprime,
                                      int probes);

/// Exact mean of grad(f).nu along the segment [a,b] inside triangle t of the
/// HCT function's mesh (the segment is clipped against the subtriangle
/// split, then integrated by Gauss rules of sufficient order).
double hct_segment_normal_mean(const HctFunction& f, int t, Vec2 a, Vec2 b, Vec2 nu);

}  // namespace ncfem
