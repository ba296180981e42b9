#pragma once

#include <array>
#include <functional>
#include <vector>

#include "ncfem/linalg.hpp"

namespace ncfem {

struct Triangle {
  std::array<Vec2, 3> v;

  double signed_area() const { return 0.5 * (v[1] - v[0]).cross(v[2] - v[0]); }
  double area() const { return std::fabs(signed_area()); }
  double diameter() const;
  Vec2 centroid() const { return (v[0] + v[1] + v[2]) / 3.0; }

  /// Constant gradients of the three barycentric coordinates.
  /// Throws on a degenerate (zero-area) triangle.
  std::array<Vec2, 3> bary_gradients() const;

  std::array<double, 3> bary_coords(Vec2 p) const;
  Vec2 point(double l1, double l2, double l3) const {
    return v[0] * l1 + v[1] * l2 + v[2] * l3;
  }
  bool contains(Vec2 p, double tol = 1e-12) const;
};

/// Polynomial on a triangle in homogeneous barycentric monomials
/// lambda1^a lambda2^b lambda3^c with a+b+c equal to the degree.
class BaryPoly {
 public:
  BaryPoly() = default;
  BaryPoly(Triangle tri, int degree);

  static BaryPoly constant(const Triangle& tri, double c);
  static BaryPoly barycentric(const Triangle& tri, int i);
  static BaryPoly affine_from_vertex_values(const Triangle& tri, double v0, double v1, double v2);

  const Triangle& triangle() const { return tri_; }
  int degree() const { return degree_; }
  int n_terms() const { return static_cast<int>(coeff_.size()); }

  double& at(int /*a*/, int b, int c) { return coeff_[index(b, c)]; }
  double at(int /*a*/, int b, int c) const { return coeff_[index(b, c)]; }

  double eval_bary(double l1, double l2, double l3) const;
  double eval(Vec2 p) const;

  BaryPoly operator+(const BaryPoly& o) const;
  BaryPoly operator-(const BaryPoly& o) const;
  BaryPoly operator*(const BaryPoly& o) const;
  BaryPoly operator*(double s) const;
  BaryPoly& operator+=(const BaryPoly& o) { *this = *this + o; return *this; }

  /// Homogeneous representation of the same polynomial with degree raised
  /// by k (multiplication by (lambda1+lambda2+lambda3)^k).
  BaryPoly raised(int k) const;

  /// Cartesian gradient components; degree drops by one.
  std::pair<BaryPoly, BaryPoly> gradient() const;

  /// Bernstein coefficients: for homogeneous representation the change of
  /// basis is diagonal, B_{abc} = binom(d; a,b,c) lambda^a lambda^b lambda^c.
  std::vector<double> bernstein_coefficients() const;

  void for_each_term(const std::function<void(int, int, int, double)>& fn) const;

 private:
  int index(int b, int c) const { return b * (2 * degree_ + 3 - b) / 2 + c; }

  Triangle tri_;
  int degree_ = 0;
  std::vector<double> coeff_;
};

/// Closed-form integral over the triangle via the barycentric moment formula
/// int lambda^a lambda^b lambda^c = a! b! c! 2|T| / (a+b+c+2)!.
double integrate_triangle(const BaryPoly& p, double area);
double integrate_triangle(const BaryPoly& p);

/// Polynomial on an edge of length |F|, monomial coefficients in the chord
/// parameter t in [0,1].
struct EdgePoly {
  double length = 0.0;
  std::vector<double> coeff;  // c_0 + c_1 t + ...

  int degree() const { return static_cast<int>(coeff.size()) - 1; }
  double eval(double t) const;
};

double integrate_edge(const EdgePoly& p);

/// Trace of p along the oriented segment between two of its triangle's
/// vertices (exact binomial expansion).
EdgePoly restrict_to_edge(const BaryPoly& p, int vertex_from, int vertex_to);

/// Trace along an arbitrary segment inside the triangle.
EdgePoly restrict_to_segment(const BaryPoly& p, Vec2 a, Vec2 b);

/// The same polynomial function written in the barycentric coordinates of
/// another (usually nested) triangle; exact.
BaryPoly reexpress(const BaryPoly& p, const Triangle& target);

/// int_T p^2 for convenience.
double l2_norm2(const BaryPoly& p);

/// Gauss-Legendre nodes/weights for [0,1]; exact for degree 2n-1.
struct GaussRule {
  std::vector<double> node;
  std::vector<double> weight;
};
const GaussRule& gauss_rule(int points);

/// Exact integral of a polynomial callback of known degree along a segment.
double integrate_segment(Vec2 a, Vec2 b, int degree, const std::function<double(Vec2)>& f);

/// Symmetric-in-spirit quadrature over a triangle, exact for polynomials up
/// to the requested total degree (collapsed Gauss product rule).
class TriangleQuadrature {
 public:
  explicit TriangleQuadrature(int degree);

  double integrate(const Triangle& tri, const std::function<double(Vec2)>& f) const;
  int size() const { return static_cast<int>(weight_.size()); }

 private:
  std::vector<std::array<double, 3>> bary_;
  std::vector<double> weight_;  // sums to 1
};

double factorial(int n);

}  // namespace ncfem
