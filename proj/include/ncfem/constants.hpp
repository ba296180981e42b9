#pragma once

#include <vector>

#include "ncfem/linalg.hpp"

namespace ncfem {

/// Closed-form constants of the estimator analysis.
namespace constants {

double lambda1_cr(int dim);            // sqrt(19/48) for 2D, sqrt(101/180) for 3D
double kappa_morley();                 // 0.257457844658
double cj_bubble(int dim);             // 1 + (2n)! sqrt(2^{n-3}(n+1)(n+2)/((3n)! n!))
double companion_m(int dim, int m2);   // max{n, (M2-1)(2M2-1)/(6 M2)}
double c_n(int dim, int m2);           // C_J^2 M n/(n+1)
double c_prime_n(int dim, int m2);     // C_J^2 M (n-1)^2/(n^3 (n+1))
double c_loc(int m2);                  // (16 sqrt(3) (1-cos(pi/M2)))^{-1}
double c_inv1(double omega0);          // inverse estimate for affine functions
double cj_omega(double omega0);        // angle-dependent companion constant C_J
/// Lambda_drel(omega0, M2); throws outside 0 < omega0 <= 60 degrees or M2 < 3.
double lambda_drel(double omega0, int m2);
/// Lambda_2^2 for the refined CR bound over F \ hat(F).
double lambda2_refined_sq(double omega0, int m2);

}  // namespace constants

/// n-simplex in R^n given by n+1 vertices (used only on reference simplices
/// and random single simplices; no n>2 meshes exist here).
struct Simplex {
  int dim = 2;
  std::vector<std::vector<double>> vertex;  // (n+1) x n

  static Simplex reference(int dim);
  double volume() const;
  double face_measure(int opposite) const;
  /// P1 mass matrix |K|(1+delta)/((n+1)(n+2)).
  Mat p1_mass() const;
  /// mass matrix of the normalized face bubbles, (1+delta) 2^{n-3}((2n)!)^2|K|/((3n)! n!).
  Mat bubble_mass() const;
};

struct LegendreCheck {
  double bound = 0.0;
  double max_random_ratio = 0.0;
  double extremal_ratio = 0.0;
};
/// Endpoint bound |f(a)| <= (k+1)/sqrt(b-a) ||f|| for polynomials of degree
/// k; the extremal coefficient choice attains it.
LegendreCheck legendre_endpoint_check(int k, int trials, double a, double b,
                                      std::uint64_t seed);

struct MinSumCheck {
  double brute = 0.0;  // exhaustive spanning-tree minimum (Pruefer enumeration)
  double chain = 0.0;  // sum of squared consecutive gaps
};
/// Minimal sum of squared differences over connected graphs; requires
/// 2 <= n <= 7 and an ascending vector.
MinSumCheck min_connected_sum(const std::vector<double>& x_sorted);

struct MaxCompCheck {
  double bound = 0.0;  // (n-1)(2n-1)/(6n)
  double max_random_ratio = 0.0;
  double extremal_ratio = 0.0;
};
/// Sharp max-component bound for mean-zero sorted vectors.
MaxCompCheck max_component_bound(int n, int trials, std::uint64_t seed);

struct TraceCheck {
  double max_ratio_sum = 0.0;      // sum of squared face means vs (n+1)/|K| ||f||^2
  double max_ratio_face = 0.0;     // (n/2) max face mean^2
  double max_ratio_vertex = 0.0;   // max f(P)^2/(n+1)
  double eq_constant = 0.0;        // relative equality defect of f == 1
  double eq_face_witness = 0.0;    // f|_F = 1, f(P) = -n/2
  double eq_vertex_witness = 0.0;  // f|_F = 1, f(P) = -(n+1)
};
/// Discrete trace inequalities for random affine functions on one simplex.
TraceCheck discrete_trace_check(const Simplex& k, int trials, std::uint64_t seed);

/// max |f(P)| sqrt(|F|) / (n ||f||_{L2(F)}) over random affine f on a side of
/// an n-simplex (side version of the trace bound); must stay <= 1.
double trace_corollary_side_check(const Simplex& k, int trials, std::uint64_t seed);

}  // namespace ncfem
