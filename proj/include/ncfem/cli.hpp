#pragma once

#include <string>
#include <vector>

namespace ncfem::cli {

/// Entry point shared by the ncfem binary and the tests.
/// Exit codes: 0 pass, 1 assertion failure, 2 usage/config error.
int run(const std::vector<std::string>& args);

/// Minimal SVG line plot (one polyline per series).
void write_svg_lineplot(const std::string& path, const std::vector<double>& x,
                        const std::vector<std::vector<double>>& series,
                        const std::vector<std::string>& labels);

/// Manufactured solutions used by `solve --rhs manufactured`.
struct Manufactured {
  // Poisson: u = sin(pi x) sin(pi y), f = 2 pi^2 u
  static double cr_u(double x, double y);
  static void cr_grad(double x, double y, double* gx, double* gy);
  static double cr_f(double x, double y);
  // biharmonic: u = sin^2(pi x) sin^2(pi y), f = Delta^2 u
  static double morley_u(double x, double y);
  static void morley_hessian(double x, double y, double* uxx, double* uxy, double* uyy);
  static double morley_f(double x, double y);
};

}  // namespace ncfem::cli
