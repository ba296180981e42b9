#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncfem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }

  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

/// Symmetric 2x2 tensor, used for piecewise-constant Hessians.
struct Sym2 {
  double xx = 0.0, xy = 0.0, yy = 0.0;

  Sym2 operator-(const Sym2& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
  Sym2 operator+(const Sym2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
  Sym2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }

  // Frobenius norm squared (the off-diagonal entry counts twice).
  double frobenius2() const { return xx * xx + 2.0 * xy * xy + yy * yy; }
  // contraction with a direction: (D^2 v) t
  Vec2 apply(Vec2 t) const { return {xx * t.x + xy * t.y, xy * t.x + yy * t.y}; }
};

/// Dense row-major matrix for the small local systems (HCT, Morley basis,
/// mass-matrix spectra).  Not intended for anything large.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

/// Solves the square system A x = b by LU with partial pivoting.
/// Throws std::runtime_error on a (numerically) singular matrix.
std::vector<double> solve_lu(Mat a, std::vector<double> b);

/// Least-squares solution of an overdetermined system via Householder QR.
/// rows >= cols and full column rank required.
std::vector<double> solve_least_squares(const Mat& a, const std::vector<double>& b);

/// All eigenvalues of a symmetric matrix by the cyclic Jacobi method,
/// returned in ascending order.
std::vector<double> symmetric_eigenvalues(Mat a);

/// Largest eigenvalue of the pencil A x = lambda B x with A symmetric and
/// B symmetric positive definite (Cholesky reduction + Jacobi).
double generalized_eig_max(const Mat& a, const Mat& b);

/// Compressed sparse row matrix; assembled from coordinate triplets with
/// duplicate entries summed.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  static SparseMatrix from_triplets(int n, std::vector<std::array<int, 2>> idx,
                                    std::vector<double> val);

  int size() const { return n_; }
  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  std::vector<double> diagonal() const;
  double entry(int i, int j) const;

 private:
  int n_ = 0;
  std::vector<int> row_ptr_;
  std::vector<int> col_;
  std::vector<double> val_;
};

struct CgResult {
  bool converged = false;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients with the diagonal (Jacobi)
/// preconditioner.  Stops when ||b - A x|| <= rel_tol * ||b||.
CgResult pcg_solve(const SparseMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                   double rel_tol, int max_iter);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

/// Deterministic xorshift-based generator.  Identical streams on every
/// platform for a fixed seed; std::mt19937 distributions are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double a, double b);     // [a, b)
  double normal();                        // Box-Muller
  int below(int n);                       // {0, ..., n-1}

 private:
  std::uint64_t s_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Worker count for element-parallel loops; capped by NCFEM_THREADS.
int worker_count();

/// Runs fn(i) for i in [0, n).  Deterministic partition into contiguous
/// chunks; falls back to a serial loop for a single worker.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace ncfem
