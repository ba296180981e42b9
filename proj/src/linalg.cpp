#include "ncfem/linalg.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace ncfem {

std::vector<double> solve_lu(Mat a, std::vector<double> b) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n)
    throw std::invalid_argument("solve_lu: shape mismatch");
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a(i, k)) > std::fabs(a(piv, k))) piv = i;
    if (std::fabs(a(piv, k)) < 1e-300) throw std::runtime_error("solve_lu: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a(i, k) = 0.0;
      if (f == 0.0) continue;
      for (int j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
    x[i] = s / a(i, i);
  }
  return x;
}

std::vector<double> solve_least_squares(const Mat& a, const std::vector<double>& b) {
  const int m = a.rows();
  const int n = a.cols();
  if (m < n || static_cast<int>(b.size()) != m)
    throw std::invalid_argument("solve_least_squares: shape mismatch");
  Mat r = a;
  std::vector<double> rhs = b;
  // Householder QR applied in place to [r | rhs].
  for (int k = 0; k < n; ++k) {
    double nrm = 0.0;
    for (int i = k; i < m; ++i) nrm += r(i, k) * r(i, k);
    nrm = std::sqrt(nrm);
    if (nrm < 1e-300) throw std::runtime_error("solve_least_squares: rank deficient");
    if (r(k, k) > 0.0) nrm = -nrm;
    std::vector<double> v(m - k);
    v[0] = r(k, k) - nrm;
    for (int i = k + 1; i < m; ++i) v[i - k] = r(i, k);
    double vtv = 0.0;
    for (double vi : v) vtv += vi * vi;
    if (vtv < 1e-300) continue;
    for (int j = k; j < n; ++j) {
      double s = 0.0;
      for (int i = k; i < m; ++i) s += v[i - k] * r(i, j);
      s *= 2.0 / vtv;
      for (int i = k; i < m; ++i) r(i, j) -= s * v[i - k];
    }
    double s = 0.0;
    for (int i = k; i < m; ++i) s += v[i - k] * rhs[i];
    s *= 2.0 / vtv;
    for (int i = k; i < m; ++i) rhs[i] -= s * v[i - k];
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = rhs[i];
    for (int j = i + 1; j < n; ++j) s -= r(i, j) * x[j];
    x[i] = s / r(i, i);
  }
  return x;
}

std::vector<double> symmetric_eigenvalues(Mat a) {
  const int n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("symmetric_eigenvalues: not square");
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off < 1e-300) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double generalized_eig_max(const Mat& a, const Mat& b) {
  const int n = a.rows();
  if (a.cols() != n || b.rows() != n || b.cols() != n)
    throw std::invalid_argument("generalized_eig_max: shape mismatch");
  // Cholesky B = L L^T, then eigenvalues of L^{ -1 } A L^{ -T }.
  Mat l(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double s = b(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("generalized_eig_max: B not SPD");
        l(i, i) = std::sqrt(s);
      } else {
        l(i, j) = s / l(j, j);
      }
    }
  // C = L^{-1} A: forward substitution column-wise, then C L^{-T}.
  Mat c = a;
  for (int col = 0; col < n; ++col)
    for (int i = 0; i < n; ++i) {
      double s = c(i, col);
      for (int k = 0; k < i; ++k) s -= l(i, k) * c(k, col);
      c(i, col) = s / l(i, i);
    }
  // now rows: C := C L^{-T}  (solve L y = row)
  for (int row = 0; row < n; ++row)
    for (int j = 0; j < n; ++j) {
      double s = c(row, j);
      for (int k = 0; k < j; ++k) s -= l(j, k) * c(row, k);
      c(row, j) = s / l(j, j);
    }
  std::vector<double> eig = symmetric_eigenvalues(c);
  return eig.back();
}

SparseMatrix SparseMatrix::from_triplets(int n, std::vector<std::array<int, 2>> idx,
                                         std::vector<double> val) {
  SparseMatrix m;
  m.n_ = n;
  const size_t nnz_in = idx.size();
  std::vector<size_t> order(nnz_in);
  for (size_t i = 0; i < nnz_in; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (idx[a][0] != idx[b][0]) return idx[a][0] < idx[b][0];
    return idx[a][1] < idx[b][1];
  });
  m.row_ptr_.assign(n + 1, 0);
  int prev_r = -1, prev_c = -1;
  for (size_t k : order) {
    const int r = idx[k][0];
    const int c = idx[k][1];
    if (r == prev_r && c == prev_c) {
      m.val_.back() += val[k];
    } else {
      m.col_.push_back(c);
      m.val_.push_back(val[k]);
      ++m.row_ptr_[r + 1];
      prev_r = r;
      prev_c = c;
    }
  }
  for (int i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
  return m;
}

void SparseMatrix::multiply(const std::vector<double>& x, std::vector<double>& y) const {
  y.assign(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += val_[k] * x[col_[k]];
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::diagonal() const {
  std::vector<double> d(n_, 0.0);
  for (int i = 0; i < n_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (col_[k] == i) d[i] = val_[k];
  return d;
}

double SparseMatrix::entry(int i, int j) const {
  for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    if (col_[k] == j) return val_[k];
  return 0.0;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

CgResult pcg_solve(const SparseMatrix& a, const std::vector<double>& b, std::vector<double>& x,
                   double rel_tol, int max_iter) {
  const int n = a.size();
  x.assign(n, 0.0);
  const double bnorm = norm2(b);
  CgResult res;
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  std::vector<double> d = a.diagonal();
  for (double& di : d) di = (di != 0.0) ? 1.0 / di : 1.0;

  std::vector<double> r = b;
  std::vector<double> z(n), p(n), ap(n);
  for (int i = 0; i < n; ++i) z[i] = d[i] * r[i];
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iter; ++it) {
    a.multiply(p, ap);
    const double pap = dot(p, ap);
    if (pap <= 0.0) throw std::runtime_error("pcg_solve: matrix not positive definite");
    const double alpha = rz / pap;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rnorm = norm2(r);
    res.iterations = it + 1;
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual <= rel_tol) {
      res.converged = true;
      return res;
    }
    for (int i = 0; i < n; ++i) z[i] = d[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return res;
}

Rng::Rng(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

std::uint64_t Rng::next_u64() {
  // splitmix64
  s_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  have_spare_ = true;
  return u * f;
}

int Rng::below(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("NCFEM_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1 && cap < hw) hw = cap;
  }
  return hw;
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    const int lo = static_cast<int>(static_cast<long long>(n) * w / workers);
    const int hi = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace ncfem
