#include "ncfem/constants.hpp"

#include <algorithm>
#include <cmath>

#include "ncfem/poly.hpp"

namespace ncfem {

namespace constants {

double lambda1_cr(int dim) {
  if (dim == 2) return std::sqrt(19.0 / 48.0);
  if (dim == 3) return std::sqrt(101.0 / 180.0);
  throw std::invalid_argument("lambda1_cr: dim must be 2 or 3");
}

double kappa_morley() { return 0.257457844658; }

double cj_bubble(int dim) {
  const double n = dim;
  return 1.0 + factorial(2 * dim) *
                   std::sqrt(std::pow(2.0, n - 3.0) * (n + 1.0) * (n + 2.0) /
                             (factorial(3 * dim) * factorial(dim)));
}

double companion_m(int dim, int m2) {
  const double n = dim;
  return std::max(n, (m2 - 1.0) * (2.0 * m2 - 1.0) / (6.0 * m2));
}

double c_n(int dim, int m2) {
  const double n = dim;
  const double cj = cj_bubble(dim);
  return cj * cj * companion_m(dim, m2) * n / (n + 1.0);
}

double c_prime_n(int dim, int m2) {
  const double n = dim;
  const double cj = cj_bubble(dim);
  return cj * cj * companion_m(dim, m2) * (n - 1.0) * (n - 1.0) / (n * n * n * (n + 1.0));
}

double c_loc(int m2) { return 1.0 / (16.0 * std::sqrt(3.0) * (1.0 - std::cos(M_PI / m2))); }

namespace {
double cot(double x) { return std::cos(x) / std::sin(x); }

void check_angle(double omega0) {
  if (!(omega0 > 0.0) || omega0 > M_PI / 3.0 + 1e-12)
    throw std::invalid_argument("angle outside (0, 60 degrees]");
}
}  // namespace

double c_inv1(double omega0) {
  check_angle(omega0);
  const double c = cot(omega0);
  const double q = 2.0 * c - cot(2.0 * omega0);
  const double disc = q * q - 3.0;
  if (disc < -1e-12) throw std::invalid_argument("c_inv1: argument outside the cot domain");
  return std::sqrt(24.0 * c * (q + std::sqrt(std::max(disc, 0.0))));
}

double cj_omega(double omega0) {
  check_angle(omega0);
  const double c = cot(omega0);
  const double q = 2.0 * c - cot(2.0 * omega0);
  const double disc = q * q - 3.0;
  if (disc < -1e-12) throw std::invalid_argument("cj_omega: argument outside the cot domain");
  return std::sqrt(97.0 / 4.0 * c * q + 24.0 * c * std::sqrt(std::max(disc, 0.0)));
}

double lambda_drel(double omega0, int m2) {
  if (m2 < 3) throw std::invalid_argument("lambda_drel: M2 < 3");
  const double cj = cj_omega(omega0);
  const double arg = std::max(12.0 * m2, (m2 - 1.0) * (2.0 * m2 - 1.0));
  return (1.0 + 1.0 / std::sqrt(2.0)) / 12.0 *
         std::max(std::sqrt(57.0), cj * std::sqrt(arg));
}

double lambda2_refined_sq(double omega0, int m2) {
  if (m2 < 3) throw std::invalid_argument("lambda2_refined_sq: M2 < 3");
  const double cj = cj_omega(omega0);
  return cj * cj * m2 * std::max(2.0, (m2 - 1.0) * (2.0 * m2 - 1.0) / (6.0 * m2)) / 24.0;
}

}  // namespace constants

Simplex Simplex::reference(int dim) {
  Simplex s;
  s.dim = dim;
  s.vertex.assign(dim + 1, std::vector<double>(dim, 0.0));
  for (int i = 0; i < dim; ++i) s.vertex[i + 1][i] = 1.0;
  return s;
}

namespace {
double det(Mat m) {
  const int n = m.rows();
  double d = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(m(i, k)) > std::fabs(m(piv, k))) piv = i;
    if (std::fabs(m(piv, k)) < 1e-300) return 0.0;
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(m(k, j), m(piv, j));
      d = -d;
    }
    d *= m(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = m(i, k) / m(k, k);
      for (int j = k; j < n; ++j) m(i, j) -= f * m(k, j);
    }
  }
  return d;
}
}  // namespace

double Simplex::volume() const {
  Mat m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = vertex[i + 1][j] - vertex[0][j];
  return std::fabs(det(m)) / factorial(dim);
}

double Simplex::face_measure(int opposite) const {
  // Gram determinant of the face spanned without the opposite vertex
  std::vector<int> ids;
  for (int i = 0; i <= dim; ++i)
    if (i != opposite) ids.push_back(i);
  const int m = dim - 1;
  if (m == 0) return 1.0;
  Mat g(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k)
        s += (vertex[ids[i + 1]][k] - vertex[ids[0]][k]) *
             (vertex[ids[j + 1]][k] - vertex[ids[0]][k]);
      g(i, j) = s;
    }
  return std::sqrt(std::fabs(det(g))) / factorial(m);
}

Mat Simplex::p1_mass() const {
  Mat m(dim + 1, dim + 1);
  const double f = volume() / ((dim + 1.0) * (dim + 2.0));
  for (int i = 0; i <= dim; ++i)
    for (int j = 0; j <= dim; ++j) m(i, j) = f * (i == j ? 2.0 : 1.0);
  return m;
}

Mat Simplex::bubble_mass() const {
  const double n = dim;
  Mat m(dim + 1, dim + 1);
  const double lmin = std::pow(2.0, n - 3.0) * factorial(2 * dim) * factorial(2 * dim) *
                      volume() / (factorial(3 * dim) * factorial(dim));
  for (int i = 0; i <= dim; ++i)
    for (int j = 0; j <= dim; ++j) m(i, j) = lmin * (i == j ? 2.0 : 1.0);
  return m;
}

LegendreCheck legendre_endpoint_check(int k, int trials, double a, double b,
                                      std::uint64_t seed) {
  if (k < 0 || b <= a) throw std::invalid_argument("legendre_endpoint_check: bad arguments");
  LegendreCheck out;
  out.bound = (k + 1.0) / std::sqrt(b - a);

  auto legendre = [&](int m, double xi) {
    double p0 = 1.0, p1 = xi;
    if (m == 0) return p0;
    for (int j = 1; j < m; ++j) {
      const double p2 = ((2.0 * j + 1.0) * xi * p1 - j * p0) / (j + 1.0);
      p0 = p1;
      p1 = p2;
    }
    return p1;
  };
  auto ratio_of = [&](const std::vector<double>& coef) {
    auto f = [&](double x) {
      const double xi = 2.0 * (x - a) / (b - a) - 1.0;
      double s = 0.0;
      for (int j = 0; j <= k; ++j) s += coef[j] * legendre(j, xi);
      return s;
    };
    // ||f|| through plain Gauss quadrature, independent of the Legendre
    // orthogonality relations
    const GaussRule& g = gauss_rule(k + 1);
    double l2 = 0.0;
    for (size_t q = 0; q < g.node.size(); ++q) {
      const double x = a + (b - a) * g.node[q];
      const double v = f(x);
      l2 += g.weight[q] * v * v;
    }
    l2 = std::sqrt(l2 * (b - a));
    return l2 > 0.0 ? std::fabs(f(a)) / l2 : 0.0;
  };

  Rng rng(seed);
  std::vector<double> coef(k + 1);
  for (int trial = 0; trial < trials; ++trial) {
    for (double& c : coef) c = rng.normal();
    out.max_random_ratio = std::max(out.max_random_ratio, ratio_of(coef));
  }
  for (int j = 0; j <= k; ++j) coef[j] = ((j % 2) ? -1.0 : 1.0) * (2.0 * j + 1.0) / 2.0;
  out.extremal_ratio = ratio_of(coef);
  return out;
}

namespace {
std::vector<std::array<int, 2>> pruefer_decode(const std::vector<int>& seq, int n) {
  std::vector<int> degree(n, 1);
  for (int v : seq) ++degree[v];
  std::vector<std::array<int, 2>> edges;
  std::vector<char> used(n, 0);
  for (int v : seq) {
    for (int leaf = 0; leaf < n; ++leaf) {
      if (degree[leaf] == 1 && !used[leaf]) {
        edges.push_back({std::min(leaf, v), std::max(leaf, v)});
        used[leaf] = 1;
        --degree[v];
        break;
      }
    }
  }
  int u = -1, w = -1;
  for (int i = 0; i < n; ++i)
    if (!used[i] && degree[i] == 1) (u < 0 ? u : w) = i;
  edges.push_back({std::min(u, w), std::max(u, w)});
  return edges;
}
}  // namespace

MinSumCheck min_connected_sum(const std::vector<double>& x) {
  const int n = static_cast<int>(x.size());
  if (n < 2 || n > 7) throw std::invalid_argument("min_connected_sum: n must be in [2,7]");
  for (int i = 0; i + 1 < n; ++i)
    if (x[i] > x[i + 1]) throw std::invalid_argument("min_connected_sum: vector not ascending");

  auto value = [&](std::vector<std::array<int, 2>> edges) {
    std::sort(edges.begin(), edges.end());
    double s = 0.0;
    for (const auto& e : edges) {
      const double d = x[e[1]] - x[e[0]];
      s += d * d;
    }
    return s;
  };

  MinSumCheck out;
  out.chain = 0.0;
  for (int j = 0; j + 1 < n; ++j) out.chain += (x[j + 1] - x[j]) * (x[j + 1] - x[j]);

  if (n == 2) {
    out.brute = value({{0, 1}});
    return out;
  }
  // all trees via Pruefer sequences, n^{n-2} of them
  const int len = n - 2;
  std::vector<int> seq(len, 0);
  double best = 1e300;
  while (true) {
    best = std::min(best, value(pruefer_decode(seq, n)));
    int pos = len - 1;
    while (pos >= 0 && seq[pos] == n - 1) seq[pos--] = 0;
    if (pos < 0) break;
    ++seq[pos];
  }
  out.brute = best;
  return out;
}

MaxCompCheck max_component_bound(int n, int trials, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("max_component_bound: n must be >= 2");
  MaxCompCheck out;
  out.bound = (n - 1.0) * (2.0 * n - 1.0) / (6.0 * n);

  auto ratio_of = [&](std::vector<double> v) {
    double mean = 0.0;
    for (double c : v) mean += c;
    mean /= n;
    for (double& c : v) c -= mean;
    std::sort(v.begin(), v.end());
    double diffs = 0.0;
    for (int j = 0; j + 1 < n; ++j) diffs += (v[j + 1] - v[j]) * (v[j + 1] - v[j]);
    if (diffs < 1e-300) return 0.0;
    double mx = 0.0;
    for (double c : v) mx = std::max(mx, c * c);
    return mx / diffs;
  };

  Rng rng(seed);
  std::vector<double> v(n);
  for (int t = 0; t < trials; ++t) {
    for (double& c : v) c = rng.normal();
    out.max_random_ratio = std::max(out.max_random_ratio, ratio_of(v));
  }
  // extremal vector from y = lambda (1, ..., n-1)
  const double lambda = 6.0 / ((n - 1.0) * (2.0 * n - 1.0));
  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) {
    double tail = 0.0;
    for (int j = k + 1; j <= n - 1; ++j) tail += lambda * j;
    x[k] = 1.0 - tail;
  }
  double mean = 0.0;
  for (double c : x) mean += c;
  for (double& c : x) c -= mean / n;  // mean already ~0; guard rounding
  double diffs = 0.0;
  for (int j = 0; j + 1 < n; ++j) diffs += (x[j + 1] - x[j]) * (x[j + 1] - x[j]);
  double mx = 0.0;
  for (double c : x) mx = std::max(mx, c * c);
  out.extremal_ratio = mx / diffs;
  return out;
}

TraceCheck discrete_trace_check(const Simplex& k, int trials, std::uint64_t seed) {
  const int n = k.dim;
  const double vol = k.volume();
  if (vol < 1e-300) throw std::invalid_argument("discrete_trace_check: degenerate simplex");
  const Mat mass = k.p1_mass();

  auto l2sq = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) s += x[i] * mass(i, j) * x[j];
    return s;
  };
  auto face_mean = [&](const std::vector<double>& x, int opposite) {
    double s = 0.0;
    for (int i = 0; i <= n; ++i)
      if (i != opposite) s += x[i];
    return s / n;
  };

  TraceCheck out;
  Rng rng(seed);
  std::vector<double> x(n + 1);
  for (int t = 0; t < trials; ++t) {
    for (double& c : x) c = rng.normal();
    const double rhs = (n + 1.0) / vol * l2sq(x);
    double sum = 0.0, mx_face = 0.0, mx_vertex = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double fm = face_mean(x, j);
      sum += fm * fm;
      mx_face = std::max(mx_face, fm * fm);
      mx_vertex = std::max(mx_vertex, x[j] * x[j]);
    }
    out.max_ratio_sum = std::max(out.max_ratio_sum, sum / rhs);
    out.max_ratio_face = std::max(out.max_ratio_face, 0.5 * n * mx_face / rhs);
    out.max_ratio_vertex = std::max(out.max_ratio_vertex, mx_vertex / (n + 1.0) / rhs);
  }

  auto rel_defect = [&](double lhs, double rhs) { return std::fabs(lhs - rhs) / rhs; };
  // f == 1
  x.assign(n + 1, 1.0);
  out.eq_constant = rel_defect(n + 1.0, (n + 1.0) / vol * l2sq(x));
  // f|_{F_0} = 1, f(P_0) = -n/2
  x.assign(n + 1, 1.0);
  x[0] = -0.5 * n;
  {
    double mx_face = 0.0;
    for (int j = 0; j <= n; ++j) mx_face = std::max(mx_face, face_mean(x, j) * face_mean(x, j));
    out.eq_face_witness = rel_defect(0.5 * n * mx_face, (n + 1.0) / vol * l2sq(x));
  }
  // f|_{F_0} = 1, f(P_0) = -(n+1)
  x.assign(n + 1, 1.0);
  x[0] = -(n + 1.0);
  {
    double mx_vertex = 0.0;
    for (double c : x) mx_vertex = std::max(mx_vertex, c * c);
    out.eq_vertex_witness = rel_defect(mx_vertex / (n + 1.0), (n + 1.0) / vol * l2sq(x));
  }
  return out;
}

double trace_corollary_side_check(const Simplex& k, int trials, std::uint64_t seed) {
  const int n = k.dim;
  // the side opposite vertex 0, treated as an abstract (n-1)-simplex
  const double area = k.face_measure(0);
  const double mf = area / (n * (n + 1.0));
  Rng rng(seed);
  std::vector<double> x(n);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    for (double& c : x) c = rng.normal();
    double l2sq = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) l2sq += x[i] * mf * (i == j ? 2.0 : 1.0) * x[j];
    double mx = 0.0;
    for (double c : x) mx = std::max(mx, c * c);
    worst = std::max(worst, std::sqrt(mx * area / (n * n * l2sq)));
  }
  return worst;
}

}  // namespace ncfem
