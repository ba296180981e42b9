#include "ncfem/poly.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace ncfem {

double Triangle::diameter() const {
  return std::max({(v[1] - v[0]).norm(), (v[2] - v[1]).norm(), (v[0] - v[2]).norm()});
}

std::array<Vec2, 3> Triangle::bary_gradients() const {
  const double a2 = 2.0 * signed_area();
  if (std::fabs(a2) < 1e-300) throw std::runtime_error("degenerate triangle");
  // grad lambda_i is the inward normal of the opposite edge scaled by 1/height
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2 e = v[(i + 2) % 3] - v[(i + 1) % 3];
    g[i] = Vec2{-e.y, e.x} / a2;
  }
  return g;
}

std::array<double, 3> Triangle::bary_coords(Vec2 p) const {
  const double a2 = 2.0 * signed_area();
  if (std::fabs(a2) < 1e-300) throw std::runtime_error("degenerate triangle");
  const double l2 = (p - v[0]).cross(v[0] - v[2]) / ((v[1] - v[0]).cross(v[0] - v[2]));
  const double l3 = (p - v[0]).cross(v[1] - v[0]) / ((v[2] - v[0]).cross(v[1] - v[0]));
  return {1.0 - l2 - l3, l2, l3};
}

bool Triangle::contains(Vec2 p, double tol) const {
  const auto l = bary_coords(p);
  return l[0] >= -tol && l[1] >= -tol && l[2] >= -tol;
}

double factorial(int n) {
  static const std::vector<double> table = [] {
    std::vector<double> t(33);
    t[0] = 1.0;
    for (int i = 1; i < 33; ++i) t[i] = t[i - 1] * i;
    return t;
  }();
  return table.at(n);
}

BaryPoly::BaryPoly(Triangle tri, int degree)
    : tri_(tri), degree_(degree), coeff_((degree + 1) * (degree + 2) / 2, 0.0) {}

BaryPoly BaryPoly::constant(const Triangle& tri, double c) {
  BaryPoly p(tri, 0);
  p.coeff_[0] = c;
  return p;
}

BaryPoly BaryPoly::barycentric(const Triangle& tri, int i) {
  BaryPoly p(tri, 1);
  if (i == 0) p.at(1, 0, 0) = 1.0;
  if (i == 1) p.at(0, 1, 0) = 1.0;
  if (i == 2) p.at(0, 0, 1) = 1.0;
  return p;
}

BaryPoly BaryPoly::affine_from_vertex_values(const Triangle& tri, double v0, double v1,
                                             double v2) {
  BaryPoly p(tri, 1);
  p.at(1, 0, 0) = v0;
  p.at(0, 1, 0) = v1;
  p.at(0, 0, 1) = v2;
  return p;
}

void BaryPoly::for_each_term(const std::function<void(int, int, int, double)>& fn) const {
  for (int b = 0; b <= degree_; ++b)
    for (int c = 0; c <= degree_ - b; ++c) {
      const double v = coeff_[index(b, c)];
      if (v != 0.0) fn(degree_ - b - c, b, c, v);
    }
}

double BaryPoly::eval_bary(double l1, double l2, double l3) const {
  double s = 0.0;
  for (int b = 0; b <= degree_; ++b)
    for (int c = 0; c <= degree_ - b; ++c) {
      const double v = coeff_[index(b, c)];
      if (v == 0.0) continue;
      const int a = degree_ - b - c;
      double m = v;
      for (int k = 0; k < a; ++k) m *= l1;
      for (int k = 0; k < b; ++k) m *= l2;
      for (int k = 0; k < c; ++k) m *= l3;
      s += m;
    }
  return s;
}

double BaryPoly::eval(Vec2 p) const {
  const auto l = tri_.bary_coords(p);
  return eval_bary(l[0], l[1], l[2]);
}

BaryPoly BaryPoly::raised(int k) const {
  if (k == 0) return *this;
  // multiply by (l1+l2+l3)^k term by term via repeated single raises
  BaryPoly r = *this;
  for (int step = 0; step < k; ++step) {
    BaryPoly next(tri_, r.degree_ + 1);
    r.for_each_term([&](int a, int b, int c, double v) {
      next.at(a + 1, b, c) += v;
      next.at(a, b + 1, c) += v;
      next.at(a, b, c + 1) += v;
    });
    r = next;
  }
  return r;
}

BaryPoly BaryPoly::operator+(const BaryPoly& o) const {
  const int d = std::max(degree_, o.degree_);
  BaryPoly a = raised(d - degree_);
  BaryPoly b = o.raised(d - o.degree_);
  for (size_t i = 0; i < a.coeff_.size(); ++i) a.coeff_[i] += b.coeff_[i];
  return a;
}

BaryPoly BaryPoly::operator-(const BaryPoly& o) const { return *this + o * (-1.0); }

BaryPoly BaryPoly::operator*(double s) const {
  BaryPoly r = *this;
  for (double& c : r.coeff_) c *= s;
  return r;
}

BaryPoly BaryPoly::operator*(const BaryPoly& o) const {
  BaryPoly r(tri_, degree_ + o.degree_);
  for_each_term([&](int a, int b, int c, double v) {
    o.for_each_term([&](int a2, int b2, int c2, double v2) {
      r.at(a + a2, b + b2, c + c2) += v * v2;
    });
  });
  return r;
}

std::pair<BaryPoly, BaryPoly> BaryPoly::gradient() const {
  const auto g = tri_.bary_gradients();
  const int d = std::max(degree_ - 1, 0);
  BaryPoly gx(tri_, d), gy(tri_, d);
  if (degree_ == 0) return {gx, gy};
  for_each_term([&](int a, int b, int c, double v) {
    if (a > 0) {
      gx.at(a - 1, b, c) += v * a * g[0].x;
      gy.at(a - 1, b, c) += v * a * g[0].y;
    }
    if (b > 0) {
      gx.at(a, b - 1, c) += v * b * g[1].x;
      gy.at(a, b - 1, c) += v * b * g[1].y;
    }
    if (c > 0) {
      gx.at(a, b, c - 1) += v * c * g[2].x;
      gy.at(a, b, c - 1) += v * c * g[2].y;
    }
  });
  return {gx, gy};
}

std::vector<double> BaryPoly::bernstein_coefficients() const {
  std::vector<double> bern(coeff_.size(), 0.0);
  const double df = factorial(degree_);
  for (int b = 0; b <= degree_; ++b)
    for (int c = 0; c <= degree_ - b; ++c) {
      const int a = degree_ - b - c;
      bern[index(b, c)] =
          coeff_[index(b, c)] * factorial(a) * factorial(b) * factorial(c) / df;
    }
  return bern;
}

double integrate_triangle(const BaryPoly& p, double area) {
  double s = 0.0;
  const int d = p.degree();
  const double denom = factorial(d + 2);
  p.for_each_term([&](int a, int b, int c, double v) {
    s += v * factorial(a) * factorial(b) * factorial(c) / denom;
  });
  return s * 2.0 * area;
}

double integrate_triangle(const BaryPoly& p) {
  return integrate_triangle(p, p.triangle().area());
}

double EdgePoly::eval(double t) const {
  double s = 0.0;
  for (int k = degree(); k >= 0; --k) s = s * t + coeff[k];
  return s;
}

double integrate_edge(const EdgePoly& p) {
  double s = 0.0;
  for (size_t k = 0; k < p.coeff.size(); ++k) s += p.coeff[k] / static_cast<double>(k + 1);
  return s * p.length;
}

namespace {
// coefficients of (1-t)^m t^n as polynomial in t
std::vector<double> beta_monomials(int m, int n, int out_degree) {
  std::vector<double> c(out_degree + 1, 0.0);
  double binom = 1.0;
  for (int j = 0; j <= m; ++j) {
    c[n + j] += ((j % 2) ? -1.0 : 1.0) * binom;
    binom = binom * (m - j) / (j + 1);
  }
  return c;
}
}  // namespace

EdgePoly restrict_to_edge(const BaryPoly& p, int vertex_from, int vertex_to) {
  const auto& tri = p.triangle();
  EdgePoly e;
  e.length = (tri.v[vertex_to] - tri.v[vertex_from]).norm();
  e.coeff.assign(p.degree() + 1, 0.0);
  int exps[3];
  p.for_each_term([&](int a, int b, int c, double v) {
    exps[0] = a;
    exps[1] = b;
    exps[2] = c;
    const int other = 3 - vertex_from - vertex_to;
    if (exps[other] != 0) return;  // vanishes on this edge
    const auto mono = beta_monomials(exps[vertex_from], exps[vertex_to], p.degree());
    for (size_t k = 0; k < mono.size(); ++k) e.coeff[k] += v * mono[k];
  });
  return e;
}

EdgePoly restrict_to_segment(const BaryPoly& p, Vec2 a, Vec2 b) {
  // exact via interpolation at Chebyshev points through a Newton form is
  // overkill here; the trace is evaluated through Gauss quadrature instead
  // wherever an integral is needed.  For completeness sample a Vandermonde
  // fit at d+1 Chebyshev points.
  const int d = p.degree();
  const int n = d + 1;
  Mat vdm(n, n);
  std::vector<double> rhs(n);
  for (int i = 0; i < n; ++i) {
    const double t = 0.5 - 0.5 * std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * n));
    double tp = 1.0;
    for (int j = 0; j < n; ++j) {
      vdm(i, j) = tp;
      tp *= t;
    }
    rhs[i] = p.eval(a + (b - a) * t);
  }
  EdgePoly e;
  e.length = (b - a).norm();
  e.coeff = solve_lu(vdm, rhs);
  return e;
}

BaryPoly reexpress(const BaryPoly& p, const Triangle& target) {
  const int d = p.degree();
  // each source barycentric coordinate is affine, hence determined by its
  // values at the target vertices
  std::array<std::vector<BaryPoly>, 3> powers;
  for (int i = 0; i < 3; ++i) {
    const auto& src = p.triangle();
    BaryPoly aff = BaryPoly::affine_from_vertex_values(
        target, src.bary_coords(target.v[0])[i], src.bary_coords(target.v[1])[i],
        src.bary_coords(target.v[2])[i]);
    powers[i].push_back(BaryPoly::constant(target, 1.0));
    for (int k = 1; k <= d; ++k) powers[i].push_back(powers[i][k - 1] * aff);
  }
  BaryPoly out(target, d);
  p.for_each_term([&](int a, int b, int c, double v) {
    out += (powers[0][a] * powers[1][b] * powers[2][c]).raised(d - a - b - c) * v;
  });
  return out;
}

double l2_norm2(const BaryPoly& p) { return integrate_triangle(p * p); }

const GaussRule& gauss_rule(int points) {
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(points);
  if (it != cache.end()) return it->second;

  GaussRule rule;
  rule.node.resize(points);
  rule.weight.resize(points);
  const int n = points;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on P_n over [-1,1]
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.node[i] = 0.5 * (1.0 - x);
    rule.node[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weight[i] = 0.5 * w;
    rule.weight[n - 1 - i] = 0.5 * w;
  }
  auto res = cache.emplace(points, std::move(rule));
  return res.first->second;
}

double integrate_segment(Vec2 a, Vec2 b, int degree, const std::function<double(Vec2)>& f) {
  const int pts = degree / 2 + 1;
  const GaussRule& g = gauss_rule(pts);
  double s = 0.0;
  for (int i = 0; i < pts; ++i) s += g.weight[i] * f(a + (b - a) * g.node[i]);
  return s * (b - a).norm();
}

TriangleQuadrature::TriangleQuadrature(int degree) {
  // collapsed product rule on the reference triangle; the Jacobian (1-u)
  // raises the u-degree by one
  const int nu = (degree + 2) / 2 + 1;
  const int nv = (degree + 1) / 2 + 1;
  const GaussRule& gu = gauss_rule(nu);
  const GaussRule& gv = gauss_rule(nv);
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) {
      const double u = gu.node[i];
      const double x = u;
      const double y = gv.node[j] * (1.0 - u);
      bary_.push_back({1.0 - x - y, x, y});
      weight_.push_back(2.0 * gu.weight[i] * gv.weight[j] * (1.0 - u));
    }
}

double TriangleQuadrature::integrate(const Triangle& tri,
                                     const std::function<double(Vec2)>& f) const {
  double s = 0.0;
  for (size_t k = 0; k < weight_.size(); ++k) {
    const auto& l = bary_[k];
    s += weight_[k] * f(tri.point(l[0], l[1], l[2]));
  }
  return s * tri.area();
}

}  // namespace ncfem
