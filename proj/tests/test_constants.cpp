#include <doctest.h>

#include <cmath>

#include "ncfem/constants.hpp"
#include "ncfem/poly.hpp"

using namespace ncfem;

TEST_SUITE_BEGIN("constants");

TEST_CASE("closed-form constant table reproduces the decimal bounds") {
  using namespace constants;
  CHECK(lambda1_cr(2) == doctest::Approx(std::sqrt(19.0 / 48.0)));
  CHECK(lambda1_cr(2) <= 0.629153);
  CHECK(lambda1_cr(3) <= 0.749074);
  CHECK_THROWS(lambda1_cr(4));
  CHECK(kappa_morley() == doctest::Approx(0.257457844658));
  CHECK(cj_bubble(2) == doctest::Approx(1.0 + 2.0 * std::sqrt(3.0 / 5.0)).epsilon(1e-13));
  CHECK(cj_bubble(2) <= 2.5492);
  CHECK(cj_bubble(3) == doctest::Approx(1.0 + 10.0 / std::sqrt(21.0)).epsilon(1e-13));
  CHECK(cj_bubble(3) <= 3.1822);
  CHECK(c_prime_n(2, 8) <= 0.5924);
  CHECK(c_loc(8) == doctest::Approx(1.0 / (16.0 * std::sqrt(3.0) * (1.0 - std::cos(M_PI / 8)))));
}

TEST_CASE("angle-dependent constants at 45 degrees") {
  using namespace constants;
  // C_J(45deg) = sqrt(145/2), c_inv1(45deg) = sqrt(72)
  CHECK(cj_omega(M_PI / 4) == doctest::Approx(std::sqrt(145.0 / 2.0)).epsilon(1e-13));
  CHECK(cj_omega(M_PI / 4) <= 8.5147);
  CHECK(c_inv1(M_PI / 4) == doctest::Approx(std::sqrt(72.0)).epsilon(1e-13));
  // Lambda_drel(45deg, 8) = (1+1/sqrt2) sqrt(5075/96) <= 12.4121
  const double expect = (1.0 + 1.0 / std::sqrt(2.0)) * std::sqrt(5075.0 / 96.0);
  CHECK(lambda_drel(M_PI / 4, 8) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(lambda_drel(M_PI / 4, 8) <= 12.4121);
  // domain checks
  CHECK_THROWS(lambda_drel(M_PI / 2.5, 8));  // angle above 60 degrees
  CHECK_THROWS(lambda_drel(M_PI / 4, 2));
  // max-branch arithmetic: the formula never drops below the Lambda_1 floor
  for (double deg : {30.0, 40.0, 45.0, 50.0, 60.0})
    for (int m2 : {3, 4, 6, 8, 12})
      CHECK(lambda_drel(deg * M_PI / 180.0, m2) >=
            (1.0 + 1.0 / std::sqrt(2.0)) * std::sqrt(19.0 / 48.0) - 1e-12);
  // decreasing the minimal angle never decreases Lambda_drel
  double prev = 0.0;
  for (double deg : {60.0, 55.0, 50.0, 45.0, 40.0, 35.0, 30.0, 25.0}) {
    const double v = lambda_drel(deg * M_PI / 180.0, 8);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("endpoint bound: sharpness and the k = 1 example") {
  // k = 0: constants attain the bound exactly
  const LegendreCheck k0 = legendre_endpoint_check(0, 10, 0.0, 1.0, 5);
  CHECK(k0.bound == doctest::Approx(1.0));
  CHECK(k0.extremal_ratio == doctest::Approx(1.0).epsilon(1e-12));
  // k = 1 on (-1,1): f = 1/2 - 3x/2 gives |f(-1)|/||f|| = sqrt(2)
  const LegendreCheck k1 = legendre_endpoint_check(1, 100, -1.0, 1.0, 5);
  CHECK(k1.bound == doctest::Approx(std::sqrt(2.0)));
  CHECK(k1.extremal_ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  for (int k = 0; k <= 6; ++k) {
    const LegendreCheck lc = legendre_endpoint_check(k, 2000, -0.3, 1.7, 11 + k);
    CHECK(lc.max_random_ratio <= lc.bound * (1.0 + 1e-12));
    CHECK(lc.extremal_ratio >= lc.bound * (1.0 - 1e-9));
    CHECK(lc.extremal_ratio <= lc.bound * (1.0 + 1e-12));
  }
  CHECK_THROWS(legendre_endpoint_check(-1, 1, 0.0, 1.0, 1));
}

TEST_CASE("exhaustive tree minimum equals the chain formula") {
  // hand examples
  const MinSumCheck a = min_connected_sum({0.0, 0.0, 1.0});
  CHECK(a.brute == doctest::Approx(1.0));
  CHECK(a.brute == a.chain);
  const MinSumCheck b = min_connected_sum({2.5, 2.5, 2.5, 2.5});
  CHECK(b.brute == 0.0);
  const MinSumCheck c = min_connected_sum({0.0, 1.0, 3.0});
  CHECK(c.brute == doctest::Approx(5.0));
  CHECK(c.chain == doctest::Approx(5.0));
  CHECK_THROWS(min_connected_sum({0.0}));
  CHECK_THROWS(min_connected_sum({0, 1, 2, 3, 4, 5, 6, 7}));
  CHECK_THROWS(min_connected_sum({1.0, 0.0}));
  // oracle equivalence, bitwise, for n <= 6
  Rng rng(101);
  for (int n = 2; n <= 6; ++n)
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> x(n);
      for (double& v : x) v = rng.uniform(-2, 2);
      std::sort(x.begin(), x.end());
      const MinSumCheck mc = min_connected_sum(x);
      CHECK(mc.brute == mc.chain);
    }
}

TEST_CASE("max-component bound: n = 2 exact, extremal witnesses") {
  const MaxCompCheck two = max_component_bound(2, 100, 3);
  CHECK(two.bound == doctest::Approx(0.25));
  CHECK(two.extremal_ratio == doctest::Approx(0.25));
  const MaxCompCheck three = max_component_bound(3, 1000, 3);
  CHECK(three.bound == doctest::Approx(5.0 / 9.0));
  CHECK(three.extremal_ratio == doctest::Approx(5.0 / 9.0).epsilon(1e-12));
  for (int n = 2; n <= 8; ++n) {
    const MaxCompCheck mc = max_component_bound(n, 5000, 7 + n);
    CHECK(mc.max_random_ratio <= mc.bound + 1e-12);
    CHECK(mc.extremal_ratio >= mc.bound * (1.0 - 1e-9));
  }
  CHECK_THROWS(max_component_bound(1, 10, 1));
}

TEST_CASE("trace inequalities and equality witnesses") {
  Rng rng(13);
  // 100 random triangles
  for (int trial = 0; trial < 100; ++trial) {
    Simplex tri;
    tri.dim = 2;
    tri.vertex = {{rng.uniform(-1, 1), rng.uniform(-1, 1)},
                  {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                  {rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    if (tri.volume() < 0.05) continue;
    const TraceCheck tc = discrete_trace_check(tri, 100, 17 + trial);
    CHECK(tc.max_ratio_sum <= 1.0 + 1e-12);
    CHECK(tc.max_ratio_face <= 1.0 + 1e-12);
    CHECK(tc.max_ratio_vertex <= 1.0 + 1e-12);
    CHECK(tc.eq_constant <= 1e-10);
    CHECK(tc.eq_face_witness <= 1e-10);
    CHECK(tc.eq_vertex_witness <= 1e-10);
  }
  // reference tetrahedron: third witness f(P_j) = -4
  const TraceCheck tet = discrete_trace_check(Simplex::reference(3), 5000, 29);
  CHECK(tet.eq_vertex_witness <= 1e-10);
  CHECK(tet.eq_face_witness <= 1e-10);
  CHECK(tet.eq_constant <= 1e-10);
  CHECK(tet.max_ratio_sum <= 1.0 + 1e-12);
  // 4-simplex still within bounds
  const TraceCheck four = discrete_trace_check(Simplex::reference(4), 2000, 31);
  CHECK(four.max_ratio_sum <= 1.0 + 1e-12);
  Simplex degenerate;
  degenerate.dim = 2;
  degenerate.vertex = {{0, 0}, {1, 0}, {2, 0}};
  CHECK_THROWS(discrete_trace_check(degenerate, 1, 1));
}

TEST_CASE("side version of the trace bound matches the endpoint bound on edges") {
  // |f(P)|^2 <= n^2/|F| ||f||^2 on a side; for n = 2 this is 4/|F| ||f||^2,
  // the k = 1 endpoint bound
  const double worst = trace_corollary_side_check(Simplex::reference(2), 5000, 37);
  CHECK(worst <= 1.0 + 1e-12);
  CHECK(worst >= 0.5);  // random affine data comes close to the bound
  const LegendreCheck k1 = legendre_endpoint_check(1, 10, 0.0, 1.0, 3);
  CHECK(k1.bound == doctest::Approx(2.0));  // (k+1)/sqrt(|F|) with |F| = 1
  // triangular sides of the reference tetrahedron satisfy it as well
  CHECK(trace_corollary_side_check(Simplex::reference(3), 5000, 39) <= 1.0 + 1e-12);
}

TEST_CASE("mass matrices: closed forms, spectra, and the moment-formula route") {
  for (int dim : {2, 3}) {
    const Simplex ref = Simplex::reference(dim);
    const double vol = ref.volume();
    const Mat m = ref.p1_mass();
    // independent route: int lambda_i lambda_j = (1+delta) n! |K| / (n+2)!
    const double off = factorial(dim) * vol / factorial(dim + 2);
    for (int i = 0; i <= dim; ++i)
      for (int j = 0; j <= dim; ++j)
        CHECK(m(i, j) == doctest::Approx((i == j ? 2.0 : 1.0) * off).epsilon(1e-13));
    const std::vector<double> eig = symmetric_eigenvalues(m);
    CHECK(eig.back() == doctest::Approx(vol / (dim + 1.0)).epsilon(1e-12));
    for (size_t k = 0; k + 1 < eig.size(); ++k)
      CHECK(eig[k] == doctest::Approx(vol / ((dim + 1.0) * (dim + 2.0))).epsilon(1e-12));

    // bubble mass from the moment formula: b_F = (2n-1)!/(n-1)! prod lambda
    const double scale = factorial(2 * dim - 1) / factorial(dim - 1);
    auto moment = [&](const std::vector<int>& exps) {
      double num = factorial(dim) * vol;
      int total = 0;
      for (int e : exps) {
        num *= factorial(e);
        total += e;
      }
      return num / factorial(total + dim);
    };
    const Mat b = ref.bubble_mass();
    for (int i = 0; i <= dim; ++i)
      for (int j = 0; j <= dim; ++j) {
        std::vector<int> exps(dim + 1, 0);
        for (int k = 0; k <= dim; ++k) {
          if (k != i) exps[k] += 1;
          if (k != j) exps[k] += 1;
        }
        CHECK(b(i, j) == doctest::Approx(scale * scale * moment(exps)).epsilon(1e-12));
      }
    const std::vector<double> beig = symmetric_eigenvalues(b);
    CHECK(beig.back() == doctest::Approx((dim + 2.0) * beig.front()).epsilon(1e-12));
  }
  // 2D bubble spectrum |T|/5 (double) and 4|T|/5
  const Simplex tri = Simplex::reference(2);
  const std::vector<double> eig = symmetric_eigenvalues(tri.bubble_mass());
  CHECK(eig[0] == doctest::Approx(tri.volume() / 5.0).epsilon(1e-13));
  CHECK(eig[1] == doctest::Approx(tri.volume() / 5.0).epsilon(1e-13));
  CHECK(eig[2] == doctest::Approx(4.0 * tri.volume() / 5.0).epsilon(1e-13));
}

TEST_CASE("2D discrete trace identity for affine functions") {
  // sum_F |mean_F f|^2 = 3 |T|^{-1} ||f||^2 holds exactly in 2D
  Rng rng(41);
  for (int trial = 0; trial < 50; ++trial) {
    Simplex tri;
    tri.dim = 2;
    tri.vertex = {{rng.uniform(-1, 1), rng.uniform(-1, 1)},
                  {rng.uniform(-1, 1), rng.uniform(-1, 1)},
                  {rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    if (tri.volume() < 0.05) continue;
    const double x[3] = {rng.normal(), rng.normal(), rng.normal()};
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double fm = (x[(k + 1) % 3] + x[(k + 2) % 3]) / 2.0;
      sum += fm * fm;
    }
    const Mat m = tri.p1_mass();
    double l2 = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) l2 += x[i] * m(i, j) * x[j];
    CHECK(sum == doctest::Approx(3.0 / tri.volume() * l2).epsilon(1e-12));
  }
}

TEST_SUITE_END();
