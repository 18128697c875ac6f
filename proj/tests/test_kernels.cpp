#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cpsi/kernels.hpp"

using namespace cpsi;

namespace {

struct BackendGuard {
  kernels::Backend saved;
  BackendGuard() : saved(kernels::active_backend()) {}
  ~BackendGuard() { kernels::force_backend(saved); }
};

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * (1.0 + std::abs(a) + std::abs(b));
}

}  // namespace

TEST_CASE("scalar kernels match straightforward loops") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  BackendGuard guard;
  kernels::force_backend(kernels::Backend::scalar);
  for (std::size_t n : {1u, 3u, 8u, 17u}) {
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    double dot_ref = 0.0, sq_ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      dot_ref += x[i] * y[i];
      sq_ref += (x[i] - y[i]) * (x[i] - y[i]);
    }
    CHECK(kernels::dot(x.data(), y.data(), n) == doctest::Approx(dot_ref).epsilon(1e-14));
    CHECK(kernels::squared_distance(x.data(), y.data(), n) ==
          doctest::Approx(sq_ref).epsilon(1e-14));
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  if (!kernels::backend_available(kernels::Backend::avx2)) {
    MESSAGE("avx2 unavailable; equivalence test skipped");
    return;
  }
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  BackendGuard guard;

  for (std::size_t n : {1u, 2u, 4u, 5u, 8u, 13u, 32u, 37u}) {
    std::vector<double> x(n), y(n), W(n * n), out_s(n), out_v(n);
    for (auto& v : x) v = u(rng);
    for (auto& v : y) v = u(rng);
    for (auto& v : W) v = u(rng);

    kernels::force_backend(kernels::Backend::scalar);
    const double dot_s = kernels::dot(x.data(), y.data(), n);
    const double sq_s = kernels::squared_distance(x.data(), y.data(), n);
    kernels::matvec(W.data(), n, n, x.data(), out_s.data());
    double aa_s, ab_s, bb_s;
    kernels::quad_sums(x.data(), y.data(), n, aa_s, ab_s, bb_s);

    kernels::force_backend(kernels::Backend::avx2);
    const double dot_v = kernels::dot(x.data(), y.data(), n);
    const double sq_v = kernels::squared_distance(x.data(), y.data(), n);
    kernels::matvec(W.data(), n, n, x.data(), out_v.data());
    double aa_v, ab_v, bb_v;
    kernels::quad_sums(x.data(), y.data(), n, aa_v, ab_v, bb_v);

    CHECK(close(dot_s, dot_v, 1e-13));
    CHECK(close(sq_s, sq_v, 1e-13));
    CHECK(close(aa_s, aa_v, 1e-13));
    CHECK(close(ab_s, ab_v, 1e-13));
    CHECK(close(bb_s, bb_v, 1e-13));
    for (std::size_t i = 0; i < n; ++i) CHECK(close(out_s[i], out_v[i], 1e-13));
  }
}

TEST_CASE("preact and preact_pair agree across backends and with each other") {
  if (!kernels::backend_available(kernels::Backend::avx2)) return;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  BackendGuard guard;
  for (std::size_t d : {1u, 2u, 4u, 8u, 11u}) {
    std::vector<double> Wh(d * d), ha(d), hb(d), wx(d), bias(d);
    for (auto& v : Wh) v = u(rng);
    for (auto& v : ha) v = u(rng);
    for (auto& v : hb) v = u(rng);
    for (auto& v : wx) v = u(rng);
    for (auto& v : bias) v = u(rng);
    const double xa = u(rng), xb = u(rng);

    std::vector<double> ua_s(d), ub_s(d), ua_v(d), ub_v(d), u_single(d);
    kernels::force_backend(kernels::Backend::scalar);
    kernels::preact_pair(Wh.data(), d, ha.data(), hb.data(), wx.data(), xa, xb, bias.data(),
                         ua_s.data(), ub_s.data());
    kernels::preact(Wh.data(), d, ha.data(), wx.data(), xa, bias.data(), u_single.data());
    for (std::size_t i = 0; i < d; ++i) CHECK(close(u_single[i], ua_s[i], 1e-13));

    kernels::force_backend(kernels::Backend::avx2);
    kernels::preact_pair(Wh.data(), d, ha.data(), hb.data(), wx.data(), xa, xb, bias.data(),
                         ua_v.data(), ub_v.data());
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(close(ua_s[i], ua_v[i], 1e-13));
      CHECK(close(ub_s[i], ub_v[i], 1e-13));
    }
  }
}

TEST_CASE("moving average: degenerate width, impulse, convolution oracle") {
  std::vector<double> e(20, 0.0);
  e[9] = 1.0;  // 1-based position 10
  std::vector<double> out(20);

  kernels::moving_average(e.data(), e.size(), 1, out.data());
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(out[i] == e[i]);

  kernels::moving_average(e.data(), e.size(), 5, out.data());
  for (std::size_t i = 0; i < e.size(); ++i) {
    const bool in_window = i + 1 >= 8 && i + 1 <= 12;
    CHECK(out[i] == doctest::Approx(in_window ? 0.2 : 0.0));
  }

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : e) v = u(rng);
  kernels::moving_average(e.data(), e.size(), 5, out.data());
  for (long i = 0; i < 20; ++i) {
    double s = 0.0;
    for (long j = i - 2; j <= i + 2; ++j)
      if (j >= 0 && j < 20) s += e[j];
    CHECK(out[i] == doctest::Approx(s / 5.0).epsilon(1e-12));
  }
}
