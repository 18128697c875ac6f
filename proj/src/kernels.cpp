#include "cpsi/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "cpsi/errors.hpp"

namespace cpsi::kernels {

namespace scalar {

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

double squared_distance(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

void matvec(const double* W, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot(W + r * cols, x, cols);
  }
}

void preact(const double* Wh, std::size_t d, const double* h, const double* wx, double x,
            const double* bias, double* u) {
  for (std::size_t r = 0; r < d; ++r) {
    u[r] = dot(Wh + r * d, h, d) + wx[r] * x + bias[r];
  }
}

void preact_pair(const double* Wh, std::size_t d, const double* ha, const double* hb,
                 const double* wx, double xa, double xb, const double* bias, double* ua,
                 double* ub) {
  for (std::size_t r = 0; r < d; ++r) {
    const double* row = Wh + r * d;
    double sa = 0.0, sb = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      sa += row[c] * ha[c];
      sb += row[c] * hb[c];
    }
    ua[r] = sa + wx[r] * xa + bias[r];
    ub[r] = sb + wx[r] * xb;
  }
}

void quad_sums(const double* da, const double* db, std::size_t n, double& saa, double& sab,
               double& sbb) {
  double aa = 0.0, ab = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    aa += da[i] * da[i];
    ab += da[i] * db[i];
    bb += db[i] * db[i];
  }
  saa = aa;
  sab = ab;
  sbb = bb;
}

}  // namespace scalar

#if defined(__x86_64__) && defined(CPSI_HAVE_AVX2_TU)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
double squared_distance(const double*, const double*, std::size_t);
void matvec(const double*, std::size_t, std::size_t, const double*, double*);
void preact(const double*, std::size_t, const double*, const double*, double, const double*,
            double*);
void preact_pair(const double*, std::size_t, const double*, const double*, const double*, double,
                 double, const double*, double*, double*);
void quad_sums(const double*, const double*, std::size_t, double&, double&, double&);
}  // namespace avx2
#endif

namespace {

struct Ops {
  double (*dot)(const double*, const double*, std::size_t);
  double (*squared_distance)(const double*, const double*, std::size_t);
  void (*matvec)(const double*, std::size_t, std::size_t, const double*, double*);
  void (*preact)(const double*, std::size_t, const double*, const double*, double, const double*,
                 double*);
  void (*preact_pair)(const double*, std::size_t, const double*, const double*, const double*,
                      double, double, const double*, double*, double*);
  void (*quad_sums)(const double*, const double*, std::size_t, double&, double&, double&);
};

constexpr Ops kScalarOps = {scalar::dot,    scalar::squared_distance, scalar::matvec,
                            scalar::preact, scalar::preact_pair,      scalar::quad_sums};

#if defined(__x86_64__) && defined(CPSI_HAVE_AVX2_TU)
constexpr Ops kAvx2Ops = {avx2::dot,    avx2::squared_distance, avx2::matvec,
                          avx2::preact, avx2::preact_pair,      avx2::quad_sums};
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) && defined(CPSI_HAVE_AVX2_TU)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend resolve_backend() {
  if (const char* env = std::getenv("CPSI_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!cpu_has_avx2()) throw InvalidInput("CPSI_KERNELS=avx2 but AVX2 is unavailable");
      return Backend::avx2;
    }
    throw InvalidInput(std::string("unknown CPSI_KERNELS value: ") + env);
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

struct Dispatch {
  Backend backend;
  const Ops* ops;
  Dispatch() : backend(resolve_backend()), ops(&kScalarOps) {
#if defined(__x86_64__) && defined(CPSI_HAVE_AVX2_TU)
    if (backend == Backend::avx2) ops = &kAvx2Ops;
#endif
  }
};

Dispatch& dispatch() {
  static Dispatch d;
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  return cpu_has_avx2();
}

void force_backend(Backend b) {
  if (!backend_available(b))
    throw InvalidInput(std::string("backend unavailable: ") + backend_name(b));
  Dispatch& d = dispatch();
  d.backend = b;
  d.ops = &kScalarOps;
#if defined(__x86_64__) && defined(CPSI_HAVE_AVX2_TU)
  if (b == Backend::avx2) d.ops = &kAvx2Ops;
#endif
}

double dot(const double* x, const double* y, std::size_t n) { return dispatch().ops->dot(x, y, n); }

double squared_distance(const double* x, const double* y, std::size_t n) {
  return dispatch().ops->squared_distance(x, y, n);
}

void matvec(const double* W, std::size_t rows, std::size_t cols, const double* x, double* y) {
  dispatch().ops->matvec(W, rows, cols, x, y);
}

void preact(const double* Wh, std::size_t d, const double* h, const double* wx, double x,
            const double* bias, double* u) {
  dispatch().ops->preact(Wh, d, h, wx, x, bias, u);
}

void preact_pair(const double* Wh, std::size_t d, const double* ha, const double* hb,
                 const double* wx, double xa, double xb, const double* bias, double* ua,
                 double* ub) {
  dispatch().ops->preact_pair(Wh, d, ha, hb, wx, xa, xb, bias, ua, ub);
}

void quad_sums(const double* da, const double* db, std::size_t n, double& saa, double& sab,
               double& sbb) {
  dispatch().ops->quad_sums(da, db, n, saa, sab, sbb);
}

void moving_average(const double* e, std::size_t n, int w, double* out) {
  const int half = (w - 1) / 2;
  const double inv = 1.0 / static_cast<double>(w);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const long lo = static_cast<long>(i) - half;
    const long hi = static_cast<long>(i) + half;
    for (long j = lo < 0 ? 0 : lo; j <= hi && j < static_cast<long>(n); ++j) s += e[j];
    out[i] = s * inv;
  }
}

}  // namespace cpsi::kernels
