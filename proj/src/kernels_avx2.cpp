// AVX2 variants of the dispatched kernels. This translation unit is the only
// one compiled with -mavx2 -mfma; callers reach it through the dispatch table.

#if defined(__x86_64__) && defined(CPSI_HAVE_AVX2_TU)

#include <immintrin.h>

#include <cstddef>

namespace cpsi::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double squared_distance(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return s;
}

void matvec(const double* W, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(W + r * cols, x, cols);
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
    __m256d acca = _mm256_setzero_pd();
    __m256d accb = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= d; c += 4) {
      const __m256d w = _mm256_loadu_pd(row + c);
      acca = _mm256_fmadd_pd(w, _mm256_loadu_pd(ha + c), acca);
      accb = _mm256_fmadd_pd(w, _mm256_loadu_pd(hb + c), accb);
    }
    double sa = hsum(acca);
    double sb = hsum(accb);
    for (; c < d; ++c) {
      sa += row[c] * ha[c];
      sb += row[c] * hb[c];
    }
    ua[r] = sa + wx[r] * xa + bias[r];
    ub[r] = sb + wx[r] * xb;
  }
}

void quad_sums(const double* da, const double* db, std::size_t n, double& saa, double& sab,
               double& sbb) {
  __m256d aa = _mm256_setzero_pd();
  __m256d ab = _mm256_setzero_pd();
  __m256d bb = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(da + i);
    const __m256d b = _mm256_loadu_pd(db + i);
    aa = _mm256_fmadd_pd(a, a, aa);
    ab = _mm256_fmadd_pd(a, b, ab);
    bb = _mm256_fmadd_pd(b, b, bb);
  }
  double raa = hsum(aa), rab = hsum(ab), rbb = hsum(bb);
  for (; i < n; ++i) {
    raa += da[i] * da[i];
    rab += da[i] * db[i];
    rbb += db[i] * db[i];
  }
  saa = raa;
  sab = rab;
  sbb = rbb;
}

}  // namespace cpsi::kernels::avx2

#endif
