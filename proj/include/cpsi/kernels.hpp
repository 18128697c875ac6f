#pragma once

#include <cstddef>

// Arithmetic inner loops used by the detector and the affine propagation.
// Scalar reference implementations plus an AVX2 variant selected at runtime;
// the two are equivalence-tested against each other. Results may differ from
// the scalar path by accumulation-order rounding only.

namespace cpsi::kernels {

enum class Backend { scalar, avx2 };

// Backend in effect (resolved once, from CPU features and the CPSI_KERNELS
// environment variable: "scalar" or "avx2").
Backend active_backend();
const char* backend_name(Backend b);

// Override the dispatch decision. Throws InvalidInput when the requested
// backend is not usable on this machine. Not thread-safe; call before
// spawning workers.
void force_backend(Backend b);
bool backend_available(Backend b);

double dot(const double* x, const double* y, std::size_t n);

// sum_i (x_i - y_i)^2
double squared_distance(const double* x, const double* y, std::size_t n);

// y = W x with W row-major rows x cols.
void matvec(const double* W, std::size_t rows, std::size_t cols, const double* x, double* y);

// u = Wh h + wx * x + bias, the recurrent pre-activation.
void preact(const double* Wh, std::size_t d, const double* h, const double* wx, double x,
            const double* bias, double* u);

// Same recursion applied to an (a, b) coefficient pair in one pass:
//   ua = Wh ha + wx * xa + bias
//   ub = Wh hb + wx * xb
void preact_pair(const double* Wh, std::size_t d, const double* ha, const double* hb,
                 const double* wx, double xa, double xb, const double* bias, double* ua,
                 double* ub);

// saa = ||da||^2, sab = da . db, sbb = ||db||^2 in one pass.
void quad_sums(const double* da, const double* db, std::size_t n, double& saa, double& sab,
               double& sbb);

// Centered moving average of width w (odd) with zero extension beyond the
// array. Scalar only; not part of the dispatched set.
void moving_average(const double* e, std::size_t n, int w, double* out);

}  // namespace cpsi::kernels
