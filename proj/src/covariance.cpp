#include "cpsi/covariance.hpp"

#include <cmath>

#include "cpsi/errors.hpp"
#include "cpsi/kernels.hpp"

namespace cpsi {

Covariance::Covariance(std::vector<double> m, int n) : n_(n), m_(std::move(m)) {
  if (n_ <= 0 || m_.size() != static_cast<std::size_t>(n_) * n_)
    throw ModelError("Covariance: bad dimensions");
  for (double v : m_)
    if (!std::isfinite(v)) throw ModelError("Covariance: non-finite entry");
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j)
      if (std::abs(at(i, j) - at(j, i)) > 1e-10 * std::max(1.0, std::abs(at(i, j))))
        throw ModelError("Covariance: not symmetric");

  chol_.assign(m_.size(), 0.0);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = at(i, j);
      for (int k = 0; k < j; ++k) s -= chol_[i * n_ + k] * chol_[j * n_ + k];
      if (i == j) {
        if (s <= 0.0) throw ModelError("Covariance: not positive definite");
        chol_[i * n_ + j] = std::sqrt(s);
      } else {
        chol_[i * n_ + j] = s / chol_[j * n_ + j];
      }
    }
  }
}

Covariance Covariance::identity(int n, double scale) {
  if (!(scale > 0.0)) throw ModelError("Covariance: scale must be positive");
  std::vector<double> m(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i) * n + i] = scale;
  return Covariance(std::move(m), n);
}

Covariance Covariance::ar(int n, double rho, double scale) {
  if (!(scale > 0.0)) throw ModelError("Covariance: scale must be positive");
  if (!(std::abs(rho) < 1.0)) throw ModelError("Covariance: |rho| must be < 1");
  std::vector<double> m(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[static_cast<std::size_t>(i) * n + j] = scale * std::pow(rho, std::abs(i - j));
  return Covariance(std::move(m), n);
}

Covariance Covariance::dense(std::vector<double> entries, int n) {
  return Covariance(std::move(entries), n);
}

std::vector<double> Covariance::mul(std::span<const double> v) const {
  if (static_cast<int>(v.size()) != n_) throw ModelError("Covariance::mul: dimension mismatch");
  std::vector<double> out(n_);
  kernels::matvec(m_.data(), n_, n_, v.data(), out.data());
  return out;
}

double Covariance::quad(std::span<const double> v) const {
  const std::vector<double> sv = mul(v);
  return kernels::dot(v.data(), sv.data(), v.size());
}

}  // namespace cpsi
