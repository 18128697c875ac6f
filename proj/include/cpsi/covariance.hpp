#pragma once

#include <span>
#include <vector>

namespace cpsi {

// Dense symmetric positive-definite covariance. The Cholesky factor is
// computed eagerly so instances are immutable and thread-safe.
class Covariance {
 public:
  static Covariance identity(int n, double scale = 1.0);
  // Sigma_ij = scale * rho^|i-j|
  static Covariance ar(int n, double rho, double scale = 1.0);
  // Row-major n x n; throws ModelError unless symmetric positive definite.
  static Covariance dense(std::vector<double> entries, int n);

  int dim() const { return n_; }
  double at(int i, int j) const { return m_[static_cast<std::size_t>(i) * n_ + j]; }

  std::vector<double> mul(std::span<const double> v) const;  // Sigma v
  double quad(std::span<const double> v) const;              // v^T Sigma v

  // Lower-triangular factor L with L L^T = Sigma, row-major.
  const std::vector<double>& cholesky() const { return chol_; }

 private:
  Covariance(std::vector<double> m, int n);
  int n_ = 0;
  std::vector<double> m_;
  std::vector<double> chol_;
};

}  // namespace cpsi
