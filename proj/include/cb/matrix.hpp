#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "cb/errors.hpp"

namespace cb {

// Dense column-major matrix; columns are the natural access pattern for both
// Householder QR and coordinate descent.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(j) * rows_ + i]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(j) * rows_ + i]; }

  std::span<double> col(int j) { return {data_.data() + static_cast<std::size_t>(j) * rows_, static_cast<std::size_t>(rows_)}; }
  std::span<const double> col(int j) const { return {data_.data() + static_cast<std::size_t>(j) * rows_, static_cast<std::size_t>(rows_)}; }

  std::vector<double> multiply(std::span<const double> x) const {
    std::vector<double> out(rows_, 0.0);
    for (int j = 0; j < cols_; ++j) {
      double xj = x[j];
      if (xj == 0.0) continue;
      auto c = col(j);
      for (int i = 0; i < rows_; ++i) out[i] += c[i] * xj;
    }
    return out;
  }

  std::vector<double> t_multiply(std::span<const double> y) const {
    std::vector<double> out(cols_, 0.0);
    for (int j = 0; j < cols_; ++j) {
      auto c = col(j);
      double s = 0.0;
      for (int i = 0; i < rows_; ++i) s += c[i] * y[i];
      out[j] = s;
    }
    return out;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2_sq(std::span<const double> a) { return dot(a, a); }

// Householder QR of a tall matrix. R lives in the upper triangle, the
// Householder vectors below the diagonal (unit leading entry implicit).
struct QrFactor {
  int n = 0, p = 0;
  Matrix a;                 // n x p, factored in place
  std::vector<double> tau;  // p reflectors

  // Relative pivot test against the largest |R_jj|.
  bool full_rank(double rel_tol = 1e-12) const {
    double mx = 0.0;
    for (int j = 0; j < p; ++j) mx = std::max(mx, std::fabs(a(j, j)));
    if (mx == 0.0) return false;
    for (int j = 0; j < p; ++j)
      if (std::fabs(a(j, j)) < rel_tol * mx) return false;
    return true;
  }

  // y := Q'y in place (length n).
  void apply_qt(std::span<double> y) const {
    for (int j = 0; j < p; ++j) {
      if (tau[j] == 0.0) continue;
      double s = y[j];
      for (int i = j + 1; i < n; ++i) s += a(i, j) * y[i];
      s *= tau[j];
      y[j] -= s;
      for (int i = j + 1; i < n; ++i) y[i] -= a(i, j) * s;
    }
  }

  // Minimizer of ||y - X b||, assuming full rank.
  std::vector<double> solve(std::span<const double> y) const {
    std::vector<double> w(y.begin(), y.end());
    apply_qt(w);
    std::vector<double> beta(p, 0.0);
    for (int j = p - 1; j >= 0; --j) {
      double s = w[j];
      for (int k = j + 1; k < p; ++k) s -= a(j, k) * beta[k];
      beta[j] = s / a(j, j);
    }
    return beta;
  }

  // w = R^{-1} z; draws with covariance (X'X)^{-1} come from R^{-1} normal(p).
  std::vector<double> r_solve(std::span<const double> z) const {
    std::vector<double> w(z.begin(), z.end());
    for (int j = p - 1; j >= 0; --j) {
      double s = w[j];
      for (int k = j + 1; k < p; ++k) s -= a(j, k) * w[k];
      w[j] = s / a(j, j);
    }
    return w;
  }

  // (X'X)^{-1}_{jj} = ||R^{-T} e_j||^2 via a forward solve on R'.
  double xtx_inv_diag(int j) const {
    std::vector<double> w(p, 0.0);
    for (int i = j; i < p; ++i) {
      double s = (i == j) ? 1.0 : 0.0;
      for (int k = j; k < i; ++k) s -= a(k, i) * w[k];
      w[i] = s / a(i, i);
    }
    double out = 0.0;
    for (int i = j; i < p; ++i) out += w[i] * w[i];
    return out;
  }
};

inline QrFactor qr_decompose(const Matrix& x) {
  QrFactor f;
  f.n = x.rows();
  f.p = x.cols();
  f.a = x;
  f.tau.assign(f.p, 0.0);
  if (f.n < f.p) throw rank_error("qr_decompose: need rows >= cols");
  for (int j = 0; j < f.p; ++j) {
    double alpha = f.a(j, j);
    double nrm = 0.0;
    for (int i = j + 1; i < f.n; ++i) nrm += f.a(i, j) * f.a(i, j);
    double xnorm = std::sqrt(alpha * alpha + nrm);
    if (xnorm == 0.0) {
      f.tau[j] = 0.0;
      continue;
    }
    double beta = alpha >= 0.0 ? -xnorm : xnorm;
    f.tau[j] = (beta - alpha) / beta;
    double scale = 1.0 / (alpha - beta);
    for (int i = j + 1; i < f.n; ++i) f.a(i, j) *= scale;
    f.a(j, j) = beta;
    // apply reflector to remaining columns
    for (int k = j + 1; k < f.p; ++k) {
      double s = f.a(j, k);
      for (int i = j + 1; i < f.n; ++i) s += f.a(i, j) * f.a(i, k);
      s *= f.tau[j];
      f.a(j, k) -= s;
      for (int i = j + 1; i < f.n; ++i) f.a(i, k) -= f.a(i, j) * s;
    }
  }
  return f;
}

// Design matrix with lazily cached QR factorizations. The cache makes
// fixed-design refits (same X, fresh y) cost one Q'y apply instead of a full
// factorization; resampled matrices are factored once and discarded.
class DesignMatrix {
 public:
  DesignMatrix() = default;
  DesignMatrix(int n, int p) : m_(n, p) {}
  explicit DesignMatrix(Matrix m) : m_(std::move(m)) {}

  DesignMatrix(const DesignMatrix& o) : standardized(o.standardized), m_(o.m_) {}
  DesignMatrix& operator=(const DesignMatrix& o) {
    if (this != &o) {
      m_ = o.m_;
      standardized = o.standardized;
      std::lock_guard<std::mutex> lock(mu_);
      qr_.reset();
      qr_drop_.clear();
    }
    return *this;
  }

  int n() const { return m_.rows(); }
  int p() const { return m_.cols(); }
  double& at(int i, int j) { return m_(i, j); }
  double at(int i, int j) const { return m_(i, j); }
  const Matrix& mat() const { return m_; }
  std::span<const double> col(int j) const { return m_.col(j); }

  bool standardized = false;

  std::vector<double> apply(std::span<const double> beta) const { return m_.multiply(beta); }
  std::vector<double> xt_y(std::span<const double> y) const { return m_.t_multiply(y); }

  // d' X'X d = ||X d||^2
  double quad_form(std::span<const double> d) const {
    auto xd = m_.multiply(d);
    return norm2_sq(xd);
  }

  const QrFactor& qr() const {
    std::lock_guard<std::mutex> lock(mu_);
    if (!qr_) {
      auto f = std::make_shared<QrFactor>(qr_decompose(m_));
      qr_ = std::move(f);
    }
    return *qr_;
  }

  // QR of X with column j removed, cached per j (profile fits).
  const QrFactor& qr_dropping(int j) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = qr_drop_.find(j);
    if (it == qr_drop_.end()) {
      Matrix red(m_.rows(), m_.cols() - 1);
      int c = 0;
      for (int k = 0; k < m_.cols(); ++k) {
        if (k == j) continue;
        auto src = m_.col(k);
        auto dst = red.col(c++);
        std::copy(src.begin(), src.end(), dst.begin());
      }
      it = qr_drop_.emplace(j, std::make_shared<QrFactor>(qr_decompose(red))).first;
    }
    return *it->second;
  }

 private:
  Matrix m_;
  mutable std::mutex mu_;
  mutable std::shared_ptr<const QrFactor> qr_;
  mutable std::map<int, std::shared_ptr<const QrFactor>> qr_drop_;
};

enum class Standardize { SampleSd, RootMeanSquare };

// Center each column and scale to unit spread. SampleSd matches the
// simulation setup (ddof = 1); RootMeanSquare matches the real-data recipe
// sum x = 0, (1/n) sum x^2 = 1.
inline void standardize_columns(DesignMatrix& x, Standardize mode) {
  int n = x.n(), p = x.p();
  if (n < 2) throw domain_error("standardize_columns: need n >= 2");
  for (int j = 0; j < p; ++j) {
    double mean = 0.0;
    for (int i = 0; i < n; ++i) mean += x.at(i, j);
    mean /= n;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      x.at(i, j) -= mean;
      ss += x.at(i, j) * x.at(i, j);
    }
    double denom = mode == Standardize::SampleSd ? std::sqrt(ss / (n - 1)) : std::sqrt(ss / n);
    if (denom == 0.0) throw degenerate_error("standardize_columns: constant column " + std::to_string(j));
    for (int i = 0; i < n; ++i) x.at(i, j) /= denom;
  }
  x.standardized = true;
}

// Least squares by Householder QR; relative pivot below 1e-12 is an error.
inline std::vector<double> least_squares(const DesignMatrix& x, std::span<const double> y) {
  if (static_cast<int>(y.size()) != x.n()) throw domain_error("least_squares: size mismatch");
  const QrFactor& f = x.qr();
  if (!f.full_rank()) throw rank_error("least_squares: design matrix is rank deficient");
  return f.solve(y);
}

}  // namespace cb
