#include "mgrn/linalg.hpp"

#include <cmath>

#include "mgrn/errors.hpp"

namespace mgrn {

Mat::Mat(std::size_t rows, std::size_t cols, std::initializer_list<double> values)
    : rows_(rows), cols_(cols), elems_(values) {
  detail::require(elems_.size() == rows * cols, "Mat: initializer size != rows*cols");
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vec affine(const Mat& w, const Vec& x, const Vec& b) {
  if (w.cols() != x.size()) detail::shape_mismatch("affine: W*x", w.rows(), w.cols(), x.size());
  if (w.rows() != b.size()) detail::shape_mismatch("affine: +b", w.rows(), w.cols(), b.size());
  Vec out(w.rows());
  kernels::affine(out.span(), w.span(), x.span(), b.span());
  return out;
}

double sigmoid(double x) {
  // Branch on sign so exp never overflows.
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec sigmoid(const Vec& x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

Vec tanh(const Vec& x) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

Vec hadamard(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) detail::length_mismatch("hadamard", a.size(), b.size());
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

namespace kernels {

void affine(std::span<double> out, std::span<const double> w,
            std::span<const double> x, std::span<const double> b) {
  const std::size_t rows = out.size();
  const std::size_t cols = x.size();
  const double* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r, wp += cols) {
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += wp[c] * x[c];
    out[r] = acc;
  }
}

void matvec_acc(std::span<double> out, std::span<const double> w,
                std::span<const double> x) {
  const std::size_t rows = out.size();
  const std::size_t cols = x.size();
  const double* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r, wp += cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += wp[c] * x[c];
    out[r] += acc;
  }
}

void matvec_t_acc(std::span<double> out, std::span<const double> w,
                  std::span<const double> y) {
  const std::size_t rows = y.size();
  const std::size_t cols = out.size();
  const double* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r, wp += cols) {
    const double yr = y[r];
    for (std::size_t c = 0; c < cols; ++c) out[c] += wp[c] * yr;
  }
}

void outer_acc(std::span<double> w, std::span<const double> y,
               std::span<const double> x) {
  const std::size_t rows = y.size();
  const std::size_t cols = x.size();
  double* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r, wp += cols) {
    const double yr = y[r];
    for (std::size_t c = 0; c < cols; ++c) wp[c] += yr * x[c];
  }
}

void add_acc(std::span<double> out, std::span<const double> x) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += x[i];
}

void sigmoid_inplace(std::span<double> v) {
  for (double& x : v) x = mgrn::sigmoid(x);
}

void tanh_inplace(std::span<double> v) {
  for (double& x : v) x = std::tanh(x);
}

}  // namespace kernels
}  // namespace mgrn
