#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace mgrn {

/// Fixed-length vector of 64-bit reals. All library arithmetic is double
/// precision; finite-difference gradient checks need ~1e-5 relative accuracy,
/// which single precision cannot deliver.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t n, double value = 0.0) : elems_(n, value) {}
  Vec(std::initializer_list<double> values) : elems_(values) {}
  explicit Vec(std::vector<double> values) : elems_(std::move(values)) {}

  std::size_t size() const { return elems_.size(); }
  double& operator[](std::size_t i) { return elems_[i]; }
  double operator[](std::size_t i) const { return elems_[i]; }
  double* data() { return elems_.data(); }
  const double* data() const { return elems_.data(); }
  std::span<const double> span() const { return elems_; }
  std::span<double> span() { return {elems_.data(), elems_.size()}; }

  auto begin() { return elems_.begin(); }
  auto end() { return elems_.end(); }
  auto begin() const { return elems_.begin(); }
  auto end() const { return elems_.end(); }

  bool operator==(const Vec&) const = default;

 private:
  std::vector<double> elems_;
};

/// Dense row-major matrix of 64-bit reals.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), elems_(rows * cols, value) {}
  Mat(std::size_t rows, std::size_t cols, std::initializer_list<double> values);

  static Mat identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return elems_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return elems_[r * cols_ + c]; }
  double* data() { return elems_.data(); }
  const double* data() const { return elems_.data(); }
  std::span<const double> span() const { return elems_; }
  std::span<double> span() { return {elems_.data(), elems_.size()}; }

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> elems_;
};

/// w*x + b. Throws ShapeError (with both shapes) on dimension mismatch.
Vec affine(const Mat& w, const Vec& x, const Vec& b);

/// Elementwise logistic function, numerically stable for |x| > 700.
Vec sigmoid(const Vec& x);
double sigmoid(double x);

Vec tanh(const Vec& x);

/// Elementwise product; lengths must agree.
Vec hadamard(const Vec& a, const Vec& b);

// Unchecked span kernels shared with the recurrent cells. `out` must not
// alias the inputs.
namespace kernels {

// out = w*x + b where w is rows x cols row-major.
void affine(std::span<double> out, std::span<const double> w,
            std::span<const double> x, std::span<const double> b);

// out += w*x.
void matvec_acc(std::span<double> out, std::span<const double> w,
                std::span<const double> x);

// out += w^T * y where w is rows x cols row-major and y has length rows.
void matvec_t_acc(std::span<double> out, std::span<const double> w,
                  std::span<const double> y);

// w += y * x^T (outer product accumulate), y length rows, x length cols.
void outer_acc(std::span<double> w, std::span<const double> y,
               std::span<const double> x);

void add_acc(std::span<double> out, std::span<const double> x);
void sigmoid_inplace(std::span<double> v);
void tanh_inplace(std::span<double> v);

}  // namespace kernels
}  // namespace mgrn
