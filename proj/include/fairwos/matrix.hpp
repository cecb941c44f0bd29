#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace fairwos {

// Dense row-major matrix of doubles. The only storage type used for
// features, weights, activations, and gradients.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  double* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const;
};

// Throws NumericError naming `what` if any entry is NaN or Inf.
void ensure_finite(const Mat& m, const std::string& what);

// c = a * b. Shapes checked; inner dimensions must agree.
Mat matmul(const Mat& a, const Mat& b);
// c = a^T * b, without materializing the transpose.
Mat matmul_at_b(const Mat& a, const Mat& b);
// c = a * b^T.
Mat matmul_a_bt(const Mat& a, const Mat& b);

// x * w + bias broadcast over rows; bias may be null. Result checked finite.
Mat linear_forward(const Mat& x, const Mat& w, const Mat* bias);

void add_inplace(Mat& a, const Mat& b);         // a += b
void axpy_inplace(Mat& a, double s, const Mat& b);  // a += s*b
void scale_inplace(Mat& a, double s);

double frobenius_norm(const Mat& m);
double squared_distance_rows(const Mat& a, std::size_t ra, const Mat& b, std::size_t rb);

enum class Activation { relu, sigmoid, softmax_rows };

// Elementwise relu/sigmoid, or row-wise softmax with max-shift. Checked finite.
Mat activation(const Mat& x, Activation kind);

// Derivative mask d(relu)/dz evaluated at preactivation z; the kink at 0
// takes derivative 0.
Mat relu_mask(const Mat& z);

// Mean negative log-likelihood over `mask` rows. For a single-column `pred`
// of positive-class probabilities labels must be 0/1; for a multi-column
// row-stochastic `pred` labels index columns. Probabilities are clipped to
// [1e-12, 1 - 1e-12] before the log.
double cross_entropy_loss(const Mat& pred, const std::vector<int>& labels,
                          const std::vector<int>& mask);

}  // namespace fairwos
