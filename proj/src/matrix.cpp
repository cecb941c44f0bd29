#include "fairwos/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "fairwos/error.hpp"

namespace fairwos {

std::string Mat::shape_str() const {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

void ensure_finite(const Mat& m, const std::string& what) {
  for (double v : m.data) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value in " + what);
    }
  }
}

static void check_inner(const Mat& a, const Mat& b, std::size_t ia, std::size_t ib,
                        const char* op) {
  if (ia != ib) {
    throw ShapeError(std::string(op) + ": inner dimensions disagree, " + a.shape_str() +
                     " vs " + b.shape_str());
  }
}

Mat matmul(const Mat& a, const Mat& b) {
  check_inner(a, b, a.cols, b.rows, "matmul");
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Mat matmul_at_b(const Mat& a, const Mat& b) {
  check_inner(a, b, a.rows, b.rows, "matmul_at_b");
  Mat c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = a.row_ptr(k);
    const double* brow = b.row_ptr(k);
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.row_ptr(i);
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Mat matmul_a_bt(const Mat& a, const Mat& b) {
  check_inner(a, b, a.cols, b.cols, "matmul_a_bt");
  Mat c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* crow = c.row_ptr(i);
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.row_ptr(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      crow[j] = s;
    }
  }
  return c;
}

Mat linear_forward(const Mat& x, const Mat& w, const Mat* bias) {
  Mat out = matmul(x, w);
  if (bias) {
    if (bias->rows != 1 || bias->cols != out.cols) {
      throw ShapeError("linear_forward: bias " + bias->shape_str() + " does not match output " +
                       out.shape_str());
    }
    for (std::size_t i = 0; i < out.rows; ++i) {
      double* row = out.row_ptr(i);
      for (std::size_t j = 0; j < out.cols; ++j) row[j] += (*bias)(0, j);
    }
  }
  ensure_finite(out, "linear_forward output");
  return out;
}

void add_inplace(Mat& a, const Mat& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("add_inplace: " + a.shape_str() + " vs " + b.shape_str());
  }
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

void axpy_inplace(Mat& a, double s, const Mat& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("axpy_inplace: " + a.shape_str() + " vs " + b.shape_str());
  }
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += s * b.data[i];
}

void scale_inplace(Mat& a, double s) {
  for (double& v : a.data) v *= s;
}

double frobenius_norm(const Mat& m) {
  double s = 0.0;
  for (double v : m.data) s += v * v;
  return std::sqrt(s);
}

double squared_distance_rows(const Mat& a, std::size_t ra, const Mat& b, std::size_t rb) {
  if (a.cols != b.cols) {
    throw ShapeError("squared_distance_rows: " + a.shape_str() + " vs " + b.shape_str());
  }
  const double* x = a.row_ptr(ra);
  const double* y = b.row_ptr(rb);
  double s = 0.0;
  for (std::size_t c = 0; c < a.cols; ++c) {
    const double d = x[c] - y[c];
    s += d * d;
  }
  return s;
}

Mat activation(const Mat& x, Activation kind) {
  Mat out(x.rows, x.cols);
  switch (kind) {
    case Activation::relu:
      for (std::size_t i = 0; i < x.data.size(); ++i) {
        out.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
      }
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < x.data.size(); ++i) {
        out.data[i] = 1.0 / (1.0 + std::exp(-x.data[i]));
      }
      break;
    case Activation::softmax_rows:
      for (std::size_t r = 0; r < x.rows; ++r) {
        const double* in = x.row_ptr(r);
        double* o = out.row_ptr(r);
        double mx = in[0];
        for (std::size_t c = 1; c < x.cols; ++c) mx = std::max(mx, in[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c) {
          o[c] = std::exp(in[c] - mx);
          sum += o[c];
        }
        for (std::size_t c = 0; c < x.cols; ++c) o[c] /= sum;
      }
      break;
  }
  ensure_finite(out, "activation output");
  return out;
}

Mat relu_mask(const Mat& z) {
  Mat out(z.rows, z.cols);
  for (std::size_t i = 0; i < z.data.size(); ++i) out.data[i] = z.data[i] > 0.0 ? 1.0 : 0.0;
  return out;
}

double cross_entropy_loss(const Mat& pred, const std::vector<int>& labels,
                          const std::vector<int>& mask) {
  if (mask.empty()) throw ValidationError("cross_entropy_loss: empty mask");
  constexpr double kEps = 1e-12;
  double total = 0.0;
  for (int node : mask) {
    const auto r = static_cast<std::size_t>(node);
    if (r >= pred.rows) throw ValidationError("cross_entropy_loss: mask node out of range");
    const int y = labels[r];
    double p;
    if (pred.cols == 1) {
      if (y != 0 && y != 1) throw ValidationError("cross_entropy_loss: non-binary label");
      p = y == 1 ? pred(r, 0) : 1.0 - pred(r, 0);
    } else {
      if (y < 0 || static_cast<std::size_t>(y) >= pred.cols) {
        throw ValidationError("cross_entropy_loss: label out of class range");
      }
      p = pred(r, static_cast<std::size_t>(y));
    }
    p = std::clamp(p, kEps, 1.0 - kEps);
    total -= std::log(p);
  }
  return total / static_cast<double>(mask.size());
}

}  // namespace fairwos
