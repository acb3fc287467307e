#ifndef ARPO_VCMN_HPP_
#define ARPO_VCMN_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace arpo {

// Dense row-major matrix; just enough linear algebra for the meta-net.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Two-layer bottleneck without biases: b = W2 * relu(W1 * c).
// W1 is (D/r) x D, W2 is D x (D/r); fresh params keep W2 identically zero so
// the injection starts as an exact identity.
struct MetaNetParams {
  std::size_t D = 0;
  std::size_t r = 0;
  Matrix W1;
  Matrix W2;
};

struct VcmnGradients {
  Matrix dW1;
  Matrix dW2;
  Matrix dX;
};

// Column mean of X: the pooled scene context. X must have >= 1 row.
std::vector<double> gap(const Matrix& X);

// b = W2 max(0, W1 c). Throws on any dimension mismatch.
std::vector<double> meta_forward(const MetaNetParams& p, const std::vector<double>& c);

// Adds b to every row. Throws when dim(b) != X.cols.
Matrix inject(const Matrix& X, const std::vector<double>& b);

// inject(X, meta_forward(p, gap(X))).
Matrix vcmn_forward(const MetaNetParams& p, const Matrix& X);

// Analytic gradients of vcmn_forward; ReLU subgradient at 0 is 0.
// dX carries the identity path plus the broadcast-GAP path.
VcmnGradients vcmn_backward(const MetaNetParams& p, const Matrix& X,
                            const Matrix& grad_out);

// W1 uniform in [-1/sqrt(D), 1/sqrt(D)] from the seed; W2 exactly zero.
// Throws unless r >= 1 and D is a positive multiple of r.
MetaNetParams init_params(std::size_t D, std::size_t r, std::uint64_t seed);

std::size_t param_count(const MetaNetParams& p);

// JSON round-trip {D, r, W1 row-major, W2 row-major}; bit-exact for doubles.
std::string params_to_json(const MetaNetParams& p);
MetaNetParams params_from_json(const std::string& text);

}  // namespace arpo

#endif  // ARPO_VCMN_HPP_
