#include "arpo/vcmn.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "arpo/rng.hpp"

namespace arpo {

namespace {

void check_params(const MetaNetParams& p) {
  if (p.D == 0 || p.r == 0 || p.D % p.r != 0) {
    throw std::invalid_argument("MetaNetParams: D must be a positive multiple of r");
  }
  const std::size_t hidden = p.D / p.r;
  if (p.W1.rows != hidden || p.W1.cols != p.D) {
    throw std::invalid_argument("MetaNetParams: W1 must be (D/r) x D");
  }
  if (p.W2.rows != p.D || p.W2.cols != hidden) {
    throw std::invalid_argument("MetaNetParams: W2 must be D x (D/r)");
  }
}

}  // namespace

std::vector<double> gap(const Matrix& X) {
  if (X.rows == 0 || X.cols == 0) {
    throw std::invalid_argument("gap: X must have at least one row and column");
  }
  std::vector<double> c(X.cols, 0.0);
  for (std::size_t i = 0; i < X.rows; ++i) {
    for (std::size_t j = 0; j < X.cols; ++j) c[j] += X.at(i, j);
  }
  const double inv_n = 1.0 / static_cast<double>(X.rows);
  for (double& v : c) v *= inv_n;
  return c;
}

std::vector<double> meta_forward(const MetaNetParams& p, const std::vector<double>& c) {
  check_params(p);
  if (c.size() != p.D) {
    throw std::invalid_argument("meta_forward: dim(c) must equal D");
  }
  const std::size_t hidden = p.D / p.r;
  std::vector<double> a(hidden, 0.0);
  for (std::size_t m = 0; m < hidden; ++m) {
    double s = 0.0;
    for (std::size_t d = 0; d < p.D; ++d) s += p.W1.at(m, d) * c[d];
    a[m] = s > 0.0 ? s : 0.0;
  }
  std::vector<double> b(p.D, 0.0);
  for (std::size_t d = 0; d < p.D; ++d) {
    double s = 0.0;
    for (std::size_t m = 0; m < hidden; ++m) s += p.W2.at(d, m) * a[m];
    b[d] = s;
  }
  return b;
}

Matrix inject(const Matrix& X, const std::vector<double>& b) {
  if (b.size() != X.cols) {
    throw std::invalid_argument("inject: dim(b) must equal the column count");
  }
  Matrix out = X;
  for (std::size_t i = 0; i < out.rows; ++i) {
    for (std::size_t j = 0; j < out.cols; ++j) out.at(i, j) += b[j];
  }
  return out;
}

Matrix vcmn_forward(const MetaNetParams& p, const Matrix& X) {
  check_params(p);
  if (X.cols != p.D) {
    throw std::invalid_argument("vcmn_forward: X must have D columns");
  }
  return inject(X, meta_forward(p, gap(X)));
}

VcmnGradients vcmn_backward(const MetaNetParams& p, const Matrix& X,
                            const Matrix& grad_out) {
  check_params(p);
  if (X.cols != p.D) {
    throw std::invalid_argument("vcmn_backward: X must have D columns");
  }
  if (!grad_out.same_shape(X)) {
    throw std::invalid_argument("vcmn_backward: grad_out must match X's shape");
  }
  const std::size_t hidden = p.D / p.r;
  const std::size_t N = X.rows;

  // Recompute the forward intermediates.
  const std::vector<double> c = gap(X);
  std::vector<double> h(hidden, 0.0);
  std::vector<double> a(hidden, 0.0);
  for (std::size_t m = 0; m < hidden; ++m) {
    double s = 0.0;
    for (std::size_t d = 0; d < p.D; ++d) s += p.W1.at(m, d) * c[d];
    h[m] = s;
    a[m] = s > 0.0 ? s : 0.0;
  }

  // b receives every row's gradient because it is broadcast to every row.
  std::vector<double> db(p.D, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t d = 0; d < p.D; ++d) db[d] += grad_out.at(i, d);
  }

  VcmnGradients g;
  g.dW2 = Matrix(p.D, hidden);
  for (std::size_t d = 0; d < p.D; ++d) {
    for (std::size_t m = 0; m < hidden; ++m) g.dW2.at(d, m) = db[d] * a[m];
  }

  std::vector<double> dh(hidden, 0.0);
  for (std::size_t m = 0; m < hidden; ++m) {
    double s = 0.0;
    for (std::size_t d = 0; d < p.D; ++d) s += p.W2.at(d, m) * db[d];
    dh[m] = h[m] > 0.0 ? s : 0.0;  // ReLU subgradient at 0 is 0
  }

  g.dW1 = Matrix(hidden, p.D);
  for (std::size_t m = 0; m < hidden; ++m) {
    for (std::size_t d = 0; d < p.D; ++d) g.dW1.at(m, d) = dh[m] * c[d];
  }

  std::vector<double> dc(p.D, 0.0);
  for (std::size_t d = 0; d < p.D; ++d) {
    double s = 0.0;
    for (std::size_t m = 0; m < hidden; ++m) s += p.W1.at(m, d) * dh[m];
    dc[d] = s;
  }

  g.dX = grad_out;
  const double inv_n = 1.0 / static_cast<double>(N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t d = 0; d < p.D; ++d) g.dX.at(i, d) += inv_n * dc[d];
  }
  return g;
}

MetaNetParams init_params(std::size_t D, std::size_t r, std::uint64_t seed) {
  if (D == 0 || r == 0 || D % r != 0) {
    throw std::invalid_argument("init_params: D must be a positive multiple of r");
  }
  const std::size_t hidden = D / r;
  MetaNetParams p;
  p.D = D;
  p.r = r;
  p.W1 = Matrix(hidden, D);
  p.W2 = Matrix(D, hidden);
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(D));
  for (double& v : p.W1.data) v = (2.0 * uniform01(rng) - 1.0) * bound;
  return p;
}

std::size_t param_count(const MetaNetParams& p) {
  return p.W1.data.size() + p.W2.data.size();
}

std::string params_to_json(const MetaNetParams& p) {
  check_params(p);
  nlohmann::json j;
  j["D"] = p.D;
  j["r"] = p.r;
  j["W1"] = p.W1.data;
  j["W2"] = p.W2.data;
  return j.dump();
}

MetaNetParams params_from_json(const std::string& text) {
  MetaNetParams p;
  std::vector<double> w1, w2;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    p.D = j.at("D").get<std::size_t>();
    p.r = j.at("r").get<std::size_t>();
    w1 = j.at("W1").get<std::vector<double>>();
    w2 = j.at("W2").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("params_from_json: ") + e.what());
  }
  if (p.D == 0 || p.r == 0 || p.D % p.r != 0) {
    throw std::invalid_argument("params_from_json: D must be a positive multiple of r");
  }
  const std::size_t hidden = p.D / p.r;
  p.W1 = Matrix(hidden, p.D);
  p.W2 = Matrix(p.D, hidden);
  if (w1.size() != p.W1.data.size() || w2.size() != p.W2.data.size()) {
    throw std::invalid_argument("params_from_json: weight array size mismatch");
  }
  p.W1.data = std::move(w1);
  p.W2.data = std::move(w2);
  return p;
}

}  // namespace arpo
