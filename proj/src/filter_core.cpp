#include "sparsid/filter_core.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace sparsid {

namespace {

std::size_t checked_window(std::size_t taps, std::size_t order) {
  if (taps == 0) throw std::invalid_argument("taps must be positive");
  if (order == 0) throw std::invalid_argument("projection order must be positive");
  return taps + order - 1;
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// Cholesky solve of (A + delta I) s = rhs; lower triangle of `a` is read,
// `chol` is n*n working storage. The order-1 case divides directly so the
// scalar algorithms hit the exact same arithmetic.
void solve_into(const double* a, std::size_t n, double delta, const double* rhs,
                double* out, double* chol) {
  if (n == 1) {
    const double pivot = a[0] + delta;
    if (!(pivot > 0.0) || !std::isfinite(pivot))
      throw SingularSystemError("normal equations are not positive definite");
    out[0] = rhs[0] / pivot;
    return;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j] + delta;
    for (std::size_t t = 0; t < j; ++t) d -= chol[j * n + t] * chol[j * n + t];
    if (!(d > 0.0) || !std::isfinite(d))
      throw SingularSystemError("normal equations are not positive definite");
    const double ljj = std::sqrt(d);
    chol[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t t = 0; t < j; ++t) s -= chol[i * n + t] * chol[j * n + t];
      chol[i * n + j] = s / ljj;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {  // L z = rhs
    double s = rhs[i];
    for (std::size_t t = 0; t < i; ++t) s -= chol[i * n + t] * out[t];
    out[i] = s / chol[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {  // L^T s = z
    double s = out[i];
    for (std::size_t t = i + 1; t < n; ++t) s -= chol[t * n + i] * out[t];
    out[i] = s / chol[i * n + i];
  }
}

void check_update_dims(const FilterState& w, const RegressorBuffer& buf,
                       std::size_t y_size, const ApaParams& p) {
  p.validate();
  if (w.taps() != buf.taps())
    throw DimensionError("filter length does not match regressor buffer");
  if (y_size != p.order)
    throw DimensionError("desired vector length does not match projection order");
  if (p.order > buf.order())
    throw DimensionError("regressor buffer is too shallow for the projection order");
}

}  // namespace

RegressorBuffer::RegressorBuffer(std::size_t taps, std::size_t order)
    : taps_(taps), order_(order), ring_(checked_window(taps, order), 0.0) {}

void RegressorBuffer::push(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("input sample is not finite");
  head_ = (head_ == 0) ? ring_.size() - 1 : head_ - 1;
  ring_[head_] = x;
  ++pushed_;
}

double RegressorBuffer::lag(std::size_t n) const {
  if (n >= ring_.size()) throw std::out_of_range("lag beyond window");
  std::size_t i = head_ + n;
  if (i >= ring_.size()) i -= ring_.size();
  return ring_[i];
}

void RegressorBuffer::fill_window(std::span<double> out) const {
  if (out.size() != ring_.size()) throw DimensionError("window span has wrong size");
  const std::size_t tail = ring_.size() - head_;
  std::memcpy(out.data(), ring_.data() + head_, tail * sizeof(double));
  std::memcpy(out.data() + tail, ring_.data(), head_ * sizeof(double));
}

FilterState::FilterState(std::size_t taps) : coefficients(taps, 0.0) {
  if (taps == 0) throw std::invalid_argument("taps must be positive");
}

void ApaParams::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw std::invalid_argument("mu must be positive and finite");
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw std::invalid_argument("delta must be non-negative and finite");
  if (order == 0) throw std::invalid_argument("projection order must be positive");
}

std::vector<double> compute_error(const RegressorBuffer& buf, const FilterState& w,
                                  std::span<const double> y) {
  if (w.taps() != buf.taps())
    throw DimensionError("filter length does not match regressor buffer");
  if (y.empty() || y.size() > buf.order())
    throw DimensionError("desired vector length exceeds buffer order");
  std::vector<double> window(buf.window_size());
  buf.fill_window(window);
  std::vector<double> e(y.size());
  for (std::size_t j = 0; j < y.size(); ++j)
    e[j] = y[j] - dot(window.data() + j, w.coefficients.data(), w.taps());
  return e;
}

std::vector<double> solve_regularized_normal(std::span<const double> a, std::size_t n,
                                             double delta, std::span<const double> rhs) {
  if (n == 0) throw DimensionError("system order must be positive");
  if (a.size() != n * n) throw DimensionError("matrix storage is not n*n");
  if (rhs.size() != n) throw DimensionError("rhs length does not match system order");
  for (double v : a)
    if (!std::isfinite(v)) throw std::invalid_argument("matrix entry is not finite");
  for (double v : rhs)
    if (!std::isfinite(v)) throw std::invalid_argument("rhs entry is not finite");
  std::vector<double> out(n);
  std::vector<double> chol(n * n, 0.0);
  solve_into(a.data(), n, delta, rhs.data(), out.data(), chol.data());
  return out;
}

void solve_regularized_normal(std::span<const double> a, std::size_t n, double delta,
                              std::span<const double> rhs, std::span<double> out,
                              std::span<double> chol) {
  if (n == 0) throw DimensionError("system order must be positive");
  if (a.size() != n * n || chol.size() != n * n)
    throw DimensionError("matrix storage is not n*n");
  if (rhs.size() != n || out.size() != n)
    throw DimensionError("vector length does not match system order");
  solve_into(a.data(), n, delta, rhs.data(), out.data(), chol.data());
}

void apa_update(FilterState& w, const RegressorBuffer& buf, std::span<const double> y,
                const ApaParams& p, UpdateScratch& ws) {
  check_update_dims(w, buf, y.size(), p);
  const std::size_t L = w.taps();
  const std::size_t M = p.order;
  ws.window.resize(buf.window_size());
  buf.fill_window(ws.window);
  const double* win = ws.window.data();

  ws.error.resize(M);
  for (std::size_t j = 0; j < M; ++j)
    ws.error[j] = y[j] - dot(win + j, w.coefficients.data(), L);

  ws.gram.resize(M * M);
  ws.chol.assign(M * M, 0.0);
  ws.solution.resize(M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double g = dot(win + i, win + j, L);
      ws.gram[i * M + j] = g;
      ws.gram[j * M + i] = g;
    }
  solve_into(ws.gram.data(), M, p.delta, ws.error.data(), ws.solution.data(),
             ws.chol.data());

  for (std::size_t l = 0; l < L; ++l) {
    double acc = 0.0;
    for (std::size_t j = 0; j < M; ++j) acc += ws.solution[j] * win[j + l];
    w.coefficients[l] += p.mu * acc;
  }
  ++w.iteration;
}

void nlms_update(FilterState& w, const RegressorBuffer& buf, double y,
                 const ApaParams& p, UpdateScratch& ws) {
  check_update_dims(w, buf, 1, p);
  const std::size_t L = w.taps();
  ws.window.resize(buf.window_size());
  buf.fill_window(ws.window);
  const double* x = ws.window.data();

  const double e = y - dot(x, w.coefficients.data(), L);
  const double denom = dot(x, x, L) + p.delta;
  if (denom == 0.0) {  // all-zero window with delta = 0; the limit update is 0
    ++w.iteration;
    return;
  }
  const double s = e / denom;
  for (std::size_t l = 0; l < L; ++l) {
    double acc = s * x[l];
    w.coefficients[l] += p.mu * acc;
  }
  ++w.iteration;
}

}  // namespace sparsid
