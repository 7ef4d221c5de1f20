#include "sparsid/proportionate.hpp"

#include <cmath>
#include <stdexcept>

namespace sparsid {

void GainParams::validate() const {
  if (!(alpha >= -1.0 && alpha <= 1.0))
    throw std::invalid_argument("alpha must lie in [-1, 1]");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be positive and finite");
}

void ipapa_gains(const FilterState& w, const GainParams& p, std::vector<double>& out) {
  p.validate();
  const std::size_t L = w.taps();
  out.resize(L);
  double sum_abs = 0.0;
  for (double c : w.coefficients) sum_abs += std::fabs(c);
  const double floor = (1.0 - p.alpha) / (2.0 * static_cast<double>(L));
  const double denom = 2.0 * sum_abs + p.epsilon;
  for (std::size_t l = 0; l < L; ++l)
    out[l] = floor + (1.0 + p.alpha) * std::fabs(w.coefficients[l]) / denom;
}

std::vector<double> ipapa_gains(const FilterState& w, const GainParams& p) {
  std::vector<double> out;
  ipapa_gains(w, p, out);
  return out;
}

SnapshotStore::SnapshotStore(std::span<const double> initial, std::size_t period)
    : snap_current_(initial.begin(), initial.end()),
      snap_previous_(initial.begin(), initial.end()),
      period_(period) {
  if (initial.empty()) throw std::invalid_argument("initial snapshot is empty");
  if (period == 0) throw std::invalid_argument("snapshot period must be positive");
}

std::size_t SnapshotStore::period_for(double multiplier, std::size_t taps) {
  if (!(multiplier > 0.0) || !std::isfinite(multiplier))
    throw std::invalid_argument("snapshot multiplier must be positive and finite");
  const long long p = std::llround(multiplier * static_cast<double>(taps));
  return p < 1 ? 1 : static_cast<std::size_t>(p);
}

void SnapshotStore::tick(std::span<const double> w) {
  if (w.size() != snap_current_.size())
    throw DimensionError("coefficient length does not match snapshot store");
  if (ticks_ % period_ == 0) {
    snap_previous_.swap(snap_current_);  // previous <- current, buffer reused
    snap_current_.assign(w.begin(), w.end());
    captured_previous_ = captured_current_;
    captured_current_ = ticks_;
  }
  ++ticks_;
}

std::uint64_t SnapshotStore::previous_age() const {
  if (ticks_ == 0) return 0;
  return (ticks_ - 1) - captured_previous_;
}

void derivative_vector(const FilterState& w, const SnapshotStore& s,
                       std::vector<double>& out) {
  const std::span<const double> prev = s.previous();
  if (w.taps() != prev.size())
    throw DimensionError("coefficient length does not match snapshot store");
  out.resize(prev.size());
  for (std::size_t l = 0; l < prev.size(); ++l)
    out[l] = std::fabs(w.coefficients[l] - prev[l]);
}

std::vector<double> derivative_vector(const FilterState& w, const SnapshotStore& s) {
  std::vector<double> out;
  derivative_vector(w, s, out);
  return out;
}

DbNormalization db_normalization(const FilterState& w, std::span<const double> deltas) {
  if (w.taps() != deltas.size())
    throw DimensionError("delta length does not match coefficient length");
  DbNormalization n;
  for (double c : w.coefficients) n.w_mx = std::max(n.w_mx, std::fabs(c));
  for (double d : deltas) n.d_mx = std::max(n.d_mx, d);
  const double sum = n.d_mx + n.w_mx;
  // both maxima zero only before the filter has ever moved; define k_mx = 0
  n.k_mx = sum == 0.0 ? 0.0 : (n.d_mx * n.d_mx + n.w_mx * n.w_mx) / sum;
  return n;
}

void db_gains(std::span<const double> deltas, const DbNormalization& n,
              const GainParams& p, std::vector<double>& out) {
  p.validate();
  if (deltas.empty()) throw DimensionError("delta vector is empty");
  const std::size_t L = deltas.size();
  out.resize(L);
  const double floor = (1.0 - p.alpha) / (2.0 * static_cast<double>(L));
  const double denom = n.k_mx + p.epsilon;
  for (std::size_t l = 0; l < L; ++l)
    out[l] = floor + (1.0 + p.alpha) * deltas[l] / denom;
}

std::vector<double> db_gains(std::span<const double> deltas, const DbNormalization& n,
                             const GainParams& p) {
  std::vector<double> out;
  db_gains(deltas, n, p, out);
  return out;
}

void proportionate_apa_update(FilterState& w, std::span<const double> gains,
                              const RegressorBuffer& buf, std::span<const double> y,
                              const ApaParams& p, UpdateScratch& ws) {
  p.validate();
  if (w.taps() != buf.taps())
    throw DimensionError("filter length does not match regressor buffer");
  if (gains.size() != w.taps())
    throw DimensionError("gain length does not match filter length");
  if (y.size() != p.order)
    throw DimensionError("desired vector length does not match projection order");
  if (p.order > buf.order())
    throw DimensionError("regressor buffer is too shallow for the projection order");

  const std::size_t L = w.taps();
  const std::size_t M = p.order;
  ws.window.resize(buf.window_size());
  buf.fill_window(ws.window);
  const double* win = ws.window.data();

  ws.error.resize(M);
  for (std::size_t j = 0; j < M; ++j) {
    double acc = 0.0;
    for (std::size_t l = 0; l < L; ++l) acc += win[j + l] * w.coefficients[l];
    ws.error[j] = y[j] - acc;
  }

  // scaled[j] = G x(k-j); the Gram matrix X^T G X is filled symmetrically from
  // the lower triangle so rounding cannot break symmetry
  ws.scaled.resize(M * L);
  for (std::size_t j = 0; j < M; ++j) {
    double* row = ws.scaled.data() + j * L;
    for (std::size_t l = 0; l < L; ++l) row[l] = gains[l] * win[j + l];
  }
  ws.gram.resize(M * M);
  ws.chol.assign(M * M, 0.0);
  ws.solution.resize(M);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      const double* row = ws.scaled.data() + j * L;
      for (std::size_t l = 0; l < L; ++l) acc += win[i + l] * row[l];
      ws.gram[i * M + j] = acc;
      ws.gram[j * M + i] = acc;
    }

  // solve (X^T G X + delta I) s = e
  solve_regularized_normal(std::span<const double>(ws.gram), M, p.delta,
                           std::span<const double>(ws.error),
                           std::span<double>(ws.solution),
                           std::span<double>(ws.chol));

  for (std::size_t l = 0; l < L; ++l) {
    double acc = 0.0;
    for (std::size_t j = 0; j < M; ++j) acc += ws.solution[j] * ws.scaled[j * L + l];
    w.coefficients[l] += p.mu * acc;
  }
  ++w.iteration;
}

void dbipapa_step(FilterState& w, const RegressorBuffer& buf, std::span<const double> y,
                  SnapshotStore& snaps, const ApaParams& p, const GainParams& gp,
                  UpdateScratch& ws) {
  // per-sample order: refresh snapshots first, then derive gains from the
  // pre-update coefficients, then update
  snaps.tick(w.coefficients);
  derivative_vector(w, snaps, ws.deltas);
  const DbNormalization norm = db_normalization(w, ws.deltas);
  db_gains(ws.deltas, norm, gp, ws.gains);
  proportionate_apa_update(w, ws.gains, buf, y, p, ws);
}

bool necessary_condition_check(double h_err, double g, double x, double e, double mu,
                               double sigma_gx2) {
  if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
  if (!(sigma_gx2 > 0.0)) throw std::invalid_argument("sigma_gx2 must be positive");
  const double denom = mu * std::fabs(x) * std::fabs(e);
  if (denom == 0.0) return true;  // bound is infinite
  return g < 2.0 * sigma_gx2 * std::fabs(h_err) / denom;
}

}  // namespace sparsid
