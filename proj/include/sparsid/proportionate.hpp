#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sparsid/filter_core.hpp"

namespace sparsid {

struct GainParams {
  double alpha = 0.0;     // proportionality mix in [-1, 1]; -1 degenerates to uniform gains
  double epsilon = 0.01;  // divide-by-zero guard, > 0
  void validate() const;
};

// Magnitude-proportionate gains:
//   g_l = (1-alpha)/(2L) + (1+alpha)|w_l| / (2 sum_i |w_i| + eps)
void ipapa_gains(const FilterState& w, const GainParams& p, std::vector<double>& out);
std::vector<double> ipapa_gains(const FilterState& w, const GainParams& p);

// Pair of coefficient snapshots refreshed every `period` samples. previous()
// lags current() by one refresh, so its age relative to the last tick stays in
// [period, 2*period-1] once two refreshes have happened.
class SnapshotStore {
 public:
  SnapshotStore(std::span<const double> initial, std::size_t period);

  // snapshot period = round(multiplier * taps), at least 1
  static std::size_t period_for(double multiplier, std::size_t taps);

  // Call once per sample with the pre-update coefficients. On ticks where
  // tick_count % period == 0 the registers shift: previous <- current,
  // current <- w. The very first tick stores the initial state again, so a
  // zero start keeps both snapshots at zero through the first period.
  void tick(std::span<const double> w);

  std::span<const double> current() const { return snap_current_; }
  std::span<const double> previous() const { return snap_previous_; }
  std::size_t period() const { return period_; }
  std::uint64_t ticks() const { return ticks_; }

  // samples elapsed between the last tick and the capture of previous()
  std::uint64_t previous_age() const;

 private:
  std::vector<double> snap_current_;
  std::vector<double> snap_previous_;
  std::size_t period_;
  std::uint64_t ticks_ = 0;
  std::uint64_t captured_current_ = 0;
  std::uint64_t captured_previous_ = 0;
};

// deltas[l] = |w[l] - previous[l]|: coefficient movement over roughly one
// snapshot period
void derivative_vector(const FilterState& w, const SnapshotStore& s, std::vector<double>& out);
std::vector<double> derivative_vector(const FilterState& w, const SnapshotStore& s);

struct DbNormalization {
  double w_mx = 0.0;  // max_l |w_l|
  double d_mx = 0.0;  // max_l deltas[l]
  double k_mx = 0.0;  // (d_mx^2 + w_mx^2) / (d_mx + w_mx), 0 when both are 0
};

DbNormalization db_normalization(const FilterState& w, std::span<const double> deltas);

// Derivative-proportionate gains:
//   g_l = (1-alpha)/(2L) + (1+alpha) deltas[l] / (k_mx + eps)
// No renormalization: the gain vector is used as-is.
void db_gains(std::span<const double> deltas, const DbNormalization& n, const GainParams& p,
              std::vector<double>& out);
std::vector<double> db_gains(std::span<const double> deltas, const DbNormalization& n,
                             const GainParams& p);

// w <- w + mu G X (X^T G X + delta I)^-1 e with G = diag(gains)
void proportionate_apa_update(FilterState& w, std::span<const double> gains,
                              const RegressorBuffer& buf, std::span<const double> y,
                              const ApaParams& p, UpdateScratch& ws);

// One full derivative-proportionate sample: snapshot tick, derivative vector,
// normalization, gains, then the proportionate update above, in that order.
void dbipapa_step(FilterState& w, const RegressorBuffer& buf, std::span<const double> y,
                  SnapshotStore& snaps, const ApaParams& p, const GainParams& gp,
                  UpdateScratch& ws);

// Per-coefficient step-size bound for monotone error decay:
//   g < 2 sigma_gx2 |h_err| / (mu |x| |e|)
// Returns true when the bound holds; vacuously true when |x||e| = 0.
bool necessary_condition_check(double h_err, double g, double x, double e, double mu,
                               double sigma_gx2);

}  // namespace sparsid
