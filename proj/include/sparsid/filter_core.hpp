#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sparsid/errors.hpp"

namespace sparsid {

// Sliding window over the input stream. Keeps the most recent L+M-1 samples
// so all M columns of the L x M regressor matrix can be read without copies;
// entries older than the first push read as zero.
class RegressorBuffer {
 public:
  RegressorBuffer(std::size_t taps, std::size_t order);

  void push(double x);  // rejects non-finite samples

  // x(k-n); valid for the whole window, n in [0, taps+order-2]
  double lag(std::size_t n) const;

  // out[n] = lag(n), newest first. Column j of the regressor matrix is the
  // subrange [j, j+taps).
  void fill_window(std::span<double> out) const;

  std::size_t taps() const { return taps_; }
  std::size_t order() const { return order_; }
  std::size_t window_size() const { return ring_.size(); }
  std::uint64_t pushed() const { return pushed_; }

 private:
  std::size_t taps_;
  std::size_t order_;
  std::vector<double> ring_;
  std::size_t head_ = 0;  // slot of the newest sample
  std::uint64_t pushed_ = 0;
};

struct FilterState {
  explicit FilterState(std::size_t taps);
  std::vector<double> coefficients;  // starts at zero
  std::uint64_t iteration = 0;
  std::size_t taps() const { return coefficients.size(); }
};

struct ApaParams {
  double mu = 0.15;       // step size, > 0
  double delta = 0.0;     // regularization added to the normal-equation diagonal, >= 0
  std::size_t order = 1;  // projection order M
  void validate() const;
};

// Scratch vectors reused across per-sample updates so the hot loop does not
// allocate. Any one instance works for any (taps, order) pair.
struct UpdateScratch {
  std::vector<double> window;
  std::vector<double> error;
  std::vector<double> gram;
  std::vector<double> chol;
  std::vector<double> solution;
  std::vector<double> scaled;
  std::vector<double> gains;
  std::vector<double> deltas;
};

// e[j] = y[j] - <x(k-j), w>, one entry per regressor column
std::vector<double> compute_error(const RegressorBuffer& buf, const FilterState& w,
                                  std::span<const double> y);

// Solves (A + delta I) s = rhs by Cholesky factorization. `a` is n x n
// row-major, symmetric positive semidefinite; only the lower triangle is read.
std::vector<double> solve_regularized_normal(std::span<const double> a, std::size_t n,
                                             double delta, std::span<const double> rhs);

// Allocation-free variant for per-sample use; `chol` is n*n working storage.
void solve_regularized_normal(std::span<const double> a, std::size_t n, double delta,
                              std::span<const double> rhs, std::span<double> out,
                              std::span<double> chol);

// w <- w + mu X (X^T X + delta I)^-1 e   (affine projection update)
void apa_update(FilterState& w, const RegressorBuffer& buf, std::span<const double> y,
                const ApaParams& p, UpdateScratch& ws);

// w <- w + mu x e / (x^T x + delta)      (order-1 special case; p.order must be 1)
void nlms_update(FilterState& w, const RegressorBuffer& buf, double y,
                 const ApaParams& p, UpdateScratch& ws);

inline void apa_update(FilterState& w, const RegressorBuffer& buf,
                       std::span<const double> y, const ApaParams& p) {
  UpdateScratch ws;
  apa_update(w, buf, y, p, ws);
}

inline void nlms_update(FilterState& w, const RegressorBuffer& buf, double y,
                        const ApaParams& p) {
  UpdateScratch ws;
  nlms_update(w, buf, y, p, ws);
}

}  // namespace sparsid
