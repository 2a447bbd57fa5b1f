#ifndef CHAOSCAST_METRICS_HPP
#define CHAOSCAST_METRICS_HPP

#include "chaoscast/dense.hpp"

#include <span>

namespace chaoscast::metrics {

/// Evaluation window: N locations by h time steps, truth and prediction.
struct EvalSlice {
    DenseArray truth;      // (N, h)
    DenseArray prediction; // (N, h)

    std::size_t n_locations() const { return truth.rows(); }
    std::size_t period() const { return truth.cols(); }
    void validate() const;
};

/// Mean absolute error over all N*h entries.
double mae(const EvalSlice& slice);

/// Mean over locations of the per-location root-mean-square error:
/// (1/N) sum_i sqrt(sum_t (x_it - o_it)^2 / h).
double rmse(const EvalSlice& slice);

/// Dynamic time warping distance with local cost |a_i - b_j| and the classic
/// match/insert/delete steps, no window constraint.
double dtw(std::span<const double> a, std::span<const double> b);

} // namespace chaoscast::metrics

#endif
