// Test-only reference implementations, kept independent of the production
// code paths they check: different loop structures, no shared helpers.
#ifndef CHAOSCAST_TESTS_ORACLES_HPP
#define CHAOSCAST_TESTS_ORACLES_HPP

#include "chaoscast/dense.hpp"
#include "chaoscast/model.hpp"
#include "chaoscast/training.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace oracles {

/// Full-table dynamic programming DTW (match/insert/delete, |a-b| cost).
double naive_dtw(std::span<const double> a, std::span<const double> b);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of KL(N(mu, diag sigma^2) || N(0, I)) as the average
/// log-density ratio over `n` reparameterized draws.
McEstimate mc_kl(const std::vector<double>& mu, const std::vector<double>& sigma, std::size_t n,
                 std::uint64_t seed);

struct HandTrace {
    std::vector<double> x_hat;
    std::vector<double> r;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> z;
    std::vector<double> delta_hat;
    std::vector<double> combined;
};

/// Layer-by-layer forward pass written from the architecture description:
/// output-major accumulation, explicit clamping, no production helpers.
HandTrace hand_forward(const chaoscast::model::ModelParams& params,
                       const std::vector<double>& window, const std::vector<double>& epsilon);

/// Scalar objective evaluated independently from the HandTrace.
double hand_loss_total(const HandTrace& trace, const std::vector<double>& target,
                       const std::vector<double>& target_delta, double kl_weight);

/// Plain Pearson correlation.
double pearson(std::span<const double> a, std::span<const double> b);

/// Autocorrelation of a series at the given lag.
double autocorr(std::span<const double> x, std::size_t lag);

} // namespace oracles

#endif
