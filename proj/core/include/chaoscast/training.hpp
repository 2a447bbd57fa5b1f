#ifndef CHAOSCAST_TRAINING_HPP
#define CHAOSCAST_TRAINING_HPP

#include "chaoscast/data.hpp"
#include "chaoscast/dense.hpp"
#include "chaoscast/model.hpp"

#include <cstdint>
#include <vector>

namespace chaoscast::train {

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double kl_weight = 1.0;
    std::uint64_t seed = 1;
    bool shuffle = true;

    void validate() const;
};

/// One training example: a flattened window of the d observations before step
/// `index`, the observation at `index`, and its first-order difference.
struct WindowSample {
    DenseArray input;        // (1, d*N), rows oldest-first
    DenseArray target;       // (1, N)
    DenseArray target_delta; // (1, N) = target - last input block, exactly
    std::size_t index = 0;   // time index of `target` within the source series
};

struct LossBreakdown {
    double recon = 0.0; // ||x_hat + delta_hat - x||^2
    double delta = 0.0; // ||delta_hat - dx||^2
    double kl = 0.0;    // KL(N(mu, sigma) || N(0, I))
    double total = 0.0; // recon + delta + kl_weight * kl
};

/// Slide a d-step window over the series; yields exactly T - d samples.
std::vector<WindowSample> make_windows(const data::GridSeries& series, std::size_t window);

/// Closed-form KL divergence of a diagonal Gaussian from the standard normal:
/// 0.5 * sum_j (mu_j^2 + sigma_j^2 - ln sigma_j^2 - 1). Always >= 0.
double kl_std_normal(const DenseArray& mu, const DenseArray& sigma);

LossBreakdown loss(const model::ModelOutput& output, const WindowSample& sample, double kl_weight);

struct TrainResult {
    model::ModelParams params;
    std::vector<LossBreakdown> history; // per-epoch means over all samples
};

/// Minimize the objective with Adam. The series is used as given (normalize
/// first for anything tanh-scaled). Deterministic for fixed seeds: epsilon
/// draws and shuffling come from streams derived from config.seed, gradients
/// are reduced in batch order.
TrainResult train(const data::GridSeries& series, const model::ModelConfig& model_config,
                  const TrainConfig& train_config);

} // namespace chaoscast::train

#endif
