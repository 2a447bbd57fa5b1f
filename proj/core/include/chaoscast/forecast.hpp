#ifndef CHAOSCAST_FORECAST_HPP
#define CHAOSCAST_FORECAST_HPP

#include "chaoscast/dense.hpp"
#include "chaoscast/model.hpp"

#include <cstdint>
#include <vector>

namespace chaoscast::forecast {

/// Closed-loop prediction traces. predictions = x_hat_trace + delta_trace
/// holds elementwise, exactly.
struct ForecastResult {
    DenseArray predictions; // (H, N)
    DenseArray x_hat_trace; // (H, N) DLC component
    DenseArray delta_trace; // (H, N) ITC feedback component
    std::size_t horizon = 0;
};

enum class RolloutMode { mean, sample };

struct RolloutOptions {
    RolloutMode mode = RolloutMode::mean;
    std::uint64_t seed = 0; // epsilon stream for sample mode
};

/// Autoregressive rollout: the first window is the last d history rows; every
/// later window drops its oldest row and appends the previous prediction, so
/// after d steps the model runs on its own outputs only. History and outputs
/// live in the model's (normalized) input space.
ForecastResult rollout(const model::ModelParams& params, const DenseArray& history,
                       std::size_t horizon, const RolloutOptions& options = {});

/// Diagnostic upper bound on what perfect ITC feedback could achieve: the
/// rollout loop with each step's feedback replaced by the true difference
/// between this step's truth and the previous prediction.
ForecastResult rollout_with_oracle_delta(const model::ModelParams& params,
                                         const DenseArray& history, const DenseArray& truth,
                                         std::size_t horizon);

struct ErrorGrowth {
    std::vector<double> rmse; // per-step RMSE over locations
    double log_slope = 0.0;   // OLS slope of ln(max(rmse, 1e-12)) over the first min(H, 100) steps
};

/// Requires H >= 8 aligned rows.
ErrorGrowth error_growth(const DenseArray& predictions, const DenseArray& truth);

/// Copy of `params` with the ITC decoder output layer zeroed, so delta_hat is
/// identically zero: the DLC-only ablation of the same trained model.
model::ModelParams zero_itc_decoder(model::ModelParams params);

} // namespace chaoscast::forecast

#endif
