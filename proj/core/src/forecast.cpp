#include "chaoscast/forecast.hpp"

#include "chaoscast/errors.hpp"
#include "chaoscast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace chaoscast::forecast {

namespace {

struct RolloutState {
    model::Runtime runtime;
    DenseArray window;                // (1, d*N), rows oldest-first
    std::vector<DenseArray> values;

    RolloutState(const model::ModelParams& params, const DenseArray& history)
        : runtime(params.config), window({1, params.config.input_dim()}) {
        const std::size_t d = params.config.window;
        const std::size_t n = params.config.n_locations;
        if (history.rank() != 2 || history.cols() != n) {
            throw ShapeError("rollout: history must be rows x " + std::to_string(n));
        }
        if (history.rows() < d) {
            throw DataError("rollout: history has " + std::to_string(history.rows()) +
                            " rows, need at least " + std::to_string(d));
        }
        const std::size_t first = history.rows() - d;
        for (std::size_t j = 0; j < d; ++j) {
            const auto row = history.row_span(first + j);
            std::copy(row.begin(), row.end(), window.data.begin() + j * n);
        }
    }

    void slide(const double* next_row, std::size_t n) {
        std::copy(window.data.begin() + n, window.data.end(), window.data.begin());
        std::copy(next_row, next_row + n, window.data.end() - n);
    }
};

void check_step_finite(const double* row, std::size_t n, std::size_t step) {
    for (std::size_t c = 0; c < n; ++c) {
        if (!std::isfinite(row[c])) {
            throw NumericError("rollout: non-finite prediction at step " + std::to_string(step));
        }
    }
}

} // namespace

ForecastResult rollout(const model::ModelParams& params, const DenseArray& history,
                       std::size_t horizon, const RolloutOptions& options) {
    if (horizon < 1) throw DataError("rollout: horizon must be >= 1");
    const std::size_t n = params.config.n_locations;
    RolloutState state(params, history);

    ForecastResult result;
    result.horizon = horizon;
    result.predictions = DenseArray({horizon, n});
    result.x_hat_trace = DenseArray({horizon, n});
    result.delta_trace = DenseArray({horizon, n});

    Rng eps_rng(options.seed);
    DenseArray epsilon({1, params.config.latent_dim});
    const bool sampling = options.mode == RolloutMode::sample;

    const auto& nodes = state.runtime.nodes();
    for (std::size_t t = 0; t < horizon; ++t) {
        if (sampling) {
            for (double& e : epsilon.data) e = eps_rng.normal();
        }
        try {
            state.runtime.forward(params, state.window, sampling ? &epsilon : nullptr, nullptr,
                                  nullptr, 1.0, state.values);
        } catch (const NumericError& e) {
            throw NumericError("rollout: step " + std::to_string(t) + ": " + e.what());
        }
        const DenseArray& x_hat = state.values[nodes.x_hat];
        const DenseArray& delta_hat = state.values[nodes.delta_hat];
        const DenseArray& combined = state.values[nodes.combined];
        std::copy(x_hat.data.begin(), x_hat.data.end(), &result.x_hat_trace.data[t * n]);
        std::copy(delta_hat.data.begin(), delta_hat.data.end(), &result.delta_trace.data[t * n]);
        std::copy(combined.data.begin(), combined.data.end(), &result.predictions.data[t * n]);
        check_step_finite(&result.predictions.data[t * n], n, t);
        state.slide(&result.predictions.data[t * n], n);
    }
    return result;
}

ForecastResult rollout_with_oracle_delta(const model::ModelParams& params,
                                         const DenseArray& history, const DenseArray& truth,
                                         std::size_t horizon) {
    if (horizon < 1) throw DataError("rollout: horizon must be >= 1");
    const std::size_t n = params.config.n_locations;
    if (truth.rank() != 2 || truth.cols() != n || truth.rows() < horizon) {
        throw ShapeError("rollout_with_oracle_delta: truth must provide horizon x " +
                         std::to_string(n) + " rows");
    }
    RolloutState state(params, history);

    ForecastResult result;
    result.horizon = horizon;
    result.predictions = DenseArray({horizon, n});
    result.x_hat_trace = DenseArray({horizon, n});
    result.delta_trace = DenseArray({horizon, n});

    // Base of the first step is the last history row; afterwards it is the
    // previous prediction.
    std::vector<double> prev_base(n);
    {
        const auto last = history.row_span(history.rows() - 1);
        std::copy(last.begin(), last.end(), prev_base.begin());
    }

    const auto& nodes = state.runtime.nodes();
    for (std::size_t t = 0; t < horizon; ++t) {
        try {
            state.runtime.forward(params, state.window, nullptr, nullptr, nullptr, 1.0,
                                  state.values);
        } catch (const NumericError& e) {
            throw NumericError("rollout: step " + std::to_string(t) + ": " + e.what());
        }
        const DenseArray& x_hat = state.values[nodes.x_hat];
        for (std::size_t c = 0; c < n; ++c) {
            const double oracle_delta = truth.data[t * n + c] - prev_base[c];
            result.x_hat_trace.data[t * n + c] = x_hat.data[c];
            result.delta_trace.data[t * n + c] = oracle_delta;
            result.predictions.data[t * n + c] = x_hat.data[c] + oracle_delta;
        }
        check_step_finite(&result.predictions.data[t * n], n, t);
        std::copy(&result.predictions.data[t * n], &result.predictions.data[t * n] + n,
                  prev_base.begin());
        state.slide(&result.predictions.data[t * n], n);
    }
    return result;
}

ErrorGrowth error_growth(const DenseArray& predictions, const DenseArray& truth) {
    if (!predictions.same_shape(truth) || predictions.rank() != 2) {
        throw ShapeError("error_growth: predictions and truth shapes differ");
    }
    const std::size_t h = predictions.rows();
    const std::size_t n = predictions.cols();
    if (h < 8) throw DataError("error_growth: need at least 8 steps");

    ErrorGrowth out;
    out.rmse.resize(h);
    for (std::size_t t = 0; t < h; ++t) {
        double ss = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double e = predictions.data[t * n + c] - truth.data[t * n + c];
            ss += e * e;
        }
        out.rmse[t] = std::sqrt(ss / static_cast<double>(n));
    }

    const std::size_t k = std::min<std::size_t>(h, 100);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        const double x = static_cast<double>(t);
        const double y = std::log(std::max(out.rmse[t], 1e-12));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double kd = static_cast<double>(k);
    out.log_slope = (kd * sxy - sx * sy) / (kd * sxx - sx * sx);
    return out;
}

model::ModelParams zero_itc_decoder(model::ModelParams params) {
    model::Layer& out = params.decoder.back();
    std::fill(out.weight.data.begin(), out.weight.data.end(), 0.0);
    std::fill(out.bias.data.begin(), out.bias.data.end(), 0.0);
    return params;
}

} // namespace chaoscast::forecast
