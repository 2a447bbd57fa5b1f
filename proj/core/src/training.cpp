#include "chaoscast/training.hpp"

#include "chaoscast/errors.hpp"
#include "chaoscast/rng.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <utility>

namespace chaoscast::train {

void TrainConfig::validate() const {
    if (epochs < 1) throw DataError("TrainConfig: epochs must be >= 1");
    if (batch_size < 1) throw DataError("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate >= 0.0)) throw DataError("TrainConfig: learning_rate must be >= 0");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw DataError("TrainConfig: adam betas must be in (0, 1)");
    }
    if (!(adam_eps > 0.0)) throw DataError("TrainConfig: adam_eps must be > 0");
    if (!(kl_weight >= 0.0)) throw DataError("TrainConfig: kl_weight must be >= 0");
}

std::vector<WindowSample> make_windows(const data::GridSeries& series, std::size_t window) {
    if (window < 1) throw DataError("make_windows: window must be >= 1");
    const std::size_t t = series.steps();
    const std::size_t n = series.n_locations();
    if (t < window + 1) {
        throw DataError("make_windows: series has " + std::to_string(t) +
                        " steps, need at least " + std::to_string(window + 1));
    }
    std::vector<WindowSample> samples;
    samples.reserve(t - window);
    for (std::size_t k = 0; k + window < t; ++k) {
        WindowSample s;
        s.input = DenseArray({1, window * n});
        for (std::size_t j = 0; j < window; ++j) {
            const auto row = series.row(k + j);
            std::copy(row.begin(), row.end(), s.input.data.begin() + j * n);
        }
        s.target = DenseArray({1, n});
        const auto target_row = series.row(k + window);
        std::copy(target_row.begin(), target_row.end(), s.target.data.begin());
        s.target_delta = DenseArray({1, n});
        const double* last_block = s.input.data.data() + (window - 1) * n;
        for (std::size_t c = 0; c < n; ++c) s.target_delta.data[c] = s.target.data[c] - last_block[c];
        s.index = k + window;
        samples.push_back(std::move(s));
    }
    return samples;
}

double kl_std_normal(const DenseArray& mu, const DenseArray& sigma) {
    if (mu.size() != sigma.size()) throw ShapeError("kl_std_normal: mu and sigma lengths differ");
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        const double s = sigma.data[j];
        if (!(s > 0.0)) throw DataError("kl_std_normal: sigma must be strictly positive");
        acc += mu.data[j] * mu.data[j] + s * s - std::log(s * s) - 1.0;
    }
    return 0.5 * acc;
}

LossBreakdown loss(const model::ModelOutput& output, const WindowSample& sample, double kl_weight) {
    if (!output.combined.same_shape(sample.target) ||
        !output.delta_hat.same_shape(sample.target_delta)) {
        throw ShapeError("loss: output and sample shapes differ");
    }
    LossBreakdown lb;
    for (std::size_t c = 0; c < sample.target.size(); ++c) {
        const double re = output.combined.data[c] - sample.target.data[c];
        lb.recon += re * re;
        const double de = output.delta_hat.data[c] - sample.target_delta.data[c];
        lb.delta += de * de;
    }
    lb.kl = kl_std_normal(output.latent.mu, output.latent.sigma);
    lb.total = lb.recon + lb.delta + kl_weight * lb.kl;
    return lb;
}

namespace {

// Flat first/second-moment state over the canonical parameter order.
class Adam {
public:
    Adam(std::size_t n, const TrainConfig& cfg)
        : m_(n, 0.0), v_(n, 0.0), cfg_(cfg) {}

    void step(std::vector<double*>& params, const std::vector<double>& grad) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < grad.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double m_hat = m_[i] / bc1;
            const double v_hat = v_[i] / bc2;
            *params[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.adam_eps);
        }
    }

private:
    std::vector<double> m_, v_;
    TrainConfig cfg_;
    std::size_t t_ = 0;
};

} // namespace

TrainResult train(const data::GridSeries& series, const model::ModelConfig& model_config,
                  const TrainConfig& train_config) {
    train_config.validate();
    const model::ModelConfig& mc = model_config;
    if (mc.n_locations != series.n_locations()) {
        throw DataError("train: model config expects " + std::to_string(mc.n_locations) +
                        " locations, series has " + std::to_string(series.n_locations()));
    }

    TrainResult result;
    result.params = model::init_params(mc);
    model::ModelParams& params = result.params;

    const model::Runtime runtime(mc);
    std::vector<WindowSample> samples = make_windows(series, mc.window);

    // Flat views over parameters and a matching gradient accumulator.
    std::vector<double*> flat;
    params.for_each([&](DenseArray& a) {
        for (double& x : a.data) flat.push_back(&x);
    });
    std::vector<double> grad_accum(flat.size(), 0.0);
    Adam adam(flat.size(), train_config);

    Rng eps_rng(derive_seed(train_config.seed, 0));
    Rng shuffle_rng(derive_seed(train_config.seed, 1));

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<DenseArray> values, grads;
    DenseArray epsilon({1, mc.latent_dim});

    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        if (train_config.shuffle) shuffle_rng.shuffle(order);
        LossBreakdown epoch_sum;
        for (std::size_t begin = 0; begin < order.size(); begin += train_config.batch_size) {
            const std::size_t end = std::min(begin + train_config.batch_size, order.size());
            const std::size_t batch_n = end - begin;
            std::fill(grad_accum.begin(), grad_accum.end(), 0.0);
            for (std::size_t b = begin; b < end; ++b) {
                const WindowSample& s = samples[order[b]];
                for (double& e : epsilon.data) e = eps_rng.normal();
                runtime.forward(params, s.input, &epsilon, &s.target, &s.target_delta,
                                train_config.kl_weight, values);
                const auto& nodes = runtime.nodes();
                const double total = values[nodes.total].data[0];
                if (!std::isfinite(total)) {
                    throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                       ", batch " + std::to_string(begin / train_config.batch_size));
                }
                epoch_sum.recon += values[nodes.recon].data[0];
                epoch_sum.delta += values[nodes.delta_loss].data[0];
                epoch_sum.kl += values[nodes.kl].data[0];
                epoch_sum.total += total;

                runtime.backward(values, grads);
                std::size_t off = 0;
                for (num::NodeId leaf : runtime.param_leaves()) {
                    const DenseArray& g = grads[leaf];
                    for (std::size_t i = 0; i < g.size(); ++i) grad_accum[off + i] += g.data[i];
                    off += g.size();
                }
            }
            const double inv = 1.0 / static_cast<double>(batch_n);
            for (double& g : grad_accum) g *= inv;
            adam.step(flat, grad_accum);
        }
        const double inv_n = 1.0 / static_cast<double>(samples.size());
        result.history.push_back({epoch_sum.recon * inv_n, epoch_sum.delta * inv_n,
                                  epoch_sum.kl * inv_n, epoch_sum.total * inv_n});
    }
    return result;
}

} // namespace chaoscast::train
