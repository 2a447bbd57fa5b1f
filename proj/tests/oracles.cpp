#include "oracles.hpp"

#include "chaoscast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracles {

double naive_dtw(std::span<const double> a, std::span<const double> b) {
    const std::size_t m = a.size(), n = b.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> table(m + 1, std::vector<double>(n + 1, inf));
    table[0][0] = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
            const double cost = std::abs(a[i - 1] - b[j - 1]);
            table[i][j] = cost + std::min({table[i - 1][j - 1], table[i - 1][j], table[i][j - 1]});
        }
    }
    return table[m][n];
}

McEstimate mc_kl(const std::vector<double>& mu, const std::vector<double>& sigma, std::size_t n,
                 std::uint64_t seed) {
    chaoscast::Rng rng(seed);
    const std::size_t k = mu.size();
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // log q(z) - log p(z) for z = mu + sigma * eps; the (2 pi)^(k/2)
        // normalizers cancel.
        double ratio = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            const double eps = rng.normal();
            const double z = mu[j] + sigma[j] * eps;
            const double log_q = -0.5 * eps * eps - std::log(sigma[j]);
            const double log_p = -0.5 * z * z;
            ratio += log_q - log_p;
        }
        sum += ratio;
        sum_sq += ratio * ratio;
    }
    McEstimate est;
    est.mean = sum / static_cast<double>(n);
    const double var = sum_sq / static_cast<double>(n) - est.mean * est.mean;
    est.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    return est;
}

namespace {

// y[j] = sum_k x[k] W[k][j] + b[j], output-major order.
std::vector<double> dense_layer(const std::vector<double>& x, const chaoscast::model::Layer& layer,
                                bool tanh_activation) {
    const std::size_t fan_in = layer.weight.rows();
    const std::size_t fan_out = layer.weight.cols();
    std::vector<double> y(fan_out);
    for (std::size_t j = 0; j < fan_out; ++j) {
        double acc = layer.bias.data[j];
        for (std::size_t k = 0; k < fan_in; ++k) acc += x[k] * layer.weight.data[k * fan_out + j];
        y[j] = tanh_activation ? std::tanh(acc) : acc;
    }
    return y;
}

} // namespace

HandTrace hand_forward(const chaoscast::model::ModelParams& params,
                       const std::vector<double>& window, const std::vector<double>& epsilon) {
    const auto& cfg = params.config;
    HandTrace trace;

    std::vector<double> h = window;
    for (std::size_t i = 0; i < params.dlc.size(); ++i) {
        h = dense_layer(h, params.dlc[i], i + 1 < params.dlc.size());
    }
    trace.x_hat = h;

    std::vector<double> r = window;
    for (const auto& layer : params.encoder) r = dense_layer(r, layer, true);
    trace.r = r;

    trace.mu = dense_layer(r, params.mu_head, false);
    std::vector<double> logvar = dense_layer(r, params.logvar_head, false);
    trace.sigma.resize(logvar.size());
    for (std::size_t j = 0; j < logvar.size(); ++j) {
        double v = logvar[j];
        if (v < cfg.logvar_lo) v = cfg.logvar_lo;
        if (v > cfg.logvar_hi) v = cfg.logvar_hi;
        trace.sigma[j] = std::exp(0.5 * v);
    }
    trace.z.resize(trace.mu.size());
    for (std::size_t j = 0; j < trace.mu.size(); ++j) {
        trace.z[j] = trace.mu[j] + trace.sigma[j] * epsilon[j];
    }

    std::vector<double> d = trace.z;
    for (std::size_t i = 0; i < params.decoder.size(); ++i) {
        d = dense_layer(d, params.decoder[i], i + 1 < params.decoder.size());
    }
    trace.delta_hat = d;

    trace.combined.resize(trace.x_hat.size());
    for (std::size_t c = 0; c < trace.x_hat.size(); ++c) {
        trace.combined[c] = trace.x_hat[c] + trace.delta_hat[c];
    }
    return trace;
}

double hand_loss_total(const HandTrace& trace, const std::vector<double>& target,
                       const std::vector<double>& target_delta, double kl_weight) {
    double recon = 0.0, delta = 0.0, kl = 0.0;
    for (std::size_t c = 0; c < target.size(); ++c) {
        recon += (trace.combined[c] - target[c]) * (trace.combined[c] - target[c]);
        delta += (trace.delta_hat[c] - target_delta[c]) * (trace.delta_hat[c] - target_delta[c]);
    }
    for (std::size_t j = 0; j < trace.mu.size(); ++j) {
        const double s2 = trace.sigma[j] * trace.sigma[j];
        kl += 0.5 * (trace.mu[j] * trace.mu[j] + s2 - std::log(s2) - 1.0);
    }
    return recon + delta + kl_weight * kl;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

double autocorr(std::span<const double> x, std::size_t lag) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) num += (x[i] - mean) * (x[i + lag] - mean);
    for (std::size_t i = 0; i < n; ++i) den += (x[i] - mean) * (x[i] - mean);
    return num / den;
}

} // namespace oracles
