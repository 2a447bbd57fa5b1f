#include "chaoscast/model.hpp"

#include "chaoscast/errors.hpp"
#include "chaoscast/rng.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace chaoscast::model {

namespace {

// Affine map y = x.W + b with the same accumulation order as the graph's
// matmul node, so direct and graph evaluation agree bit for bit.
DenseArray affine(const DenseArray& x, const Layer& layer) {
    const std::size_t k = layer.weight.rows();
    const std::size_t p = layer.weight.cols();
    if (x.size() != k) {
        throw ShapeError("affine: input length " + std::to_string(x.size()) +
                         " does not match fan-in " + std::to_string(k));
    }
    DenseArray out({1, p});
    for (std::size_t kk = 0; kk < k; ++kk) {
        const double xv = x.data[kk];
        for (std::size_t j = 0; j < p; ++j) out.data[j] += xv * layer.weight.data[kk * p + j];
    }
    for (std::size_t j = 0; j < p; ++j) out.data[j] += layer.bias.data[j];
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> layer_dims(const ModelConfig& c) {
    std::vector<std::pair<std::size_t, std::size_t>> dims;
    // DLC
    std::size_t in = c.input_dim();
    for (std::size_t w : c.dlc_hidden) { dims.emplace_back(in, w); in = w; }
    dims.emplace_back(in, c.n_locations);
    // encoder
    in = c.input_dim();
    for (std::size_t w : c.itc_encoder_hidden) { dims.emplace_back(in, w); in = w; }
    const std::size_t r_dim = in;
    dims.emplace_back(r_dim, c.latent_dim); // mu head
    dims.emplace_back(r_dim, c.latent_dim); // logvar head
    // decoder
    in = c.latent_dim;
    for (std::size_t w : c.itc_decoder_hidden) { dims.emplace_back(in, w); in = w; }
    dims.emplace_back(in, c.n_locations);
    return dims;
}

} // namespace

void ModelConfig::validate() const {
    if (n_locations < 1) throw DataError("ModelConfig: n_locations must be >= 1");
    if (window < 1) throw DataError("ModelConfig: window must be >= 1");
    if (latent_dim < 1) throw DataError("ModelConfig: latent_dim must be >= 1");
    if (!(logvar_lo < logvar_hi)) throw DataError("ModelConfig: logvar clamp lo must be < hi");
    for (std::size_t w : dlc_hidden)
        if (w < 1) throw DataError("ModelConfig: dlc_hidden widths must be >= 1");
    for (std::size_t w : itc_encoder_hidden)
        if (w < 1) throw DataError("ModelConfig: itc_encoder_hidden widths must be >= 1");
    for (std::size_t w : itc_decoder_hidden)
        if (w < 1) throw DataError("ModelConfig: itc_decoder_hidden widths must be >= 1");
}

std::size_t ModelParams::count_scalars() const {
    std::size_t n = 0;
    for_each([&](const DenseArray& a) { n += a.size(); });
    return n;
}

ModelParams init_params(const ModelConfig& config) {
    config.validate();
    ModelParams p;
    p.config = config;
    Rng rng(config.seed);
    auto make_layer = [&](std::size_t fan_in, std::size_t fan_out) {
        Layer l;
        l.weight = DenseArray({fan_in, fan_out});
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& w : l.weight.data) w = rng.uniform(-limit, limit);
        l.bias = DenseArray::zeros({1, fan_out});
        return l;
    };
    const auto dims = layer_dims(config);
    std::size_t k = 0;
    for (std::size_t i = 0; i < config.dlc_hidden.size() + 1; ++i, ++k)
        p.dlc.push_back(make_layer(dims[k].first, dims[k].second));
    for (std::size_t i = 0; i < config.itc_encoder_hidden.size(); ++i, ++k)
        p.encoder.push_back(make_layer(dims[k].first, dims[k].second));
    p.mu_head = make_layer(dims[k].first, dims[k].second); ++k;
    p.logvar_head = make_layer(dims[k].first, dims[k].second); ++k;
    for (std::size_t i = 0; i < config.itc_decoder_hidden.size() + 1; ++i, ++k)
        p.decoder.push_back(make_layer(dims[k].first, dims[k].second));
    return p;
}

Runtime::Runtime(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    const std::size_t n = config_.n_locations;
    const std::size_t latent = config_.latent_dim;

    auto param_leaf = [&](const std::string& name) {
        const num::NodeId id = graph_.leaf(name);
        param_leaves_.push_back(id);
        return id;
    };

    nodes_.window = graph_.leaf("in.window");
    nodes_.epsilon = graph_.leaf("in.epsilon");
    nodes_.target = graph_.leaf("in.target");
    nodes_.target_delta = graph_.leaf("in.target_delta");
    nodes_.kl_weight = graph_.leaf("in.kl_weight");

    // constants
    half_latent_ = DenseArray::full({1, latent}, 0.5);
    ones_col_latent_ = DenseArray::full({latent, 1}, 1.0);
    neg_ones_n_ = DenseArray::full({1, n}, -1.0);
    neg_one_ = DenseArray::scalar(-1.0);
    neg_latent_dim_ = DenseArray::scalar(-static_cast<double>(latent));
    half_ = DenseArray::scalar(0.5);
    zero_eps_ = DenseArray::zeros({1, latent});
    zero_n_ = DenseArray::zeros({1, n});
    auto const_leaf = [&](const std::string& name, const DenseArray& value) {
        const num::NodeId id = graph_.leaf(name);
        const_leaves_.push_back(id);
        const_values_.push_back(&value);
        return id;
    };
    const num::NodeId c_half_latent = const_leaf("const.half_latent", half_latent_);
    const num::NodeId c_ones_col = const_leaf("const.ones_col", ones_col_latent_);
    const num::NodeId c_neg_ones_n = const_leaf("const.neg_ones_n", neg_ones_n_);
    const num::NodeId c_neg_one = const_leaf("const.neg_one", neg_one_);
    const num::NodeId c_neg_latent = const_leaf("const.neg_latent_dim", neg_latent_dim_);
    const num::NodeId c_half = const_leaf("const.half", half_);

    // DLC: tanh hidden layers, identity output
    num::NodeId h = nodes_.window;
    for (std::size_t i = 0; i <= config_.dlc_hidden.size(); ++i) {
        const std::string tag = "dlc.l" + std::to_string(i);
        const num::NodeId w = param_leaf(tag + ".W");
        const num::NodeId b = param_leaf(tag + ".b");
        num::NodeId a = graph_.add(graph_.matmul(h, w, tag + ".matmul"), b, tag + ".affine");
        h = (i < config_.dlc_hidden.size()) ? graph_.tanh(a, tag + ".tanh") : a;
    }
    nodes_.x_hat = h;

    // ITC encoder: tanh layers
    num::NodeId r = nodes_.window;
    for (std::size_t i = 0; i < config_.itc_encoder_hidden.size(); ++i) {
        const std::string tag = "itc.enc.l" + std::to_string(i);
        const num::NodeId w = param_leaf(tag + ".W");
        const num::NodeId b = param_leaf(tag + ".b");
        r = graph_.tanh(graph_.add(graph_.matmul(r, w, tag + ".matmul"), b, tag + ".affine"),
                        tag + ".tanh");
    }
    nodes_.r = r;

    // latent heads
    const num::NodeId w_mu = param_leaf("itc.mu.W");
    const num::NodeId b_mu = param_leaf("itc.mu.b");
    nodes_.mu = graph_.add(graph_.matmul(r, w_mu, "itc.mu.matmul"), b_mu, "itc.mu");
    const num::NodeId w_lv = param_leaf("itc.logvar.W");
    const num::NodeId b_lv = param_leaf("itc.logvar.b");
    const num::NodeId v_raw =
        graph_.add(graph_.matmul(r, w_lv, "itc.logvar.matmul"), b_lv, "itc.logvar.raw");
    nodes_.logvar = graph_.clamp(v_raw, config_.logvar_lo, config_.logvar_hi, "itc.logvar");
    nodes_.sigma = graph_.exp(graph_.mul(nodes_.logvar, c_half_latent, "itc.halflogvar"), "itc.sigma");

    // reparameterized sample; epsilon = 0 reduces to the mean path
    nodes_.z = graph_.add(nodes_.mu, graph_.mul(nodes_.sigma, nodes_.epsilon, "itc.scaled_eps"),
                          "itc.z");

    // ITC decoder
    num::NodeId d = nodes_.z;
    for (std::size_t i = 0; i <= config_.itc_decoder_hidden.size(); ++i) {
        const std::string tag = "itc.dec.l" + std::to_string(i);
        const num::NodeId w = param_leaf(tag + ".W");
        const num::NodeId b = param_leaf(tag + ".b");
        num::NodeId a = graph_.add(graph_.matmul(d, w, tag + ".matmul"), b, tag + ".affine");
        d = (i < config_.itc_decoder_hidden.size()) ? graph_.tanh(a, tag + ".tanh") : a;
    }
    nodes_.delta_hat = d;

    nodes_.combined = graph_.add(nodes_.x_hat, nodes_.delta_hat, "combined");

    // objective: ||combined - x||^2 + ||delta_hat - dx||^2 + w_kl * KL(N(mu,sigma) || N(0,I))
    const num::NodeId recon_diff =
        graph_.add(nodes_.combined, graph_.mul(nodes_.target, c_neg_ones_n, "loss.neg_target"),
                   "loss.recon_diff");
    nodes_.recon = graph_.sum_squares(recon_diff, "loss.recon");
    const num::NodeId delta_diff = graph_.add(
        nodes_.delta_hat, graph_.mul(nodes_.target_delta, c_neg_ones_n, "loss.neg_target_delta"),
        "loss.delta_diff");
    nodes_.delta_loss = graph_.sum_squares(delta_diff, "loss.delta");
    // KL to the standard normal in closed form:
    //   0.5 * (sum mu^2 + sum sigma^2 - sum logvar - latent_dim)
    const num::NodeId ss_mu = graph_.sum_squares(nodes_.mu, "loss.kl.ss_mu");
    const num::NodeId ss_sigma = graph_.sum_squares(nodes_.sigma, "loss.kl.ss_sigma");
    const num::NodeId sum_logvar = graph_.matmul(nodes_.logvar, c_ones_col, "loss.kl.sum_logvar");
    const num::NodeId kl_inner = graph_.add(
        graph_.add(ss_mu, ss_sigma, "loss.kl.sums"),
        graph_.add(graph_.mul(sum_logvar, c_neg_one, "loss.kl.neg_sum_logvar"), c_neg_latent,
                   "loss.kl.neg_terms"),
        "loss.kl.inner");
    nodes_.kl = graph_.mul(kl_inner, c_half, "loss.kl");
    nodes_.total = graph_.add(graph_.add(nodes_.recon, nodes_.delta_loss, "loss.fit"),
                              graph_.mul(nodes_.kl, nodes_.kl_weight, "loss.weighted_kl"),
                              "loss.total");
}

void Runtime::forward(const ModelParams& params, const DenseArray& window,
                      const DenseArray* epsilon, const DenseArray* target,
                      const DenseArray* target_delta, double kl_weight,
                      std::vector<DenseArray>& values) const {
    if (!(params.config == config_)) {
        throw DataError("Runtime::forward: params were built for a different config");
    }
    if (window.size() != config_.input_dim()) {
        throw ShapeError("Runtime::forward: window has " + std::to_string(window.size()) +
                         " values, expected " + std::to_string(config_.input_dim()));
    }
    DenseArray window2d;
    const DenseArray* win = &window;
    if (window.shape != std::vector<std::size_t>{1, config_.input_dim()}) {
        window2d = DenseArray({1, config_.input_dim()}, window.data);
        win = &window2d;
    }

    num::Bindings b(graph_);
    std::size_t k = 0;
    params.for_each([&](const DenseArray& a) { b.bind(param_leaves_[k++], a); });
    for (std::size_t i = 0; i < const_leaves_.size(); ++i) b.bind(const_leaves_[i], *const_values_[i]);
    b.bind(nodes_.window, *win);
    b.bind(nodes_.epsilon, epsilon != nullptr ? *epsilon : zero_eps_);
    b.bind(nodes_.target, target != nullptr ? *target : zero_n_);
    b.bind(nodes_.target_delta, target_delta != nullptr ? *target_delta : zero_n_);
    const DenseArray kw = DenseArray::scalar(kl_weight);
    b.bind(nodes_.kl_weight, kw);
    num::forward_into(graph_, b, values);
}

void Runtime::backward(const std::vector<DenseArray>& values, std::vector<DenseArray>& grads) const {
    num::backward_into(graph_, values, nodes_.total, grads);
}

ModelOutput Runtime::output_from(const std::vector<DenseArray>& values) const {
    ModelOutput out;
    out.x_hat = values[nodes_.x_hat];
    out.delta_hat = values[nodes_.delta_hat];
    out.combined = values[nodes_.combined];
    out.latent.mu = values[nodes_.mu];
    out.latent.sigma = values[nodes_.sigma];
    out.latent.z = values[nodes_.z];
    return out;
}

DenseArray dlc_forward(const ModelParams& params, const DenseArray& window) {
    Runtime rt(params.config);
    std::vector<DenseArray> values;
    rt.forward(params, window, nullptr, nullptr, nullptr, 1.0, values);
    return values[rt.nodes().x_hat];
}

DenseArray itc_encode(const ModelParams& params, const DenseArray& window) {
    Runtime rt(params.config);
    std::vector<DenseArray> values;
    rt.forward(params, window, nullptr, nullptr, nullptr, 1.0, values);
    return values[rt.nodes().r];
}

std::pair<DenseArray, DenseArray> itc_latent(const ModelParams& params, const DenseArray& r) {
    if (!r.all_finite()) throw NumericError("itc_latent: hidden representation is not finite");
    DenseArray mu = affine(r, params.mu_head);
    DenseArray v = affine(r, params.logvar_head);
    for (double& x : v.data) x = std::min(std::max(x, params.config.logvar_lo), params.config.logvar_hi);
    DenseArray sigma = v;
    for (double& x : sigma.data) x = std::exp(x * 0.5);
    return {std::move(mu), std::move(sigma)};
}

DenseArray itc_sample(const DenseArray& mu, const DenseArray& sigma, const DenseArray& epsilon) {
    if (mu.size() != sigma.size() || mu.size() != epsilon.size()) {
        throw ShapeError("itc_sample: mu, sigma, epsilon lengths differ");
    }
    for (double s : sigma.data) {
        if (!(s > 0.0)) throw DataError("itc_sample: sigma must be strictly positive");
    }
    DenseArray z = mu;
    for (std::size_t i = 0; i < z.size(); ++i) z.data[i] = mu.data[i] + sigma.data[i] * epsilon.data[i];
    return z;
}

DenseArray itc_decode(const ModelParams& params, const DenseArray& z) {
    if (z.size() != params.config.latent_dim) {
        throw ShapeError("itc_decode: z has " + std::to_string(z.size()) + " values, expected " +
                         std::to_string(params.config.latent_dim));
    }
    DenseArray h = z;
    for (std::size_t i = 0; i < params.decoder.size(); ++i) {
        h = affine(h, params.decoder[i]);
        if (i + 1 < params.decoder.size()) {
            for (double& x : h.data) x = std::tanh(x);
        }
    }
    return h;
}

ModelOutput model_forward(const ModelParams& params, const DenseArray& window,
                          const DenseArray* epsilon) {
    Runtime rt(params.config);
    std::vector<DenseArray> values;
    rt.forward(params, window, epsilon, nullptr, nullptr, 1.0, values);
    return rt.output_from(values);
}

} // namespace chaoscast::model
