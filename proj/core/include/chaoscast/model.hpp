#ifndef CHAOSCAST_MODEL_HPP
#define CHAOSCAST_MODEL_HPP

#include "chaoscast/dense.hpp"
#include "chaoscast/graph.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace chaoscast::model {

/// Architecture and initialization settings for the two-component predictor.
/// The dependency learning component (DLC) maps a flattened window of the
/// last `window` observation vectors to the next vector. The information
/// tracking component (ITC) encodes the same window, parameterizes a diagonal
/// Gaussian latent, and decodes an estimate of the next first-order
/// difference, which is added to the DLC output.
struct ModelConfig {
    std::size_t n_locations = 1;
    std::size_t window = 8;
    std::vector<std::size_t> dlc_hidden{64, 64};
    std::vector<std::size_t> itc_encoder_hidden{64};
    std::size_t latent_dim = 16;
    std::vector<std::size_t> itc_decoder_hidden{64};
    std::uint64_t seed = 42;
    double logvar_lo = -10.0;
    double logvar_hi = 10.0;

    std::size_t input_dim() const { return n_locations * window; }
    void validate() const; // throws DataError on an invalid field

    bool operator==(const ModelConfig&) const = default;
};

struct Layer {
    DenseArray weight; // (fan_in, fan_out)
    DenseArray bias;   // (1, fan_out)
};

struct ModelParams {
    ModelConfig config;
    std::vector<Layer> dlc;     // hidden layers (tanh) then identity output layer
    std::vector<Layer> encoder; // tanh layers; empty means r = window
    Layer mu_head;              // linear
    Layer logvar_head;          // linear, output clamped to [logvar_lo, logvar_hi]
    std::vector<Layer> decoder; // hidden layers (tanh) then identity output layer

    /// Visit every parameter array in a fixed canonical order.
    template <typename Fn>
    void for_each(Fn&& fn) {
        for (Layer& l : dlc) { fn(l.weight); fn(l.bias); }
        for (Layer& l : encoder) { fn(l.weight); fn(l.bias); }
        fn(mu_head.weight); fn(mu_head.bias);
        fn(logvar_head.weight); fn(logvar_head.bias);
        for (Layer& l : decoder) { fn(l.weight); fn(l.bias); }
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        const_cast<ModelParams*>(this)->for_each([&](DenseArray& a) { fn(static_cast<const DenseArray&>(a)); });
    }
    std::size_t count_scalars() const;
};

struct GaussianLatent {
    DenseArray mu;    // (1, latent_dim)
    DenseArray sigma; // (1, latent_dim), strictly positive
    DenseArray z;     // (1, latent_dim)
};

struct ModelOutput {
    DenseArray x_hat;     // (1, N) DLC prediction
    DenseArray delta_hat; // (1, N) ITC difference estimate
    DenseArray combined;  // (1, N) x_hat + delta_hat
    GaussianLatent latent;
};

/// Xavier-uniform weights from the config seed, zero biases. Deterministic.
ModelParams init_params(const ModelConfig& config);

/// The full model and training objective as one computation graph, built once
/// per config and reusable (immutably) across samples and threads. All model
/// operations evaluate through this graph so there is exactly one numeric
/// path for training, inference, and rollout.
class Runtime {
public:
    explicit Runtime(ModelConfig config);

    struct NodeSet {
        // bindable inputs
        num::NodeId window, epsilon, target, target_delta, kl_weight;
        // model outputs
        num::NodeId x_hat, r, mu, logvar, sigma, z, delta_hat, combined;
        // objective terms
        num::NodeId recon, delta_loss, kl, total;
    };

    const ModelConfig& config() const { return config_; }
    const num::CompGraph& graph() const { return graph_; }
    const NodeSet& nodes() const { return nodes_; }

    /// Evaluate the graph for one sample. `epsilon` may be null (mean mode:
    /// z = mu); `target`/`target_delta` may be null when only the model
    /// outputs are needed (they are bound to zeros).
    void forward(const ModelParams& params, const DenseArray& window, const DenseArray* epsilon,
                 const DenseArray* target, const DenseArray* target_delta, double kl_weight,
                 std::vector<DenseArray>& values) const;

    /// Gradients of the `total` objective node for every parameter array, in
    /// ModelParams::for_each order. `grads` is a scratch per-node buffer.
    void backward(const std::vector<DenseArray>& values, std::vector<DenseArray>& grads) const;

    /// Parameter leaf ids in ModelParams::for_each order.
    const std::vector<num::NodeId>& param_leaves() const { return param_leaves_; }

    ModelOutput output_from(const std::vector<DenseArray>& values) const;

private:
    ModelConfig config_;
    num::CompGraph graph_;
    NodeSet nodes_{};
    std::vector<num::NodeId> param_leaves_;
    // constants bound on every call
    DenseArray half_latent_, ones_col_latent_, neg_ones_n_;
    DenseArray neg_one_, neg_latent_dim_, half_;
    DenseArray zero_eps_, zero_n_;
    std::vector<num::NodeId> const_leaves_;
    std::vector<const DenseArray*> const_values_;
};

// Spec-level operations. Each evaluates through a per-call Runtime; prefer a
// shared Runtime for hot loops.
DenseArray dlc_forward(const ModelParams& params, const DenseArray& window);
DenseArray itc_encode(const ModelParams& params, const DenseArray& window);
std::pair<DenseArray, DenseArray> itc_latent(const ModelParams& params, const DenseArray& r);
DenseArray itc_sample(const DenseArray& mu, const DenseArray& sigma, const DenseArray& epsilon);
DenseArray itc_decode(const ModelParams& params, const DenseArray& z);
/// epsilon == nullptr selects mean mode (z = mu).
ModelOutput model_forward(const ModelParams& params, const DenseArray& window,
                          const DenseArray* epsilon = nullptr);

} // namespace chaoscast::model

#endif
