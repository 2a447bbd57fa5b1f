// Shared helpers for the unit and acceptance suites.
#ifndef CHAOSCAST_TESTS_TESTUTIL_HPP
#define CHAOSCAST_TESTS_TESTUTIL_HPP

#include "chaoscast/dense.hpp"
#include "chaoscast/model.hpp"
#include "chaoscast/training.hpp"

#include <cstddef>

namespace testutil {

inline chaoscast::DenseArray flatten_params(const chaoscast::model::ModelParams& params) {
    chaoscast::DenseArray flat({1, params.count_scalars()});
    std::size_t off = 0;
    params.for_each([&](const chaoscast::DenseArray& a) {
        for (std::size_t i = 0; i < a.size(); ++i) flat.data[off++] = a.data[i];
    });
    return flat;
}

inline void unflatten_into(chaoscast::model::ModelParams& params, const chaoscast::DenseArray& flat) {
    std::size_t off = 0;
    params.for_each([&](chaoscast::DenseArray& a) {
        for (std::size_t i = 0; i < a.size(); ++i) a.data[i] = flat.data[off++];
    });
}

/// Full objective value through the public surface (model_forward + loss),
/// with the epsilon draw held fixed.
inline double objective_value(const chaoscast::model::ModelConfig& config,
                              const chaoscast::DenseArray& flat,
                              const chaoscast::train::WindowSample& sample,
                              const chaoscast::DenseArray& epsilon, double kl_weight) {
    chaoscast::model::ModelParams params = chaoscast::model::init_params(config);
    unflatten_into(params, flat);
    const auto out = chaoscast::model::model_forward(params, sample.input, &epsilon);
    return chaoscast::train::loss(out, sample, kl_weight).total;
}

/// Analytic gradient of the objective via the graph, flattened in canonical
/// parameter order.
inline chaoscast::DenseArray objective_gradient(const chaoscast::model::Runtime& runtime,
                                                const chaoscast::model::ModelConfig& config,
                                                const chaoscast::DenseArray& flat,
                                                const chaoscast::train::WindowSample& sample,
                                                const chaoscast::DenseArray& epsilon,
                                                double kl_weight) {
    chaoscast::model::ModelParams params = chaoscast::model::init_params(config);
    unflatten_into(params, flat);
    std::vector<chaoscast::DenseArray> values, grads;
    runtime.forward(params, sample.input, &epsilon, &sample.target, &sample.target_delta,
                    kl_weight, values);
    runtime.backward(values, grads);
    chaoscast::DenseArray out({1, flat.size()});
    std::size_t off = 0;
    for (chaoscast::num::NodeId leaf : runtime.param_leaves()) {
        const chaoscast::DenseArray& g = grads[leaf];
        for (std::size_t i = 0; i < g.size(); ++i) out.data[off++] = g.data[i];
    }
    return out;
}

} // namespace testutil

#endif
