#include "chaoscast/telenet.hpp"

#include "chaoscast/errors.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace chaoscast::telenet {

namespace {

// MODWT pyramid with the rescaled Haar pair g = {1/2, 1/2}, h = {1/2, -1/2}.
// At level j the filter taps sit 2^(j-1) samples apart; boundaries wrap.

void analysis_step(const std::vector<double>& v_prev, std::size_t stride,
                   std::vector<double>& w, std::vector<double>& v) {
    const std::size_t t_len = v_prev.size();
    for (std::size_t t = 0; t < t_len; ++t) {
        const std::size_t lag = (t + t_len - stride) % t_len; // stride < t_len always
        w[t] = 0.5 * v_prev[t] - 0.5 * v_prev[lag];
        v[t] = 0.5 * v_prev[t] + 0.5 * v_prev[lag];
    }
}

void synthesis_step(const std::vector<double>& w, const std::vector<double>& v,
                    std::size_t stride, std::vector<double>& v_prev) {
    const std::size_t t_len = v_prev.size();
    for (std::size_t t = 0; t < t_len; ++t) {
        const std::size_t lead = (t + stride) % t_len;
        v_prev[t] = 0.5 * w[t] - 0.5 * w[lead] + 0.5 * v[t] + 0.5 * v[lead];
    }
}

} // namespace

ScaleDecomposition modwt(const data::GridSeries& series, std::size_t levels) {
    const std::size_t t_len = series.steps();
    const std::size_t n = series.n_locations();
    if (levels < 1) throw DataError("modwt: levels must be >= 1");
    if (t_len < (std::size_t{1} << levels)) {
        throw DataError("modwt: " + std::to_string(levels) + " levels need at least " +
                        std::to_string(std::size_t{1} << levels) + " time steps, series has " +
                        std::to_string(t_len));
    }

    ScaleDecomposition out;
    out.levels = levels;
    out.details.assign(levels, DenseArray({t_len, n}));
    out.smooth = DenseArray({t_len, n});

    std::vector<std::vector<double>> w_coeffs(levels, std::vector<double>(t_len));
    std::vector<double> v_curr(t_len), v_next(t_len), zeros(t_len, 0.0), recon(t_len);

    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t t = 0; t < t_len; ++t) v_curr[t] = series.values.data[t * n + c];
        // analysis pyramid
        for (std::size_t j = 0; j < levels; ++j) {
            analysis_step(v_curr, std::size_t{1} << j, w_coeffs[j], v_next);
            std::swap(v_curr, v_next);
        }
        // v_curr now holds the level-J scaling coefficients; invert each band
        // in isolation to get the additive detail and smooth series.
        for (std::size_t j = 0; j < levels; ++j) {
            recon = w_coeffs[j];
            // from level j+1 down to 1: first step uses the band coefficients
            // as wavelet input, the rest propagate through the scaling side.
            synthesis_step(recon, zeros, std::size_t{1} << j, v_next);
            std::swap(recon, v_next);
            for (std::size_t k = j; k-- > 0;) {
                synthesis_step(zeros, recon, std::size_t{1} << k, v_next);
                std::swap(recon, v_next);
            }
            for (std::size_t t = 0; t < t_len; ++t) out.details[j].data[t * n + c] = recon[t];
        }
        recon = v_curr;
        for (std::size_t k = levels; k-- > 0;) {
            synthesis_step(zeros, recon, std::size_t{1} << k, v_next);
            std::swap(recon, v_next);
        }
        for (std::size_t t = 0; t < t_len; ++t) out.smooth.data[t * n + c] = recon[t];
    }
    return out;
}

SimilarityResult scale_similarity(const ScaleDecomposition& decomp, std::size_t scale) {
    if (scale < kMinScale || scale_to_level(scale) > decomp.levels) {
        throw DataError("scale " + std::to_string(scale) + " is out of range; decomposition has " +
                        std::to_string(decomp.levels) + " levels (scales " +
                        std::to_string(kMinScale) + ".." + std::to_string(decomp.levels + 2) + ")");
    }
    const std::size_t level = scale_to_level(scale);
    const DenseArray& detail = decomp.details[level - 1];
    const std::size_t t_len = detail.rows();
    const std::size_t n = detail.cols();
    const std::size_t drop = std::size_t{1} << level; // boundary-affected prefix
    if (drop + 2 > t_len) {
        throw DataError("scale " + std::to_string(scale) +
                        ": too few coefficients after boundary trim");
    }
    const std::size_t m = t_len - drop;

    // per-location mean and variance over the trimmed detail series
    std::vector<double> mean(n, 0.0), var(n, 0.0);
    SimilarityResult out;
    for (std::size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (std::size_t t = drop; t < t_len; ++t) s += detail.data[t * n + c];
        mean[c] = s / static_cast<double>(m);
        double ss = 0.0;
        for (std::size_t t = drop; t < t_len; ++t) {
            const double d = detail.data[t * n + c] - mean[c];
            ss += d * d;
        }
        var[c] = ss;
        if (ss <= 0.0) out.zero_variance.push_back(c);
    }

    out.matrix = DenseArray({n, n});
    for (std::size_t i = 0; i < n; ++i) out.matrix.data[i * n + i] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double r = 0.0;
            if (var[i] > 0.0 && var[j] > 0.0) {
                double cov = 0.0;
                for (std::size_t t = drop; t < t_len; ++t) {
                    cov += (detail.data[t * n + i] - mean[i]) * (detail.data[t * n + j] - mean[j]);
                }
                r = cov / std::sqrt(var[i] * var[j]);
                r = std::min(1.0, std::max(-1.0, r));
            }
            out.matrix.data[i * n + j] = r;
            out.matrix.data[j * n + i] = r;
        }
    }
    return out;
}

ScaleNetwork build_network(const SimilarityResult& similarity, std::size_t scale, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) throw DataError("build_network: tau must be in (0, 1]");
    const std::size_t n = similarity.matrix.rows();
    ScaleNetwork net;
    net.scale = scale;
    net.similarity = similarity.matrix;
    net.n = n;
    net.adjacency.assign(n * n, 0);
    net.degrees.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(similarity.matrix.data[i * n + j]) >= tau) {
                net.adjacency[i * n + j] = 1;
                net.adjacency[j * n + i] = 1;
                ++net.degrees[i];
                ++net.degrees[j];
            }
        }
    }
    return net;
}

std::vector<DegreeRecord> degree_heatmap(const ScaleNetwork& network,
                                         const std::vector<data::Location>& locations) {
    if (locations.size() != network.n) {
        throw ShapeError("degree_heatmap: location list does not match network size");
    }
    std::vector<DegreeRecord> records(network.n);
    for (std::size_t i = 0; i < network.n; ++i) {
        records[i] = {locations[i].lat, locations[i].lon, network.degrees[i]};
    }
    return records;
}

std::vector<ConnectionEdge> connection_map(const ScaleNetwork& network,
                                           const std::vector<data::Location>& locations,
                                           const BoundingBox& region) {
    if (locations.size() != network.n) {
        throw ShapeError("connection_map: location list does not match network size");
    }
    std::vector<ConnectionEdge> edges;
    for (std::size_t i = 0; i < network.n; ++i) {
        if (!region.contains(locations[i])) continue;
        for (std::size_t j = 0; j < network.n; ++j) {
            if (j == i || !network.edge(i, j)) continue;
            ConnectionEdge e;
            e.source = i;
            e.target = j;
            e.src_lat = locations[i].lat;
            e.src_lon = locations[i].lon;
            e.dst_lat = locations[j].lat;
            e.dst_lon = locations[j].lon;
            e.similarity = network.similarity.data[i * network.n + j];
            e.target_in_region = region.contains(locations[j]);
            edges.push_back(e);
        }
    }
    return edges;
}

} // namespace chaoscast::telenet
