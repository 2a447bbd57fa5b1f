#include "chaoscast/metrics.hpp"

#include "chaoscast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace chaoscast::metrics {

void EvalSlice::validate() const {
    if (!truth.same_shape(prediction) || truth.rank() != 2) {
        throw ShapeError("EvalSlice: truth and prediction must be equal N x h matrices");
    }
    if (truth.rows() < 1 || truth.cols() < 1) {
        throw ShapeError("EvalSlice: need at least one location and one step");
    }
}

double mae(const EvalSlice& slice) {
    slice.validate();
    double acc = 0.0;
    for (std::size_t i = 0; i < slice.truth.size(); ++i) {
        acc += std::abs(slice.prediction.data[i] - slice.truth.data[i]);
    }
    return acc / static_cast<double>(slice.truth.size());
}

double rmse(const EvalSlice& slice) {
    slice.validate();
    const std::size_t n = slice.n_locations();
    const std::size_t h = slice.period();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double ss = 0.0;
        for (std::size_t t = 0; t < h; ++t) {
            const double e = slice.prediction.data[i * h + t] - slice.truth.data[i * h + t];
            ss += e * e;
        }
        acc += std::sqrt(ss / static_cast<double>(h));
    }
    return acc / static_cast<double>(n);
}

double dtw(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DataError("dtw: series must be non-empty");
    const std::size_t m = a.size(), n = b.size();
    // Rolling two rows of the full alignment table.
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(n + 1, inf), curr(n + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        curr[0] = inf;
        for (std::size_t j = 1; j <= n; ++j) {
            const double cost = std::abs(a[i - 1] - b[j - 1]);
            curr[j] = cost + std::min({prev[j - 1], prev[j], curr[j - 1]});
        }
        std::swap(prev, curr);
    }
    return prev[n];
}

} // namespace chaoscast::metrics
