#include <doctest.h>

#include "chaoscast/errors.hpp"
#include "chaoscast/metrics.hpp"
#include "chaoscast/rng.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

using namespace chaoscast;
using metrics::EvalSlice;

namespace {

EvalSlice random_slice(std::size_t n, std::size_t h, std::uint64_t seed) {
    Rng rng(seed);
    EvalSlice s;
    s.truth = DenseArray({n, h}, rng.normals(n * h));
    s.prediction = DenseArray({n, h}, rng.normals(n * h));
    return s;
}

} // namespace

TEST_CASE("mae: exact cases and independent evaluator") {
    EvalSlice s;
    s.truth = DenseArray::matrix(1, 2, {1, 2});
    s.prediction = s.truth;
    CHECK(metrics::mae(s) == 0.0);

    s.prediction = DenseArray::matrix(1, 2, {2, 4});
    CHECK(metrics::mae(s) == 1.5);

    const EvalSlice r = random_slice(5, 20, 101);
    double acc = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t t = 0; t < 20; ++t) {
            acc += std::abs(r.prediction.at(i, t) - r.truth.at(i, t));
        }
    }
    CHECK(metrics::mae(r) == doctest::Approx(acc / 100.0).epsilon(1e-14));
}

TEST_CASE("rmse: per-location root then mean over locations") {
    EvalSlice s;
    s.truth = DenseArray::matrix(2, 1, {0, 0});
    s.prediction = s.truth;
    CHECK(metrics::rmse(s) == 0.0);

    // per-location absolute errors 3 and 4 with h=1 -> (3+4)/2
    s.prediction = DenseArray::matrix(2, 1, {3, -4});
    CHECK(metrics::rmse(s) == 3.5);

    const EvalSlice r = random_slice(5, 20, 102);
    double acc = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
        double ss = 0.0;
        for (std::size_t t = 0; t < 20; ++t) {
            const double e = r.prediction.at(i, t) - r.truth.at(i, t);
            ss += e * e;
        }
        acc += std::sqrt(ss / 20.0);
    }
    CHECK(metrics::rmse(r) == doctest::Approx(acc / 5.0).epsilon(1e-14));

    EvalSlice bad;
    bad.truth = DenseArray::zeros({2, 3});
    bad.prediction = DenseArray::zeros({3, 2});
    CHECK_THROWS_AS(metrics::rmse(bad), ShapeError);
}

TEST_CASE("dtw: alignment cases") {
    const std::vector<double> a{1, 2, 3};
    CHECK(metrics::dtw(a, a) == 0.0);

    // a duplicated middle value aligns at zero cost
    const std::vector<double> b{1, 2, 2, 3};
    CHECK(metrics::dtw(a, b) == 0.0);

    const std::vector<double> z{0, 0};
    const std::vector<double> o{1, 1};
    CHECK(metrics::dtw(z, o) == 2.0);

    CHECK_THROWS_AS(metrics::dtw(std::vector<double>{}, a), DataError);
    CHECK_THROWS_AS(metrics::dtw(a, std::vector<double>{}), DataError);
}

TEST_CASE("dtw: equals the naive full-table oracle on short series") {
    Rng rng(404);
    for (int rep = 0; rep < 2000; ++rep) {
        const std::size_t m = 1 + rng.index(12);
        const std::size_t n = 1 + rng.index(12);
        std::vector<double> a(m), b(n);
        for (double& v : a) v = static_cast<double>(rng.index(3));
        for (double& v : b) v = static_cast<double>(rng.index(3));
        const double got = metrics::dtw(a, b);
        const double want = oracles::naive_dtw(a, b);
        REQUIRE(got == want); // exact: same recurrence, different table layout
    }
}

TEST_CASE("metrics: shared properties") {
    Rng rng(505);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.index(5);
        const std::size_t h = 1 + rng.index(30);
        EvalSlice s = random_slice(n, h, 1000 + static_cast<std::uint64_t>(rep));
        CHECK(metrics::mae(s) >= 0.0);
        CHECK(metrics::rmse(s) >= 0.0);

        // permuting locations consistently changes nothing
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        EvalSlice permuted;
        permuted.truth = DenseArray::zeros({n, h});
        permuted.prediction = DenseArray::zeros({n, h});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < h; ++t) {
                permuted.truth.at(i, t) = s.truth.at(perm[i], t);
                permuted.prediction.at(i, t) = s.prediction.at(perm[i], t);
            }
        }
        CHECK(metrics::mae(permuted) == doctest::Approx(metrics::mae(s)).epsilon(1e-13));
        CHECK(metrics::rmse(permuted) == doctest::Approx(metrics::rmse(s)).epsilon(1e-13));
    }

    // the diagonal path upper-bounds DTW for equal lengths; dtw is symmetric
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t m = 1 + rng.index(20);
        std::vector<double> a(m), b(m);
        for (double& v : a) v = rng.uniform(-2, 2);
        for (double& v : b) v = rng.uniform(-2, 2);
        double diag = 0.0;
        for (std::size_t i = 0; i < m; ++i) diag += std::abs(a[i] - b[i]);
        const double d = metrics::dtw(a, b);
        CHECK(d <= diag + 1e-12);
        CHECK(metrics::dtw(b, a) == d);
    }
}
