#include <doctest.h>

#include "chaoscast/errors.hpp"
#include "chaoscast/graph.hpp"
#include "chaoscast/rng.hpp"

#include <cmath>
#include <functional>
#include <vector>

using namespace chaoscast;
using num::Bindings;
using num::CompGraph;
using num::NodeId;

TEST_CASE("forward: elementwise add") {
    CompGraph g;
    const NodeId a = g.leaf("a");
    const NodeId b = g.leaf("b");
    const NodeId sum = g.add(a, b);
    const DenseArray va = DenseArray::row({1, 2});
    const DenseArray vb = DenseArray::row({3, 4});
    Bindings bind(g);
    bind.bind(a, va);
    bind.bind(b, vb);
    const auto values = num::forward(g, bind);
    CHECK(values[sum].data == std::vector<double>{4, 6});
}

TEST_CASE("forward: matmul with identity") {
    CompGraph g;
    const NodeId a = g.leaf("a");
    const NodeId b = g.leaf("b");
    const NodeId prod = g.matmul(a, b);
    const DenseArray va = DenseArray::matrix(1, 2, {1, 0});
    const DenseArray vb = DenseArray::matrix(2, 2, {1, 0, 0, 1});
    Bindings bind(g);
    bind.bind(a, va);
    bind.bind(b, vb);
    const auto values = num::forward(g, bind);
    CHECK(values[prod].data == std::vector<double>{1, 0});
}

TEST_CASE("forward: tanh at zero") {
    CompGraph g;
    const NodeId x = g.leaf("x");
    const NodeId y = g.tanh(x);
    const DenseArray vx = DenseArray::row({0});
    Bindings bind(g);
    bind.bind(x, vx);
    CHECK(num::forward(g, bind)[y].data[0] == 0.0);
}

TEST_CASE("forward: purity, shape errors, non-finite detection") {
    CompGraph g;
    const NodeId a = g.leaf("a");
    const NodeId b = g.leaf("b");
    const NodeId bad = g.add(a, b, "bad_add");

    Rng rng(7);
    DenseArray va = DenseArray::row(rng.normals(3));
    DenseArray vb = DenseArray::row(rng.normals(3));
    Bindings bind(g);
    bind.bind(a, va);
    bind.bind(b, vb);
    const auto v1 = num::forward(g, bind);
    const auto v2 = num::forward(g, bind);
    CHECK(v1[bad].data == v2[bad].data); // bit-identical repeat

    DenseArray mismatched = DenseArray::row({1, 2});
    Bindings bind2(g);
    bind2.bind(a, va);
    bind2.bind(b, mismatched);
    CHECK_THROWS_WITH_AS(num::forward(g, bind2), doctest::Contains("bad_add"), ShapeError);

    Bindings bind3(g);
    bind3.bind(a, va);
    CHECK_THROWS_AS(num::forward(g, bind3), DataError); // unbound leaf

    CompGraph g2;
    const NodeId x = g2.leaf("x");
    g2.exp(x, "overflow_exp");
    DenseArray big = DenseArray::row({1000.0});
    Bindings bind4(g2);
    bind4.bind(x, big);
    CHECK_THROWS_WITH_AS(num::forward(g2, bind4), doctest::Contains("overflow_exp"), NumericError);
}

TEST_CASE("forward: concat of row vectors") {
    CompGraph g;
    const NodeId a = g.leaf("a");
    const NodeId b = g.leaf("b");
    const NodeId c = g.concat(a, b);
    const DenseArray va = DenseArray::row({1, 2});
    const DenseArray vb = DenseArray::row({3});
    Bindings bind(g);
    bind.bind(a, va);
    bind.bind(b, vb);
    const auto values = num::forward(g, bind);
    CHECK(values[c].data == std::vector<double>{1, 2, 3});
    CHECK(values[c].shape == std::vector<std::size_t>{1, 3});
}

TEST_CASE("backward: square function") {
    // f(w) = w^2 at w = 3 -> df/dw = 6
    CompGraph g;
    const NodeId w = g.leaf("w");
    const NodeId f = g.sum_squares(w);
    const DenseArray vw = DenseArray::row({3});
    Bindings bind(g);
    bind.bind(w, vw);
    const auto values = num::forward(g, bind);
    const auto grads = num::backward(g, values, f);
    CHECK(grads.at(w).data[0] == 6.0);
}

TEST_CASE("backward: least squares slope") {
    // f(w) = (w*x - y)^2 with w=0, x=1, y=2 -> df/dw = 2(wx-y)x = -4
    CompGraph g;
    const NodeId w = g.leaf("w");
    const NodeId x = g.leaf("x");
    const NodeId neg_y = g.leaf("neg_y");
    const NodeId resid = g.add(g.matmul(w, x), neg_y);
    const NodeId f = g.sum_squares(resid);
    const DenseArray vw = DenseArray::scalar(0.0);
    const DenseArray vx = DenseArray::scalar(1.0);
    const DenseArray vny = DenseArray::scalar(-2.0);
    Bindings bind(g);
    bind.bind(w, vw);
    bind.bind(x, vx);
    bind.bind(neg_y, vny);
    const auto values = num::forward(g, bind);
    const auto grads = num::backward(g, values, f);
    CHECK(grads.at(w).data[0] == -4.0);
}

TEST_CASE("backward: seed must be scalar") {
    CompGraph g;
    const NodeId w = g.leaf("w");
    const NodeId y = g.tanh(w);
    const DenseArray vw = DenseArray::row({1, 2});
    Bindings bind(g);
    bind.bind(w, vw);
    const auto values = num::forward(g, bind);
    CHECK_THROWS_AS(num::backward(g, values, y), DataError);
}

TEST_CASE("backward: linear in the seed") {
    // gradient of s1 + s2 equals gradient of s1 plus gradient of s2
    CompGraph g;
    const NodeId w = g.leaf("w");
    const NodeId s1 = g.sum_squares(g.tanh(w));
    const NodeId s2 = g.sum_squares(w);
    const NodeId both = g.add(s1, s2);
    Rng rng(11);
    const DenseArray vw = DenseArray::row(rng.normals(4));
    Bindings bind(g);
    bind.bind(w, vw);
    const auto values = num::forward(g, bind);
    const auto g1 = num::backward(g, values, s1);
    const auto g2 = num::backward(g, values, s2);
    const auto gb = num::backward(g, values, both);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(gb.at(w).data[i] == doctest::Approx(g1.at(w).data[i] + g2.at(w).data[i]).epsilon(1e-15));
    }
}

TEST_CASE("backward: clamp gate") {
    CompGraph g;
    const NodeId w = g.leaf("w");
    const NodeId f = g.sum_squares(g.clamp(w, -1.0, 1.0));
    const DenseArray vw = DenseArray::row({0.5, 3.0}); // inside, above
    Bindings bind(g);
    bind.bind(w, vw);
    const auto values = num::forward(g, bind);
    CHECK(values[f].data[0] == doctest::Approx(0.25 + 1.0));
    const auto grads = num::backward(g, values, f);
    CHECK(grads.at(w).data[0] == 1.0); // d(w^2)/dw inside the window
    CHECK(grads.at(w).data[1] == 0.0); // pinned outside
}

namespace {

// A small random feedforward graph over a single flat parameter leaf: the
// parameter vector is sliced into per-layer weight/bias bindings.
struct FlatNet {
    CompGraph graph;
    std::vector<NodeId> param_leaves;
    std::vector<std::vector<std::size_t>> param_shapes;
    NodeId input = 0;
    NodeId output = 0;
    DenseArray input_value;
    std::size_t total = 0;

    void build(const std::vector<std::size_t>& widths, Rng& rng) {
        input = graph.leaf("input");
        input_value = DenseArray::row(rng.normals(widths.front()));
        NodeId h = input;
        for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
            const NodeId w = graph.leaf("W" + std::to_string(i));
            const NodeId b = graph.leaf("b" + std::to_string(i));
            param_leaves.push_back(w);
            param_shapes.push_back({widths[i], widths[i + 1]});
            param_leaves.push_back(b);
            param_shapes.push_back({1, widths[i + 1]});
            h = g_act(i, graph.add(graph.matmul(h, w), b));
        }
        output = graph.sum_squares(h);
        total = 0;
        for (const auto& s : param_shapes) total += shape_product(s);
    }

    NodeId g_act(std::size_t layer, NodeId x) {
        return layer % 2 == 0 ? graph.tanh(x) : x;
    }

    std::vector<DenseArray> slices(const DenseArray& flat) const {
        std::vector<DenseArray> out;
        std::size_t off = 0;
        for (const auto& s : param_shapes) {
            const std::size_t n = shape_product(s);
            out.emplace_back(s, std::vector<double>(flat.data.begin() + off,
                                                    flat.data.begin() + off + n));
            off += n;
        }
        return out;
    }

    double value(const DenseArray& flat) const { return forward_values(flat)[output].data[0]; }

    std::vector<DenseArray> forward_values(const DenseArray& flat) const {
        const auto parts = slices(flat);
        Bindings bind(graph);
        bind.bind(input, input_value);
        for (std::size_t i = 0; i < param_leaves.size(); ++i) bind.bind(param_leaves[i], parts[i]);
        return num::forward(graph, bind);
    }

    DenseArray gradient(const DenseArray& flat) const {
        const auto values = forward_values(flat);
        const auto grads = num::backward(graph, values, output);
        DenseArray out({1, total});
        std::size_t off = 0;
        for (std::size_t i = 0; i < param_leaves.size(); ++i) {
            const DenseArray& g = grads.at(param_leaves[i]);
            std::copy(g.data.begin(), g.data.end(), out.data.begin() + off);
            off += g.size();
        }
        return out;
    }
};

} // namespace

TEST_CASE("backward matches finite differences on a random 3-layer network") {
    Rng rng(2024);
    FlatNet net;
    net.build({2, 3, 2, 1}, rng); // 6+3 + 6+2 + 2+1 = 20 parameters
    CHECK(net.total == 20);
    DenseArray flat = DenseArray::row(rng.normals(net.total));
    for (double& x : flat.data) x *= 0.5;
    const double err = num::grad_check([&](const DenseArray& p) { return net.value(p); },
                                       [&](const DenseArray& p) { return net.gradient(p); },
                                       flat, 1e-5);
    CHECK(err < 1e-4);
}

TEST_CASE("grad_check: quadratic, linear, tanh") {
    CompGraph g;
    const NodeId w = g.leaf("w");
    const NodeId f = g.sum_squares(w);
    auto value = [&](const DenseArray& p) {
        Bindings bind(g);
        bind.bind(w, p);
        return num::forward(g, bind)[f].data[0];
    };
    auto grad = [&](const DenseArray& p) {
        Bindings bind(g);
        bind.bind(w, p);
        const auto values = num::forward(g, bind);
        return num::backward(g, values, f).at(w);
    };
    const DenseArray at_one = DenseArray::row({1.0});
    CHECK(num::grad_check(value, grad, at_one, 1e-5) < 1e-8);

    // central differences are exact for affine functions up to roundoff
    auto lin = [](const DenseArray& p) { return 3.0 * p.data[0] + 1.0; };
    auto lin_grad = [](const DenseArray&) { return DenseArray::row({3.0}); };
    const DenseArray pt = DenseArray::row({0.7});
    CHECK(num::grad_check(lin, lin_grad, pt, 1e-5) < 1e-10);

    auto th = [](const DenseArray& p) { return std::tanh(p.data[0]); };
    auto th_grad = [](const DenseArray& p) {
        const double t = std::tanh(p.data[0]);
        return DenseArray::row({1.0 - t * t});
    };
    const DenseArray half = DenseArray::row({0.5});
    CHECK(num::grad_check(th, th_grad, half, 1e-5) < 1e-7);

    CHECK_THROWS_AS(num::grad_check(lin, lin_grad, pt, 0.0), DataError);
}

TEST_CASE("property: gradients of random composite graphs check out") {
    // random chains over the primitive set, seeded; grad_check < 1e-4
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        Rng rng(1000 + seed);
        CompGraph g;
        const NodeId params = g.leaf("params");
        const std::size_t k = 2 + rng.index(4);
        std::vector<DenseArray> const_values;
        std::vector<NodeId> const_leaves;
        auto add_const = [&](DenseArray v) {
            const_leaves.push_back(g.leaf("c" + std::to_string(const_leaves.size())));
            const_values.push_back(std::move(v));
            return const_leaves.back();
        };

        NodeId h = params;
        std::size_t width = k;
        const std::size_t depth = 2 + rng.index(3);
        for (std::size_t d = 0; d < depth; ++d) {
            switch (rng.index(6)) {
            case 0: h = g.tanh(h); break;
            case 1: h = g.exp(g.tanh(h)); break; // keep exp input bounded
            case 2: h = g.mul(h, add_const(DenseArray::row(rng.normals(width)))); break;
            case 3: h = g.add(h, add_const(DenseArray::row(rng.normals(width)))); break;
            case 4: {
                const std::size_t w2 = 2 + rng.index(3);
                DenseArray m({width, w2});
                for (double& x : m.data) x = rng.uniform(-0.7, 0.7);
                h = g.matmul(h, add_const(std::move(m)));
                width = w2;
                break;
            }
            case 5: {
                DenseArray extra = DenseArray::row(rng.normals(2));
                h = g.concat(h, add_const(std::move(extra)));
                width += 2;
                break;
            }
            }
            h = g.clamp(h, -10.0, 10.0); // interior: values stay well inside
        }
        const NodeId out = g.sum_squares(h);

        auto run = [&](const DenseArray& p) {
            Bindings bind(g);
            bind.bind(params, p);
            for (std::size_t i = 0; i < const_leaves.size(); ++i) {
                bind.bind(const_leaves[i], const_values[i]);
            }
            return num::forward(g, bind);
        };
        auto value = [&](const DenseArray& p) { return run(p)[out].data[0]; };
        auto grad = [&](const DenseArray& p) {
            const auto values = run(p);
            return num::backward(g, values, out).at(params);
        };
        DenseArray p0 = DenseArray::row(rng.normals(k));
        const double err = num::grad_check(value, grad, p0, 1e-5);
        INFO("seed ", seed);
        CHECK(err < 1e-4);
    }
}
