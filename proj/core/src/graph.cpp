#include "chaoscast/graph.hpp"

#include "chaoscast/errors.hpp"

#include <cmath>
#include <utility>

namespace chaoscast::num {

namespace {

std::string auto_name(const char* op, std::size_t id) {
    return std::string(op) + "#" + std::to_string(id);
}

[[noreturn]] void shape_fail(const Node& node, const std::string& detail) {
    throw ShapeError("node '" + node.name + "': " + detail);
}

void check_finite(const Node& node, const DenseArray& value) {
    if (!value.all_finite()) {
        throw NumericError("node '" + node.name + "' produced a non-finite value");
    }
}

void resize_to(DenseArray& a, std::vector<std::size_t> shape) {
    a.shape = std::move(shape);
    a.data.assign(shape_product(a.shape), 0.0);
}

} // namespace

NodeId CompGraph::push(Node n) {
    const NodeId id = nodes_.size();
    for (std::size_t k = 0; k < n.arity(); ++k) {
        if (n.in[k] >= id) {
            throw DataError("graph node '" + n.name + "' references a node that does not exist yet");
        }
    }
    if (n.op == Op::leaf) leaves_.push_back(id);
    nodes_.push_back(std::move(n));
    return id;
}

NodeId CompGraph::leaf(std::string name) {
    return push(Node{Op::leaf, std::move(name), {kNoNode, kNoNode}});
}

NodeId CompGraph::matmul(NodeId a, NodeId b, std::string name) {
    if (name.empty()) name = auto_name("matmul", nodes_.size());
    return push(Node{Op::matmul, std::move(name), {a, b}});
}

NodeId CompGraph::add(NodeId a, NodeId b, std::string name) {
    if (name.empty()) name = auto_name("add", nodes_.size());
    return push(Node{Op::add, std::move(name), {a, b}});
}

NodeId CompGraph::mul(NodeId a, NodeId b, std::string name) {
    if (name.empty()) name = auto_name("mul", nodes_.size());
    return push(Node{Op::mul, std::move(name), {a, b}});
}

NodeId CompGraph::tanh(NodeId x, std::string name) {
    if (name.empty()) name = auto_name("tanh", nodes_.size());
    return push(Node{Op::tanh, std::move(name), {x, kNoNode}});
}

NodeId CompGraph::exp(NodeId x, std::string name) {
    if (name.empty()) name = auto_name("exp", nodes_.size());
    return push(Node{Op::exp, std::move(name), {x, kNoNode}});
}

NodeId CompGraph::clamp(NodeId x, double lo, double hi, std::string name) {
    if (lo >= hi) throw DataError("clamp: lo must be < hi");
    if (name.empty()) name = auto_name("clamp", nodes_.size());
    Node n{Op::clamp, std::move(name), {x, kNoNode}};
    n.lo = lo;
    n.hi = hi;
    return push(std::move(n));
}

NodeId CompGraph::sum_squares(NodeId x, std::string name) {
    if (name.empty()) name = auto_name("sum_squares", nodes_.size());
    return push(Node{Op::sum_squares, std::move(name), {x, kNoNode}});
}

NodeId CompGraph::concat(NodeId a, NodeId b, std::string name) {
    if (name.empty()) name = auto_name("concat", nodes_.size());
    return push(Node{Op::concat, std::move(name), {a, b}});
}

void forward_into(const CompGraph& graph, const Bindings& bindings, std::vector<DenseArray>& values) {
    values.resize(graph.size());
    for (NodeId id = 0; id < graph.size(); ++id) {
        const Node& n = graph.node(id);
        DenseArray& out = values[id];
        switch (n.op) {
        case Op::leaf: {
            const DenseArray* bound = bindings.get(id);
            if (bound == nullptr) {
                throw DataError("leaf '" + n.name + "' is not bound");
            }
            out = *bound;
            break;
        }
        case Op::matmul: {
            const DenseArray& a = values[n.in[0]];
            const DenseArray& b = values[n.in[1]];
            if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
                shape_fail(n, "matmul of " + a.shape_string() + " with " + b.shape_string());
            }
            const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
            resize_to(out, {m, p});
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const double av = a.data[i * k + kk];
                    const double* brow = &b.data[kk * p];
                    double* orow = &out.data[i * p];
                    for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
                }
            }
            break;
        }
        case Op::add: {
            const DenseArray& a = values[n.in[0]];
            const DenseArray& b = values[n.in[1]];
            if (!a.same_shape(b)) {
                shape_fail(n, "add of " + a.shape_string() + " with " + b.shape_string());
            }
            out.shape = a.shape;
            out.data.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] + b.data[i];
            break;
        }
        case Op::mul: {
            const DenseArray& a = values[n.in[0]];
            const DenseArray& b = values[n.in[1]];
            if (!a.same_shape(b)) {
                shape_fail(n, "mul of " + a.shape_string() + " with " + b.shape_string());
            }
            out.shape = a.shape;
            out.data.resize(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
            break;
        }
        case Op::tanh: {
            const DenseArray& x = values[n.in[0]];
            out.shape = x.shape;
            out.data.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = std::tanh(x.data[i]);
            break;
        }
        case Op::exp: {
            const DenseArray& x = values[n.in[0]];
            out.shape = x.shape;
            out.data.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) out.data[i] = std::exp(x.data[i]);
            break;
        }
        case Op::clamp: {
            const DenseArray& x = values[n.in[0]];
            out.shape = x.shape;
            out.data.resize(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                out.data[i] = std::min(std::max(x.data[i], n.lo), n.hi);
            }
            break;
        }
        case Op::sum_squares: {
            const DenseArray& x = values[n.in[0]];
            double s = 0.0;
            for (double v : x.data) s += v * v;
            out.shape = {1, 1};
            out.data.assign(1, s);
            break;
        }
        case Op::concat: {
            const DenseArray& a = values[n.in[0]];
            const DenseArray& b = values[n.in[1]];
            if (a.rank() != 2 || b.rank() != 2 || a.rows() != 1 || b.rows() != 1) {
                shape_fail(n, "concat expects row vectors, got " + a.shape_string() + " and " +
                                  b.shape_string());
            }
            out.shape = {1, a.cols() + b.cols()};
            out.data.resize(a.size() + b.size());
            std::copy(a.data.begin(), a.data.end(), out.data.begin());
            std::copy(b.data.begin(), b.data.end(), out.data.begin() + a.size());
            break;
        }
        }
        check_finite(n, out);
    }
}

std::vector<DenseArray> forward(const CompGraph& graph, const Bindings& bindings) {
    std::vector<DenseArray> values;
    forward_into(graph, bindings, values);
    return values;
}

void backward_into(const CompGraph& graph, const std::vector<DenseArray>& values, NodeId seed,
                   std::vector<DenseArray>& grads) {
    if (seed >= graph.size() || values.size() != graph.size()) {
        throw DataError("backward: seed or values do not match the graph");
    }
    if (values[seed].size() != 1) {
        throw DataError("backward: seed node '" + graph.node(seed).name + "' is not scalar");
    }
    grads.resize(graph.size());
    for (NodeId id = 0; id < graph.size(); ++id) {
        grads[id].shape = values[id].shape;
        grads[id].data.assign(values[id].size(), 0.0);
    }
    grads[seed].data[0] = 1.0;

    // Nodes are stored in topological order; walk them backwards.
    for (NodeId id = graph.size(); id-- > 0;) {
        const Node& n = graph.node(id);
        const DenseArray& g = grads[id];
        switch (n.op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            const DenseArray& a = values[n.in[0]];
            const DenseArray& b = values[n.in[1]];
            DenseArray& ga = grads[n.in[0]];
            DenseArray& gb = grads[n.in[1]];
            const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
            // dA += g . B^T ; dB += A^T . g
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < p; ++j) {
                    const double gv = g.data[i * p + j];
                    if (gv == 0.0) continue;
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        ga.data[i * k + kk] += gv * b.data[kk * p + j];
                        gb.data[kk * p + j] += gv * a.data[i * k + kk];
                    }
                }
            }
            break;
        }
        case Op::add: {
            DenseArray& ga = grads[n.in[0]];
            DenseArray& gb = grads[n.in[1]];
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data[i] += g.data[i];
                gb.data[i] += g.data[i];
            }
            break;
        }
        case Op::mul: {
            const DenseArray& a = values[n.in[0]];
            const DenseArray& b = values[n.in[1]];
            DenseArray& ga = grads[n.in[0]];
            DenseArray& gb = grads[n.in[1]];
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga.data[i] += g.data[i] * b.data[i];
                gb.data[i] += g.data[i] * a.data[i];
            }
            break;
        }
        case Op::tanh: {
            const DenseArray& y = values[id];
            DenseArray& gx = grads[n.in[0]];
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
            }
            break;
        }
        case Op::exp: {
            const DenseArray& y = values[id];
            DenseArray& gx = grads[n.in[0]];
            for (std::size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i] * y.data[i];
            break;
        }
        case Op::clamp: {
            const DenseArray& x = values[n.in[0]];
            DenseArray& gx = grads[n.in[0]];
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (x.data[i] >= n.lo && x.data[i] <= n.hi) gx.data[i] += g.data[i];
            }
            break;
        }
        case Op::sum_squares: {
            const DenseArray& x = values[n.in[0]];
            DenseArray& gx = grads[n.in[0]];
            const double gv = g.data[0];
            for (std::size_t i = 0; i < x.size(); ++i) gx.data[i] += gv * 2.0 * x.data[i];
            break;
        }
        case Op::concat: {
            DenseArray& ga = grads[n.in[0]];
            DenseArray& gb = grads[n.in[1]];
            for (std::size_t i = 0; i < ga.size(); ++i) ga.data[i] += g.data[i];
            for (std::size_t i = 0; i < gb.size(); ++i) gb.data[i] += g.data[ga.size() + i];
            break;
        }
        }
    }
}

std::unordered_map<NodeId, DenseArray> backward(const CompGraph& graph,
                                                const std::vector<DenseArray>& values,
                                                NodeId seed) {
    std::vector<DenseArray> grads;
    backward_into(graph, values, seed, grads);
    std::unordered_map<NodeId, DenseArray> out;
    out.reserve(graph.leaves().size());
    for (NodeId id : graph.leaves()) out.emplace(id, std::move(grads[id]));
    return out;
}

double grad_check(const std::function<double(const DenseArray&)>& f,
                  const std::function<DenseArray(const DenseArray&)>& grad_f,
                  const DenseArray& params, double step) {
    if (!(step > 0.0)) throw DataError("grad_check: step must be > 0");
    const DenseArray analytic = grad_f(params);
    if (analytic.size() != params.size()) {
        throw ShapeError("grad_check: gradient size does not match parameter size");
    }
    DenseArray probe = params;
    double max_rel = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = probe.data[i];
        probe.data[i] = saved + step;
        const double fp = f(probe);
        probe.data[i] = saved - step;
        const double fm = f(probe);
        probe.data[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("grad_check: function value is not finite at coordinate " +
                               std::to_string(i));
        }
        const double central = (fp - fm) / (2.0 * step);
        const double denom = std::max(1e-12, std::abs(analytic.data[i]) + std::abs(central));
        max_rel = std::max(max_rel, std::abs(analytic.data[i] - central) / denom);
    }
    return max_rel;
}

} // namespace chaoscast::num
