#ifndef CHAOSCAST_GRAPH_HPP
#define CHAOSCAST_GRAPH_HPP

#include "chaoscast/dense.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

namespace chaoscast::num {

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class Op {
    leaf,        // bound input or parameter
    matmul,      // (m,k) x (k,n) -> (m,n)
    add,         // elementwise, same shape
    mul,         // elementwise, same shape
    tanh,        // elementwise
    exp,         // elementwise
    clamp,       // elementwise min(max(x, lo), hi); zero gradient outside [lo, hi]
    sum_squares, // sum of x_i^2 -> 1x1 scalar
    concat,      // two row vectors -> one row vector
};

struct Node {
    Op op = Op::leaf;
    std::string name;
    std::array<NodeId, 2> in{kNoNode, kNoNode};
    double lo = 0.0; // clamp bounds
    double hi = 0.0;
    std::size_t arity() const { return in[0] == kNoNode ? 0 : (in[1] == kNoNode ? 1 : 2); }
};

/// Static computation graph. Nodes are appended in construction order, which
/// is therefore a topological order: an operation may only reference nodes
/// that already exist. Immutable once built; evaluation state lives entirely
/// in caller-owned buffers, so one graph may be evaluated from many threads.
class CompGraph {
public:
    NodeId leaf(std::string name);
    NodeId matmul(NodeId a, NodeId b, std::string name = {});
    NodeId add(NodeId a, NodeId b, std::string name = {});
    NodeId mul(NodeId a, NodeId b, std::string name = {});
    NodeId tanh(NodeId x, std::string name = {});
    NodeId exp(NodeId x, std::string name = {});
    NodeId clamp(NodeId x, double lo, double hi, std::string name = {});
    NodeId sum_squares(NodeId x, std::string name = {});
    NodeId concat(NodeId a, NodeId b, std::string name = {});

    const Node& node(NodeId id) const { return nodes_[id]; }
    std::size_t size() const { return nodes_.size(); }
    bool is_leaf(NodeId id) const { return nodes_[id].op == Op::leaf; }
    const std::vector<NodeId>& leaves() const { return leaves_; }

private:
    NodeId push(Node n);
    std::vector<Node> nodes_;
    std::vector<NodeId> leaves_;
};

/// Leaf bindings for one evaluation. Backed by a dense per-node table.
class Bindings {
public:
    explicit Bindings(const CompGraph& graph) : slots_(graph.size(), nullptr) {}
    void bind(NodeId id, const DenseArray& value) { slots_.at(id) = &value; }
    const DenseArray* get(NodeId id) const { return id < slots_.size() ? slots_[id] : nullptr; }

private:
    std::vector<const DenseArray*> slots_;
};

/// Evaluate every node. Throws ShapeError (naming the node) on incompatible
/// inputs, DataError on an unbound leaf, NumericError if any node produces a
/// non-finite value. Deterministic: fixed bindings give bit-identical output.
std::vector<DenseArray> forward(const CompGraph& graph, const Bindings& bindings);

/// As forward(), but reuses the caller's value buffers across calls.
void forward_into(const CompGraph& graph, const Bindings& bindings, std::vector<DenseArray>& values);

/// Reverse-mode gradients of a scalar seed node with respect to every leaf.
/// Accumulation follows the fixed topological order of the graph, so results
/// are deterministic run to run. Throws DataError if the seed is not scalar.
std::unordered_map<NodeId, DenseArray> backward(const CompGraph& graph,
                                                const std::vector<DenseArray>& values,
                                                NodeId seed);

/// As backward(), but fills per-node gradient buffers owned by the caller.
void backward_into(const CompGraph& graph, const std::vector<DenseArray>& values, NodeId seed,
                   std::vector<DenseArray>& grads);

/// Compare an analytic gradient against central finite differences at the
/// given point. Returns max over coordinates of
///   |analytic - central| / max(1e-12, |analytic| + |central|).
/// Throws NumericError if the function evaluates to a non-finite value.
double grad_check(const std::function<double(const DenseArray&)>& f,
                  const std::function<DenseArray(const DenseArray&)>& grad_f,
                  const DenseArray& params, double step);

} // namespace chaoscast::num

#endif
