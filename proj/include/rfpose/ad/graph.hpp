#pragma once

#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfpose::ad {

// Graph scalars are double: gradient checks at step 1e-3 need a noise floor
// well under their tolerances. Interchange formats stay f32.
using real = double;

using Shape = std::vector<int>;

inline size_t shape_count(const Shape& s) {
    size_t n = 1;
    for (int d : s) n *= size_t(d);
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out + "]";
}

struct Node;
using NodePtr = std::shared_ptr<Node>;

// One value in the computation graph. `backprop` scatters this node's grad
// into its parents; it is set by the op that created the node.
struct Node {
    Shape shape;
    std::vector<real> val;
    std::vector<real> grad;
    bool needs_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backprop;

    size_t count() const { return val.size(); }
};

// Value handle. Copies share the underlying node.
class Var {
public:
    Var() = default;
    explicit Var(NodePtr n) : node_(std::move(n)) {}

    static Var constant(Shape shape, std::vector<real> data);
    static Var param(Shape shape, std::vector<real> data);
    static Var zeros(Shape shape, bool needs_grad = false);
    static Var scalar(real v);

    const Shape& shape() const { return node_->shape; }
    size_t count() const { return node_->count(); }
    const std::vector<real>& value() const { return node_->val; }
    std::vector<real>& value() { return node_->val; }
    const std::vector<real>& grad() const { return node_->grad; }
    real item() const {
        if (node_->count() != 1) throw std::runtime_error("item() on non-scalar " + shape_str(shape()));
        return node_->val[0];
    }
    bool needs_grad() const { return node_->needs_grad; }
    NodePtr node() const { return node_; }
    bool valid() const { return node_ != nullptr; }

private:
    NodePtr node_;
};

// Reverse sweep over the subgraph reachable from a root. Nodes are held in
// topological order (parents first); backward() zeroes the recorded grads,
// seeds the root with 1, and visits each node exactly once in reverse.
class Tape {
public:
    static Tape build(const Var& root);

    void backward();

    size_t size() const { return order_.size(); }
    const std::vector<NodePtr>& order() const { return order_; }

private:
    std::vector<NodePtr> order_;
    NodePtr root_;
};

namespace detail {
NodePtr make_node(Shape shape, std::vector<NodePtr> parents);
}

}  // namespace rfpose::ad
