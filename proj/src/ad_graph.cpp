#include "rfpose/ad/graph.hpp"

#include <unordered_set>

namespace rfpose::ad {

Var Var::constant(Shape shape, std::vector<real> data) {
    if (shape_count(shape) != data.size())
        throw std::runtime_error("constant: shape " + shape_str(shape) + " does not match data size " +
                                 std::to_string(data.size()));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->val = std::move(data);
    return Var(n);
}

Var Var::param(Shape shape, std::vector<real> data) {
    Var v = constant(std::move(shape), std::move(data));
    v.node()->needs_grad = true;
    return v;
}

Var Var::zeros(Shape shape, bool needs_grad) {
    size_t n = shape_count(shape);
    Var v = constant(std::move(shape), std::vector<real>(n, 0.0f));
    v.node()->needs_grad = needs_grad;
    return v;
}

Var Var::scalar(real v) { return constant({1}, {v}); }

Tape Tape::build(const Var& root) {
    Tape t;
    t.root_ = root.node();
    // Iterative post-order DFS; parent visit order is the node's parent list
    // order, so the resulting topological order is deterministic.
    std::unordered_set<Node*> done;
    std::vector<std::pair<NodePtr, size_t>> stack;
    stack.emplace_back(t.root_, 0);
    while (!stack.empty()) {
        auto& [n, idx] = stack.back();
        if (done.count(n.get())) {
            stack.pop_back();
            continue;
        }
        if (idx < n->parents.size()) {
            NodePtr next = n->parents[idx++];
            if (!done.count(next.get())) stack.emplace_back(next, 0);
        } else {
            done.insert(n.get());
            t.order_.push_back(n);
            stack.pop_back();
        }
    }
    return t;
}

void Tape::backward() {
    for (auto& n : order_) n->grad.assign(n->count(), 0.0f);
    root_->grad.assign(root_->count(), 1.0f);
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        Node& n = **it;
        if (n.backprop) n.backprop(n);
    }
}

namespace detail {
NodePtr make_node(Shape shape, std::vector<NodePtr> parents) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->val.resize(shape_count(n->shape));
    n->parents = std::move(parents);
    for (auto& p : n->parents)
        if (p->needs_grad) n->needs_grad = true;
    return n;
}
}  // namespace detail

}  // namespace rfpose::ad
