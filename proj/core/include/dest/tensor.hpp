#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

#include "dest/errors.hpp"

namespace dest {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One vertex of the autodiff graph. Ops allocate a node for their result and,
// when gradients are being recorded, stash the parent handles plus a closure
// that scatters the node's gradient back into them.
struct TensorNode {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;   // empty until backward (or zero_grad) touches it
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(TensorNode&)> backward_fn;

    int64_t numel() const { return static_cast<int64_t>(value.size()); }
    void ensure_grad();         // allocate a zero-filled grad buffer if absent
};

// While a guard is alive, newly created ops do not record parents/backward
// closures. Used for evaluation passes where only values are needed.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

bool grad_enabled();

// Value-semantics handle onto a graph node. Copies share the node, which is
// what makes "the same parameter appears in many ops" work: every op keeps a
// NodePtr to it and backward accumulates into the single shared grad buffer.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(NodePtr n) : node_(std::move(n)) {}

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, double v, bool requires_grad = false);
    static Tensor from_data(const Shape& shape, std::vector<double> data,
                            bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    int dim(int axis) const;
    int rank() const { return static_cast<int>(shape().size()); }
    int64_t numel() const;

    double* data();
    const double* data() const;
    double* grad_data();              // nullptr when no grad buffer exists
    const double* grad_data() const;
    bool has_grad() const;
    bool requires_grad() const;
    void set_requires_grad(bool v);

    double item() const;              // value of a single-element tensor

    // Reverse-mode sweep from a scalar root. Allocates grad buffers for every
    // reachable requires_grad node, seeds d(root)/d(root) = 1 and walks the
    // recorded graph in reverse topological order.
    void backward();

    void zero_grad();                 // zero (allocating if needed) this node's grad
    Tensor detach() const;            // same values, no history, no grad

    NodePtr node() const { return node_; }
    TensorNode& n() { return *node_; }
    const TensorNode& n() const { return *node_; }

private:
    NodePtr node_;
};

// Shared helper for op implementations: fresh node with uninitialised value
// storage of the given shape.
NodePtr make_node(const Shape& shape);

} // namespace dest
