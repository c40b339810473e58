#include "dest/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace dest {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << "x";
        os << s[i];
    }
    os << "]";
    return os.str();
}

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int d : s) {
        if (d < 0) throw ShapeError("negative extent in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

void TensorNode::ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
}

namespace {
thread_local bool g_grad_enabled = true;
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

NodePtr make_node(const Shape& shape) {
    auto n = std::make_shared<TensorNode>();
    n->shape = shape;
    n->value.resize(static_cast<size_t>(shape_numel(shape)));
    return n;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    auto n = make_node(shape);
    std::fill(n->value.begin(), n->value.end(), 0.0);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::full(const Shape& shape, double v, bool requires_grad) {
    auto n = make_node(shape);
    std::fill(n->value.begin(), n->value.end(), v);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::from_data(const Shape& shape, std::vector<double> data, bool requires_grad) {
    if (static_cast<int64_t>(data.size()) != shape_numel(shape)) {
        throw ShapeError("from_data: " + std::to_string(data.size()) +
                         " values for shape " + shape_str(shape));
    }
    auto n = std::make_shared<TensorNode>();
    n->shape = shape;
    n->value = std::move(data);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_data({1}, {v}, requires_grad);
}

const Shape& Tensor::shape() const {
    if (!node_) throw InvariantError("shape() on an undefined tensor");
    return node_->shape;
}

int Tensor::dim(int axis) const {
    const Shape& s = shape();
    if (axis < 0 || axis >= static_cast<int>(s.size())) {
        throw ShapeError("dim(" + std::to_string(axis) + ") on rank-" +
                         std::to_string(s.size()) + " tensor");
    }
    return s[axis];
}

int64_t Tensor::numel() const { return node_ ? node_->numel() : 0; }

double* Tensor::data() { return node_->value.data(); }
const double* Tensor::data() const { return node_->value.data(); }

double* Tensor::grad_data() {
    return node_ && !node_->grad.empty() ? node_->grad.data() : nullptr;
}
const double* Tensor::grad_data() const {
    return node_ && !node_->grad.empty() ? node_->grad.data() : nullptr;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
void Tensor::set_requires_grad(bool v) {
    if (!node_) throw InvariantError("set_requires_grad on undefined tensor");
    node_->requires_grad = v;
}

double Tensor::item() const {
    if (numel() != 1) {
        throw ShapeError("item() on tensor with " + std::to_string(numel()) + " elements");
    }
    return node_->value[0];
}

void Tensor::zero_grad() {
    if (!node_) throw InvariantError("zero_grad on undefined tensor");
    node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::detach() const {
    if (!node_) return Tensor();
    auto n = std::make_shared<TensorNode>();
    n->shape = node_->shape;
    n->value = node_->value;
    n->requires_grad = false;
    return Tensor(std::move(n));
}

void Tensor::backward() {
    if (!node_) throw InvariantError("backward on undefined tensor");
    if (numel() != 1) {
        throw ShapeError("backward requires a scalar root, got " + shape_str(shape()));
    }

    // Iterative post-order DFS; the post-order list ends with the root, so
    // walking it back-to-front visits every node after all of its consumers.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<std::pair<TensorNode*, size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            TensorNode* p = n->parents[next++].get();
            if (seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    for (TensorNode* n : order) {
        if (n->requires_grad) n->ensure_grad();
    }
    if (node_->grad.empty()) node_->grad.assign(1, 0.0);
    node_->grad[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
}

} // namespace dest
