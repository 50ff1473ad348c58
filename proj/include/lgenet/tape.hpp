#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "lgenet/tensor.hpp"

namespace lgenet {

// Trainable tensor: value, gradient and the SGD momentum buffer share the
// shape at all times.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> momentum;

    Parameter() = default;
    Parameter(std::string n, Tensor<T> v)
        : name(std::move(n)),
          value(std::move(v)),
          grad(Tensor<T>::zeros(value.shape)),
          momentum(Tensor<T>::zeros(value.shape)) {}

    void zero_grad() { grad.fill(T(0)); }
};

// Non-trainable named state (batch-norm running statistics). Saved in
// checkpoints, untouched by the optimizer.
template <typename T>
struct Buffer {
    std::string name;
    Tensor<T> value;
};

template <typename T>
class ParameterStore {
public:
    Parameter<T>& add(std::string name, Tensor<T> init) {
        for (auto& p : params_)
            check(p->name != name, "parameter store: duplicate name " + name);
        params_.push_back(std::make_unique<Parameter<T>>(std::move(name), std::move(init)));
        return *params_.back();
    }

    Buffer<T>& add_buffer(std::string name, Tensor<T> init) {
        for (auto& b : buffers_)
            check(b->name != name, "parameter store: duplicate buffer " + name);
        buffers_.push_back(std::make_unique<Buffer<T>>());
        buffers_.back()->name = std::move(name);
        buffers_.back()->value = std::move(init);
        return *buffers_.back();
    }

    void zero_grad() {
        for (auto& p : params_) p->zero_grad();
    }

    int64_t parameter_count() const {
        int64_t n = 0;
        for (auto& p : params_) n += p->value.numel();
        return n;
    }

    std::vector<std::unique_ptr<Parameter<T>>>& params() { return params_; }
    const std::vector<std::unique_ptr<Parameter<T>>>& params() const { return params_; }
    std::vector<std::unique_ptr<Buffer<T>>>& buffers() { return buffers_; }
    const std::vector<std::unique_ptr<Buffer<T>>>& buffers() const { return buffers_; }

    Parameter<T>* find(const std::string& name) {
        for (auto& p : params_)
            if (p->name == name) return p.get();
        return nullptr;
    }

private:
    std::vector<std::unique_ptr<Parameter<T>>> params_;
    std::vector<std::unique_ptr<Buffer<T>>> buffers_;
};

// Node handle on a tape.
using Var = int32_t;

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order by construction; backward() runs the recorded pulls in
// reverse and visits each node once.
template <typename T>
class Tape {
public:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;  // sized lazily during backward
        bool needs_grad = false;
        std::function<void(Tape&)> pull;  // accumulates into input grads
        Parameter<T>* bound = nullptr;    // set for parameter leaves
    };

    // Id the next emitted node will get; ops capture it in their pull lambda.
    Var next_id() const { return static_cast<Var>(nodes_.size()); }

    Var leaf(Tensor<T> value, bool needs_grad = false) {
        nodes_.push_back(Node{std::move(value), {}, needs_grad, nullptr, nullptr});
        return static_cast<Var>(nodes_.size() - 1);
    }

    Var param(Parameter<T>& p) {
        Var id = leaf(p.value, true);
        nodes_[static_cast<size_t>(id)].bound = &p;
        return id;
    }

    Var emit(Tensor<T> value, std::vector<Var> inputs, std::function<void(Tape&)> pull) {
        check(value.all_finite(), "tape: non-finite value produced by an op");
        bool ng = false;
        for (Var i : inputs) ng = ng || nodes_[static_cast<size_t>(i)].needs_grad;
        nodes_.push_back(Node{std::move(value), {}, ng, ng ? std::move(pull) : nullptr, nullptr});
        return static_cast<Var>(nodes_.size() - 1);
    }

    const Tensor<T>& val(Var id) const { return nodes_[static_cast<size_t>(id)].value; }
    Tensor<T>& val(Var id) { return nodes_[static_cast<size_t>(id)].value; }
    bool needs_grad(Var id) const { return nodes_[static_cast<size_t>(id)].needs_grad; }

    // Gradient buffer, allocated on first touch.
    Tensor<T>& grad(Var id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (n.grad.numel() == 0 && n.value.numel() != 0)
            n.grad = Tensor<T>::zeros(n.value.shape);
        return n.grad;
    }

    bool has_grad(Var id) const {
        return nodes_[static_cast<size_t>(id)].grad.numel() != 0;
    }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Gradients of
    // parameter leaves are accumulated into Parameter::grad.
    void backward(Var loss) {
        const Node& ln = nodes_[static_cast<size_t>(loss)];
        check(ln.value.numel() == 1, "backward: loss must be a scalar");
        if (!ln.needs_grad) return;
        grad(loss).v[0] = T(1);
        for (int64_t i = loss; i >= 0; --i) {
            Node& n = nodes_[static_cast<size_t>(i)];
            if (!n.needs_grad || n.grad.numel() == 0) continue;
            if (n.pull) n.pull(*this);
            if (n.bound) {
                auto& g = n.bound->grad;
                for (int64_t k = 0; k < n.grad.numel(); ++k)
                    g.v[static_cast<size_t>(k)] += n.grad.v[static_cast<size_t>(k)];
            }
        }
    }

    size_t size() const { return nodes_.size(); }

private:
    // deque: references to node values stay valid while new nodes append
    std::deque<Node> nodes_;
};

}  // namespace lgenet
