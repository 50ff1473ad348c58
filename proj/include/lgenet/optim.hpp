#pragma once

#include <cmath>

#include "lgenet/tape.hpp"

namespace lgenet {

// lr(epoch) for the 0.001 / x0.9-every-5-epochs schedule; the caller owns the
// epoch counter.
inline double lr_at_epoch(double base_lr, double decay, int decay_every, int epoch) {
    check(decay_every > 0, "lr schedule: decay interval must be positive");
    return base_lr * std::pow(decay, epoch / decay_every);
}

// Classical momentum SGD: buf = m*buf + grad; p -= lr*buf.
// All gradients are validated before anything is touched, so a non-finite
// gradient aborts the step with no partial update.
template <typename T>
void sgd_step(ParameterStore<T>& store, T lr, T momentum) {
    for (const auto& p : store.params())
        for (const T g : p->grad.v)
            check(std::isfinite(static_cast<double>(g)),
                  "sgd: non-finite gradient in parameter " + p->name + "; step aborted");
    for (auto& p : store.params()) {
        auto& value = p->value.v;
        auto& grad = p->grad.v;
        auto& buf = p->momentum.v;
        for (size_t i = 0; i < value.size(); ++i) {
            buf[i] = momentum * buf[i] + grad[i];
            value[i] -= lr * buf[i];
        }
    }
}

}  // namespace lgenet
