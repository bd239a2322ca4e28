#pragma once

#include "svc/nn/layers.hpp"

#include <vector>

namespace svc::nn {

// RMSProp: v <- decay*v + (1-decay)*g^2; p <- p - lr * g / sqrt(v + eps).
// The accumulator is keyed by position in the ParamSet, which callers must
// keep stable across steps (same layers collected in the same order).
template <class S>
class RmsProp {
public:
    RmsProp(S lr, S decay, S eps) : lr_(lr), decay_(decay), eps_(eps) {}

    void step(ParamSet<S>& params) {
        const auto& views = params.views();
        if (cache_.empty()) {
            cache_.reserve(views.size());
            for (const auto& v : views) {
                cache_.emplace_back(v.size());
                cache_.back().setZero();
            }
        }
        if (cache_.size() != views.size())
            throw ShapeError("optimizer state holds " + std::to_string(cache_.size()) +
                             " tensors, step got " + std::to_string(views.size()));
        for (std::size_t i = 0; i < views.size(); ++i) {
            const auto& v = views[i];
            Eigen::Map<Vec<S>> p(v.value, v.size());
            Eigen::Map<const Vec<S>> g(v.grad, v.size());
            Vec<S>& acc = cache_[i];
            if (acc.size() != v.size())
                throw ShapeError("optimizer state size mismatch at tensor " + v.name);
            acc = decay_ * acc + (S(1) - decay_) * g.cwiseProduct(g);
            p -= lr_ * g.cwiseQuotient((acc.array() + eps_).sqrt().matrix());
        }
    }

private:
    S lr_, decay_, eps_;
    std::vector<Vec<S>> cache_;
};

} // namespace svc::nn
