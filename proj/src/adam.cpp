#include "pillarnav/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace pillarnav {

float Adam::current_lr() const {
    if (cfg_.lr_decay_every <= 0) return cfg_.lr;
    const long decays = step_count_ / cfg_.lr_decay_every;
    float lr = cfg_.lr;
    for (long i = 0; i < decays; ++i) lr *= cfg_.lr_decay;
    return lr;
}

void Adam::step(ParamList& params) {
    const float lr = current_lr();
    const long t = step_count_ + 1;
    const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t));
    const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t));
    for (auto& p : params) {
        if (!p.tensor.has_grad())
            throw std::runtime_error("adam: missing gradient for parameter " + p.name);
        auto& mom = state_[p.name];
        const size_t n = static_cast<size_t>(p.tensor.numel());
        if (mom.m.empty()) {
            mom.m.assign(n, 0.0f);
            mom.v.assign(n, 0.0f);
        } else if (mom.m.size() != n) {
            throw std::runtime_error("adam: moment shape mismatch for parameter " + p.name);
        }
        float* w = p.tensor.data();
        const float* g = p.tensor.grad();
        for (size_t i = 0; i < n; ++i) {
            mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0f - cfg_.beta1) * g[i];
            mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0f - cfg_.beta2) * g[i] * g[i];
            const float mhat = mom.m[i] / bc1;
            const float vhat = mom.v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        p.tensor.zero_grad();
    }
    ++step_count_;
}

}  // namespace pillarnav
