#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "pillarnav/nn.hpp"

namespace pillarnav {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float lr_decay = 0.5f;      // multiplicative step decay
    int lr_decay_every = 10000;  // optimizer steps between decays; 0 disables
};

// Adam with a step learning-rate schedule. Moment buffers are keyed by
// parameter name so they survive checkpoint round-trips.
class Adam {
public:
    Adam() = default;
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}

    // Updates parameters in place and clears their gradients. Throws if a
    // parameter has no gradient buffer.
    void step(ParamList& params);

    float current_lr() const;
    long step_count() const { return step_count_; }
    const AdamConfig& config() const { return cfg_; }

    // Flat state access for checkpointing.
    struct Moments {
        std::vector<float> m;
        std::vector<float> v;
    };
    std::unordered_map<std::string, Moments>& state() { return state_; }
    const std::unordered_map<std::string, Moments>& state() const { return state_; }
    void set_step_count(long n) { step_count_ = n; }

private:
    AdamConfig cfg_;
    std::unordered_map<std::string, Moments> state_;
    long step_count_ = 0;
};

}  // namespace pillarnav
