#include "pillarnav/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace pillarnav {

void append_params(ParamList& out, const std::string& prefix, const ParamList& params) {
    for (const auto& p : params) out.push_back({prefix + "." + p.name, p.tensor});
}

void zero_grads(ParamList& params) {
    for (auto& p : params) p.tensor.zero_grad();
}

Tensor init_uniform(std::vector<int> shape, int fan_in, std::mt19937& rng) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(std::max(fan_in, 1)));
    std::uniform_real_distribution<float> dist(-bound, bound);
    Tensor t(std::move(shape), true);
    for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = dist(rng);
    return t;
}

Linear::Linear(int in, int out, std::mt19937& rng)
    : weight(init_uniform({in, out}, in, rng)), bias(init_uniform({out}, in, rng)) {}

Tensor Linear::forward(Tape& tape, const Tensor& x) const {
    return add_rowwise(tape, matmul(tape, x, weight), bias);
}

ParamList Linear::params(const std::string& prefix) const {
    return {{prefix + ".weight", weight}, {prefix + ".bias", bias}};
}

Conv2d::Conv2d(int cin, int cout, int kernel, int stride_, int padding_, std::mt19937& rng)
    : weight(init_uniform({cout, cin, kernel, kernel}, cin * kernel * kernel, rng)),
      bias(init_uniform({cout}, cin * kernel * kernel, rng)),
      stride(stride_),
      padding(padding_) {}

Tensor Conv2d::forward(Tape& tape, const Tensor& x) const {
    return conv2d(tape, x, weight, bias, stride, padding);
}

ParamList Conv2d::params(const std::string& prefix) const {
    return {{prefix + ".weight", weight}, {prefix + ".bias", bias}};
}

Mlp::Mlp(const std::vector<int>& dims, std::mt19937& rng) {
    if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dim");
    for (size_t i = 0; i + 1 < dims.size(); ++i)
        layers.emplace_back(dims[i], dims[i + 1], rng);
}

Tensor Mlp::forward(Tape& tape, const Tensor& x) const {
    Tensor h = x;
    for (size_t i = 0; i < layers.size(); ++i) {
        h = layers[i].forward(tape, h);
        if (i + 1 < layers.size()) h = relu(tape, h);
    }
    return h;
}

ParamList Mlp::params(const std::string& prefix) const {
    ParamList out;
    for (size_t i = 0; i < layers.size(); ++i)
        append_params(out, prefix, layers[i].params("l" + std::to_string(i)));
    return out;
}

float GradCheckReport::max_rel_error() const {
    float m = 0.0f;
    for (const auto& e : entries) m = std::max(m, e.max_rel_error);
    return m;
}

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& loss_fn, ParamList& params,
                           float h) {
    zero_grads(params);
    Tape tape;
    Tensor loss = loss_fn(tape);
    tape.backward(loss);

    GradCheckReport report;
    for (auto& p : params) {
        std::vector<float> analytic(p.tensor.grad_vec());
        if (analytic.empty()) analytic.assign(static_cast<size_t>(p.tensor.numel()), 0.0f);
        float max_rel = 0.0f;
        for (std::int64_t i = 0; i < p.tensor.numel(); ++i) {
            const float orig = p.tensor.data()[i];
            Tape scratch;
            scratch.set_enabled(false);
            p.tensor.data()[i] = orig + h;
            const float up = loss_fn(scratch).item();
            p.tensor.data()[i] = orig - h;
            const float down = loss_fn(scratch).item();
            p.tensor.data()[i] = orig;
            const float numeric = (up - down) / (2.0f * h);
            const float a = analytic[static_cast<size_t>(i)];
            const float denom = std::max({std::fabs(a), std::fabs(numeric), 1e-4f});
            max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
        }
        report.entries.push_back({p.name, max_rel});
    }
    zero_grads(params);
    return report;
}

}  // namespace pillarnav
