#pragma once

#include <random>
#include <string>
#include <vector>

#include "pillarnav/tensor.hpp"

namespace pillarnav {

// Named trainable tensor. Names are unique within a model and stable across
// save/load.
struct Parameter {
    std::string name;
    Tensor tensor;
};

using ParamList = std::vector<Parameter>;

void append_params(ParamList& out, const std::string& prefix, const ParamList& params);
void zero_grads(ParamList& params);

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init.
Tensor init_uniform(std::vector<int> shape, int fan_in, std::mt19937& rng);

struct Linear {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]

    Linear() = default;
    Linear(int in, int out, std::mt19937& rng);
    Tensor forward(Tape& tape, const Tensor& x) const;  // x: [N, in]
    ParamList params(const std::string& prefix) const;
};

struct Conv2d {
    Tensor weight;  // [Cout, Cin, kh, kw]
    Tensor bias;    // [Cout]
    int stride = 1;
    int padding = 0;

    Conv2d() = default;
    Conv2d(int cin, int cout, int kernel, int stride, int padding, std::mt19937& rng);
    Tensor forward(Tape& tape, const Tensor& x) const;  // x: [Cin, H, W]
    ParamList params(const std::string& prefix) const;
};

// Stack of Linear layers with ReLU between them (none after the last).
struct Mlp {
    std::vector<Linear> layers;

    Mlp() = default;
    Mlp(const std::vector<int>& dims, std::mt19937& rng);
    Tensor forward(Tape& tape, const Tensor& x) const;
    ParamList params(const std::string& prefix) const;
};

struct GradCheckEntry {
    std::string name;
    float max_rel_error;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    float max_rel_error() const;
    bool pass(float tolerance) const { return max_rel_error() < tolerance; }
};

// Compares analytic gradients of `loss_fn` against central finite differences
// for every listed parameter. `loss_fn` must rebuild the graph on the given
// tape and return the scalar loss.
GradCheckReport grad_check(const std::function<Tensor(Tape&)>& loss_fn, ParamList& params,
                           float h = 1e-3f);

}  // namespace pillarnav
