#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pillarnav {

// Shape-tagged float32 buffer with an optional gradient slot. Handle with
// shared ownership; copies alias the same storage.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, bool requires_grad = false);
    static Tensor from_data(std::vector<int> shape, std::vector<float> data,
                            bool requires_grad = false);
    static Tensor scalar(float value, bool requires_grad = false);
    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<int>& shape() const { return impl_->shape; }
    int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(impl_->shape.size()); }
    std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

    float* data() { return impl_->data.data(); }
    const float* data() const { return impl_->data.data(); }
    std::vector<float>& vec() { return impl_->data; }
    const std::vector<float>& vec() const { return impl_->data; }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool rg);

    // Lazily allocated, zero-initialized. Only valid when requires_grad.
    float* grad();
    const std::vector<float>& grad_vec() const { return impl_->grad; }
    bool has_grad() const { return !impl_->grad.empty(); }
    void zero_grad();

    float item() const;

    Tensor detach() const;  // deep copy, requires_grad = false
    Tensor clone() const;   // deep copy, keeps requires_grad
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    struct Impl {
        std::vector<int> shape;
        std::vector<float> data;
        std::vector<float> grad;
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;
};

std::string shape_str(const std::vector<int>& shape);

// Ordered record of primitive ops for reverse-mode differentiation.
class Tape {
public:
    void record(Tensor output, std::function<void()> backward_fn);
    // Seeds grad(loss) = 1 and replays every recorded op once, in reverse.
    void backward(const Tensor& loss);
    void clear();
    size_t size() const { return nodes_.size(); }

    bool enabled() const { return enabled_; }
    void set_enabled(bool e) { enabled_ = e; }

private:
    struct Node {
        Tensor output;
        std::function<void()> backward_fn;
    };
    std::vector<Node> nodes_;
    bool enabled_ = true;
};

// Disables tape recording for the lifetime of the guard.
class NoGradGuard {
public:
    explicit NoGradGuard(Tape& tape) : tape_(tape), prev_(tape.enabled()) {
        tape_.set_enabled(false);
    }
    ~NoGradGuard() { tape_.set_enabled(prev_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    Tape& tape_;
    bool prev_;
};

// ---- primitives ------------------------------------------------------------
// Every op validates shapes (throwing std::invalid_argument with both shapes
// in the message), checks outputs for NaN/Inf, and records its backward pass
// on the tape when recording is enabled and any input requires grad.

Tensor add(Tape& t, const Tensor& a, const Tensor& b);
Tensor sub(Tape& t, const Tensor& a, const Tensor& b);
Tensor mul(Tape& t, const Tensor& a, const Tensor& b);
Tensor div(Tape& t, const Tensor& a, const Tensor& b);
Tensor min_elementwise(Tape& t, const Tensor& a, const Tensor& b);
Tensor scale(Tape& t, const Tensor& a, float s);
Tensor add_scalar(Tape& t, const Tensor& a, float s);
Tensor relu(Tape& t, const Tensor& a);
Tensor tanh(Tape& t, const Tensor& a);
Tensor exp(Tape& t, const Tensor& a);
Tensor log(Tape& t, const Tensor& a);
Tensor softplus(Tape& t, const Tensor& a);
Tensor square(Tape& t, const Tensor& a);
Tensor clamp(Tape& t, const Tensor& a, float lo, float hi);

Tensor matmul(Tape& t, const Tensor& a, const Tensor& b);  // [m,k]x[k,n]
Tensor transpose(Tape& t, const Tensor& a);                // [m,n]->[n,m]
Tensor add_rowwise(Tape& t, const Tensor& x, const Tensor& bias);  // [N,D]+[D]

// x: [Cin,H,W], w: [Cout,Cin,kh,kw], bias: [Cout] or undefined.
Tensor conv2d(Tape& t, const Tensor& x, const Tensor& w, const Tensor& bias,
              int stride, int padding);
Tensor global_max_pool(Tape& t, const Tensor& x);  // [C,H,W] -> [C]

Tensor concat_cols(Tape& t, const std::vector<Tensor>& parts);  // [N,Di] -> [N,sum]
Tensor stack_rows(Tape& t, const std::vector<Tensor>& rows);    // [D] each -> [N,D]
Tensor slice_cols(Tape& t, const Tensor& x, int c0, int c1);    // [N,D] -> [N,c1-c0]
Tensor sum_rows(Tape& t, const Tensor& x);                      // [N,D] -> [N]
Tensor sum_all(Tape& t, const Tensor& x);                       // -> [1]
Tensor mean_all(Tape& t, const Tensor& x);                      // -> [1]
Tensor log_softmax_rows(Tape& t, const Tensor& x);              // [N,D]
Tensor gather_diag(Tape& t, const Tensor& x);                   // [N,N] -> [N]
Tensor l2_normalize_rows(Tape& t, const Tensor& x, float eps = 1e-8f);

void check_finite(const Tensor& x, const char* where);

}  // namespace pillarnav
