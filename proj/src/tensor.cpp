#include "pillarnav/tensor.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pillarnav {

namespace {

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_str(shape));
        n *= d;
    }
    return n;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                        shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

bool wants_grad(const Tape& t, const Tensor& a) { return t.enabled() && a.requires_grad(); }
bool wants_grad(const Tape& t, const Tensor& a, const Tensor& b) {
    return t.enabled() && (a.requires_grad() || b.requires_grad());
}

}  // namespace

std::string shape_str(const std::vector<int>& shape) {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

Tensor::Tensor(std::vector<int> shape, bool requires_grad) {
    impl_ = std::make_shared<Impl>();
    std::int64_t n = shape_numel(shape);
    impl_->shape = std::move(shape);
    impl_->data.assign(static_cast<size_t>(n), 0.0f);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::from_data(std::vector<int> shape, std::vector<float> data, bool requires_grad) {
    std::int64_t n = shape_numel(shape);
    require(n == static_cast<std::int64_t>(data.size()),
            "from_data: shape " + shape_str(shape) + " does not match data length " +
                std::to_string(data.size()));
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
    return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return Tensor(std::move(shape), requires_grad);
}

void Tensor::set_requires_grad(bool rg) {
    impl_->requires_grad = rg;
    if (!rg) impl_->grad.clear();
}

float* Tensor::grad() {
    if (!impl_->requires_grad)
        throw std::logic_error("grad() on tensor that does not require grad");
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
    return impl_->grad.data();
}

void Tensor::zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

float Tensor::item() const {
    if (numel() != 1) throw std::logic_error("item() on tensor of shape " + shape_str(shape()));
    return impl_->data[0];
}

Tensor Tensor::detach() const {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = impl_->shape;
    t.impl_->data = impl_->data;
    t.impl_->requires_grad = false;
    return t;
}

Tensor Tensor::clone() const {
    Tensor t = detach();
    t.impl_->requires_grad = impl_->requires_grad;
    return t;
}

void check_finite(const Tensor& x, const char* where) {
    for (float v : x.vec()) {
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("non-finite value produced in ") + where);
    }
}

static void check_finite_buffer(const std::vector<float>& buf, const char* where) {
    for (float v : buf) {
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("non-finite gradient produced in ") + where);
    }
}

void Tape::record(Tensor output, std::function<void()> backward_fn) {
    nodes_.push_back(Node{std::move(output), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
    if (loss.numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(loss.shape()));
    if (!loss.requires_grad())
        throw std::invalid_argument("backward: loss does not require grad");
    Tensor l = loss;
    l.grad()[0] = 1.0f;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward_fn();
    for (const auto& node : nodes_) check_finite_buffer(node.output.grad_vec(), "backward");
}

void Tape::clear() { nodes_.clear(); }

// ---- elementwise -----------------------------------------------------------

namespace {

// Helper shared by unary elementwise ops: fwd maps x->y, bwd gives dy/dx from (x, y).
template <typename Fwd, typename Bwd>
Tensor unary_op(Tape& t, const Tensor& a, const char* name, Fwd fwd, Bwd bwd) {
    const bool rg = wants_grad(t, a);
    Tensor y(a.shape(), rg);
    const float* xd = a.data();
    float* yd = y.data();
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) yd[i] = fwd(xd[i]);
    check_finite(y, name);
    if (rg) {
        Tensor x = a;
        t.record(y, [x, y, bwd, n]() mutable {
            const float* gy = y.grad();
            const float* xd2 = x.data();
            const float* yd2 = y.data();
            float* gx = x.grad();
            for (std::int64_t i = 0; i < n; ++i) gx[i] += gy[i] * bwd(xd2[i], yd2[i]);
        });
    }
    return y;
}

}  // namespace

Tensor add(Tape& t, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    const bool rg = wants_grad(t, a, b);
    Tensor y(a.shape(), rg);
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) y.data()[i] = a.data()[i] + b.data()[i];
    check_finite(y, "add");
    if (rg) {
        Tensor ca = a, cb = b;
        t.record(y, [ca, cb, y, n]() mutable {
            const float* gy = y.grad();
            if (ca.requires_grad()) {
                float* ga = ca.grad();
                for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i];
            }
            if (cb.requires_grad()) {
                float* gb = cb.grad();
                for (std::int64_t i = 0; i < n; ++i) gb[i] += gy[i];
            }
        });
    }
    return y;
}

Tensor sub(Tape& t, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    const bool rg = wants_grad(t, a, b);
    Tensor y(a.shape(), rg);
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) y.data()[i] = a.data()[i] - b.data()[i];
    check_finite(y, "sub");
    if (rg) {
        Tensor ca = a, cb = b;
        t.record(y, [ca, cb, y, n]() mutable {
            const float* gy = y.grad();
            if (ca.requires_grad()) {
                float* ga = ca.grad();
                for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i];
            }
            if (cb.requires_grad()) {
                float* gb = cb.grad();
                for (std::int64_t i = 0; i < n; ++i) gb[i] -= gy[i];
            }
        });
    }
    return y;
}

Tensor mul(Tape& t, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    const bool rg = wants_grad(t, a, b);
    Tensor y(a.shape(), rg);
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) y.data()[i] = a.data()[i] * b.data()[i];
    check_finite(y, "mul");
    if (rg) {
        Tensor ca = a, cb = b;
        t.record(y, [ca, cb, y, n]() mutable {
            const float* gy = y.grad();
            if (ca.requires_grad()) {
                float* ga = ca.grad();
                const float* bd = cb.data();
                for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i] * bd[i];
            }
            if (cb.requires_grad()) {
                float* gb = cb.grad();
                const float* ad = ca.data();
                for (std::int64_t i = 0; i < n; ++i) gb[i] += gy[i] * ad[i];
            }
        });
    }
    return y;
}

Tensor div(Tape& t, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "div");
    const bool rg = wants_grad(t, a, b);
    Tensor y(a.shape(), rg);
    const std::int64_t n = a.numel();
    for (std::int64_t i = 0; i < n; ++i) y.data()[i] = a.data()[i] / b.data()[i];
    check_finite(y, "div");
    if (rg) {
        Tensor ca = a, cb = b;
        t.record(y, [ca, cb, y, n]() mutable {
            const float* gy = y.grad();
            const float* bd = cb.data();
            if (ca.requires_grad()) {
                float* ga = ca.grad();
                for (std::int64_t i = 0; i < n; ++i) ga[i] += gy[i] / bd[i];
            }
            if (cb.requires_grad()) {
                float* gb = cb.grad();
                const float* yd = y.data();
                for (std::int64_t i = 0; i < n; ++i) gb[i] -= gy[i] * yd[i] / bd[i];
            }
        });
    }
    return y;
}

Tensor min_elementwise(Tape& t, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "min_elementwise");
    const bool rg = wants_grad(t, a, b);
    Tensor y(a.shape(), rg);
    const std::int64_t n = a.numel();
    // Ties route the gradient to `a`.
    for (std::int64_t i = 0; i < n; ++i) y.data()[i] = std::min(a.data()[i], b.data()[i]);
    check_finite(y, "min_elementwise");
    if (rg) {
        Tensor ca = a, cb = b;
        t.record(y, [ca, cb, y, n]() mutable {
            const float* gy = y.grad();
            const float* ad = ca.data();
            const float* bd = cb.data();
            for (std::int64_t i = 0; i < n; ++i) {
                if (ad[i] <= bd[i]) {
                    if (ca.requires_grad()) ca.grad()[i] += gy[i];
                } else {
                    if (cb.requires_grad()) cb.grad()[i] += gy[i];
                }
            }
        });
    }
    return y;
}

Tensor scale(Tape& t, const Tensor& a, float s) {
    return unary_op(t, a, "scale", [s](float x) { return x * s; },
                    [s](float, float) { return s; });
}

Tensor add_scalar(Tape& t, const Tensor& a, float s) {
    return unary_op(t, a, "add_scalar", [s](float x) { return x + s; },
                    [](float, float) { return 1.0f; });
}

Tensor relu(Tape& t, const Tensor& a) {
    return unary_op(t, a, "relu", [](float x) { return x > 0.0f ? x : 0.0f; },
                    [](float x, float) { return x > 0.0f ? 1.0f : 0.0f; });
}

Tensor tanh(Tape& t, const Tensor& a) {
    return unary_op(t, a, "tanh", [](float x) { return std::tanh(x); },
                    [](float, float y) { return 1.0f - y * y; });
}

Tensor exp(Tape& t, const Tensor& a) {
    return unary_op(t, a, "exp", [](float x) { return std::exp(x); },
                    [](float, float y) { return y; });
}

Tensor log(Tape& t, const Tensor& a) {
    return unary_op(t, a, "log", [](float x) { return std::log(x); },
                    [](float x, float) { return 1.0f / x; });
}

Tensor softplus(Tape& t, const Tensor& a) {
    auto fwd = [](float x) {
        if (x > 20.0f) return x;
        if (x < -20.0f) return std::exp(x);
        return std::log1p(std::exp(x));
    };
    auto bwd = [](float x, float) { return 1.0f / (1.0f + std::exp(-x)); };
    return unary_op(t, a, "softplus", fwd, bwd);
}

Tensor square(Tape& t, const Tensor& a) {
    return unary_op(t, a, "square", [](float x) { return x * x; },
                    [](float x, float) { return 2.0f * x; });
}

Tensor clamp(Tape& t, const Tensor& a, float lo, float hi) {
    return unary_op(t, a, "clamp",
                    [lo, hi](float x) { return std::min(std::max(x, lo), hi); },
                    [lo, hi](float x, float) { return (x > lo && x < hi) ? 1.0f : 0.0f; });
}

// ---- linear algebra ---------------------------------------------------------

Tensor matmul(Tape& t, const Tensor& a, const Tensor& b) {
    require(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(0),
            "matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    const bool rg = wants_grad(t, a, b);
    Tensor y({m, n}, rg);
    const float* ad = a.data();
    const float* bd = b.data();
    float* yd = y.data();
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const float av = ad[i * k + p];
            const float* brow = bd + p * n;
            float* yrow = yd + i * n;
            for (int j = 0; j < n; ++j) yrow[j] += av * brow[j];
        }
    }
    check_finite(y, "matmul");
    if (rg) {
        Tensor ca = a, cb = b;
        t.record(y, [ca, cb, y, m, k, n]() mutable {
            const float* gy = y.grad();
            if (ca.requires_grad()) {
                float* ga = ca.grad();
                const float* bd2 = cb.data();
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        float acc = 0.0f;
                        const float* brow = bd2 + p * n;
                        const float* gyrow = gy + i * n;
                        for (int j = 0; j < n; ++j) acc += gyrow[j] * brow[j];
                        ga[i * k + p] += acc;
                    }
            }
            if (cb.requires_grad()) {
                float* gb = cb.grad();
                const float* ad2 = ca.data();
                for (int i = 0; i < m; ++i)
                    for (int p = 0; p < k; ++p) {
                        const float av = ad2[i * k + p];
                        const float* gyrow = gy + i * n;
                        float* gbrow = gb + p * n;
                        for (int j = 0; j < n; ++j) gbrow[j] += av * gyrow[j];
                    }
            }
        });
    }
    return y;
}

Tensor transpose(Tape& t, const Tensor& a) {
    require(a.ndim() == 2, "transpose: need 2-D tensor, got " + shape_str(a.shape()));
    const int m = a.dim(0), n = a.dim(1);
    const bool rg = wants_grad(t, a);
    Tensor y({n, m}, rg);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) y.data()[j * m + i] = a.data()[i * n + j];
    if (rg) {
        Tensor ca = a;
        t.record(y, [ca, y, m, n]() mutable {
            const float* gy = y.grad();
            float* ga = ca.grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) ga[i * n + j] += gy[j * m + i];
        });
    }
    return y;
}

Tensor add_rowwise(Tape& t, const Tensor& x, const Tensor& bias) {
    require(x.ndim() == 2 && bias.ndim() == 1 && x.dim(1) == bias.dim(0),
            "add_rowwise: shapes " + shape_str(x.shape()) + " + " + shape_str(bias.shape()));
    const int n = x.dim(0), d = x.dim(1);
    const bool rg = wants_grad(t, x, bias);
    Tensor y({n, d}, rg);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) y.data()[i * d + j] = x.data()[i * d + j] + bias.data()[j];
    check_finite(y, "add_rowwise");
    if (rg) {
        Tensor cx = x, cb = bias;
        t.record(y, [cx, cb, y, n, d]() mutable {
            const float* gy = y.grad();
            if (cx.requires_grad()) {
                float* gx = cx.grad();
                for (std::int64_t i = 0; i < static_cast<std::int64_t>(n) * d; ++i) gx[i] += gy[i];
            }
            if (cb.requires_grad()) {
                float* gb = cb.grad();
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < d; ++j) gb[j] += gy[i * d + j];
            }
        });
    }
    return y;
}

// ---- convolution ------------------------------------------------------------

Tensor conv2d(Tape& t, const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
              int padding) {
    require(x.ndim() == 3 && w.ndim() == 4 && x.dim(0) == w.dim(1),
            "conv2d: shapes " + shape_str(x.shape()) + " vs weight " + shape_str(w.shape()));
    require(stride >= 1 && padding >= 0, "conv2d: bad stride/padding");
    const int ci = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (bias.defined())
        require(bias.ndim() == 1 && bias.dim(0) == co,
                "conv2d: bias shape " + shape_str(bias.shape()) + " vs Cout " + std::to_string(co));
    const int oh = (h + 2 * padding - kh) / stride + 1;
    const int ow = (wd + 2 * padding - kw) / stride + 1;
    require(oh > 0 && ow > 0, "conv2d: kernel larger than padded input " + shape_str(x.shape()));

    const bool rg = t.enabled() &&
                    (x.requires_grad() || w.requires_grad() ||
                     (bias.defined() && bias.requires_grad()));
    Tensor y({co, oh, ow}, rg);
    const float* xd = x.data();
    const float* wdt = w.data();
    float* yd = y.data();
    if (bias.defined()) {
        for (int c = 0; c < co; ++c) {
            const float b = bias.data()[c];
            for (int i = 0; i < oh * ow; ++i) yd[c * oh * ow + i] = b;
        }
    }
    for (int c = 0; c < co; ++c) {
        for (int ic = 0; ic < ci; ++ic) {
            const float* wslab = wdt + ((c * ci + ic) * kh) * kw;
            const float* xslab = xd + ic * h * wd;
            for (int oy = 0; oy < oh; ++oy) {
                float* yrow = yd + (c * oh + oy) * ow;
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy * stride - padding + ky;
                    if (iy < 0 || iy >= h) continue;
                    const float* xrow = xslab + iy * wd;
                    const float* wrow = wslab + ky * kw;
                    for (int kx = 0; kx < kw; ++kx) {
                        const float wv = wrow[kx];
                        const int off = -padding + kx;
                        for (int ox = 0; ox < ow; ++ox) {
                            const int ix = ox * stride + off;
                            if (ix < 0 || ix >= wd) continue;
                            yrow[ox] += wv * xrow[ix];
                        }
                    }
                }
            }
        }
    }
    check_finite(y, "conv2d");
    if (rg) {
        Tensor cx = x, cw = w, cb = bias;
        t.record(y, [cx, cw, cb, y, ci, h, wd, co, kh, kw, oh, ow, stride, padding]() mutable {
            const float* gy = y.grad();
            const bool gx_on = cx.requires_grad();
            const bool gw_on = cw.requires_grad();
            float* gx = gx_on ? cx.grad() : nullptr;
            float* gw = gw_on ? cw.grad() : nullptr;
            const float* xd2 = cx.data();
            const float* wd2 = cw.data();
            if (cb.defined() && cb.requires_grad()) {
                float* gb = cb.grad();
                for (int c = 0; c < co; ++c) {
                    float acc = 0.0f;
                    for (int i = 0; i < oh * ow; ++i) acc += gy[c * oh * ow + i];
                    gb[c] += acc;
                }
            }
            if (!gx_on && !gw_on) return;
            for (int c = 0; c < co; ++c) {
                for (int ic = 0; ic < ci; ++ic) {
                    for (int ky = 0; ky < kh; ++ky) {
                        for (int kx = 0; kx < kw; ++kx) {
                            const float wv = wd2[((c * ci + ic) * kh + ky) * kw + kx];
                            float wacc = 0.0f;
                            for (int oy = 0; oy < oh; ++oy) {
                                const int iy = oy * stride - padding + ky;
                                if (iy < 0 || iy >= h) continue;
                                const float* gyrow = gy + (c * oh + oy) * ow;
                                const float* xrow = xd2 + (ic * h + iy) * wd;
                                float* gxrow = gx_on ? gx + (ic * h + iy) * wd : nullptr;
                                for (int ox = 0; ox < ow; ++ox) {
                                    const int ix = ox * stride - padding + kx;
                                    if (ix < 0 || ix >= wd) continue;
                                    const float g = gyrow[ox];
                                    if (gx_on) gxrow[ix] += g * wv;
                                    if (gw_on) wacc += g * xrow[ix];
                                }
                            }
                            if (gw_on) gw[((c * ci + ic) * kh + ky) * kw + kx] += wacc;
                        }
                    }
                }
            }
        });
    }
    return y;
}

Tensor global_max_pool(Tape& t, const Tensor& x) {
    require(x.ndim() == 3, "global_max_pool: need [C,H,W], got " + shape_str(x.shape()));
    const int c = x.dim(0), hw = x.dim(1) * x.dim(2);
    require(hw > 0, "global_max_pool: empty spatial dims " + shape_str(x.shape()));
    const bool rg = wants_grad(t, x);
    Tensor y({c}, rg);
    std::vector<int> argmax(static_cast<size_t>(c), 0);
    for (int ch = 0; ch < c; ++ch) {
        const float* slab = x.data() + static_cast<std::int64_t>(ch) * hw;
        int best = 0;
        for (int i = 1; i < hw; ++i)
            if (slab[i] > slab[best]) best = i;
        argmax[static_cast<size_t>(ch)] = best;
        y.data()[ch] = slab[best];
    }
    if (rg) {
        Tensor cx = x;
        t.record(y, [cx, y, argmax, c, hw]() mutable {
            const float* gy = y.grad();
            float* gx = cx.grad();
            for (int ch = 0; ch < c; ++ch)
                gx[static_cast<std::int64_t>(ch) * hw + argmax[static_cast<size_t>(ch)]] += gy[ch];
        });
    }
    return y;
}

// ---- structural -------------------------------------------------------------

Tensor concat_cols(Tape& t, const std::vector<Tensor>& parts) {
    require(!parts.empty(), "concat_cols: no inputs");
    const int n = parts[0].dim(0);
    int dtot = 0;
    bool rg = false;
    for (const auto& p : parts) {
        require(p.ndim() == 2 && p.dim(0) == n,
                "concat_cols: row mismatch " + shape_str(p.shape()));
        dtot += p.dim(1);
        rg = rg || (t.enabled() && p.requires_grad());
    }
    Tensor y({n, dtot}, rg);
    int col = 0;
    for (const auto& p : parts) {
        const int d = p.dim(1);
        for (int i = 0; i < n; ++i)
            std::memcpy(y.data() + i * dtot + col, p.data() + i * d, sizeof(float) * d);
        col += d;
    }
    if (rg) {
        std::vector<Tensor> cp = parts;
        t.record(y, [cp, y, n, dtot]() mutable {
            const float* gy = y.grad();
            int col = 0;
            for (auto& p : cp) {
                const int d = p.dim(1);
                if (p.requires_grad()) {
                    float* gp = p.grad();
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < d; ++j) gp[i * d + j] += gy[i * dtot + col + j];
                }
                col += d;
            }
        });
    }
    return y;
}

Tensor stack_rows(Tape& t, const std::vector<Tensor>& rows) {
    require(!rows.empty(), "stack_rows: no inputs");
    const int d = rows[0].dim(0);
    bool rg = false;
    for (const auto& r : rows) {
        require(r.ndim() == 1 && r.dim(0) == d, "stack_rows: shape mismatch " + shape_str(r.shape()));
        rg = rg || (t.enabled() && r.requires_grad());
    }
    const int n = static_cast<int>(rows.size());
    Tensor y({n, d}, rg);
    for (int i = 0; i < n; ++i)
        std::memcpy(y.data() + static_cast<std::int64_t>(i) * d, rows[static_cast<size_t>(i)].data(),
                    sizeof(float) * static_cast<size_t>(d));
    if (rg) {
        std::vector<Tensor> cr = rows;
        t.record(y, [cr, y, d]() mutable {
            const float* gy = y.grad();
            for (size_t i = 0; i < cr.size(); ++i) {
                if (!cr[i].requires_grad()) continue;
                float* gr = cr[i].grad();
                for (int j = 0; j < d; ++j) gr[j] += gy[i * static_cast<size_t>(d) + j];
            }
        });
    }
    return y;
}

Tensor slice_cols(Tape& t, const Tensor& x, int c0, int c1) {
    require(x.ndim() == 2 && 0 <= c0 && c0 < c1 && c1 <= x.dim(1),
            "slice_cols: bad range on " + shape_str(x.shape()));
    const int n = x.dim(0), d = x.dim(1), dd = c1 - c0;
    const bool rg = wants_grad(t, x);
    Tensor y({n, dd}, rg);
    for (int i = 0; i < n; ++i)
        std::memcpy(y.data() + i * dd, x.data() + i * d + c0, sizeof(float) * dd);
    if (rg) {
        Tensor cx = x;
        t.record(y, [cx, y, n, d, dd, c0]() mutable {
            const float* gy = y.grad();
            float* gx = cx.grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < dd; ++j) gx[i * d + c0 + j] += gy[i * dd + j];
        });
    }
    return y;
}

Tensor sum_rows(Tape& t, const Tensor& x) {
    require(x.ndim() == 2, "sum_rows: need 2-D, got " + shape_str(x.shape()));
    const int n = x.dim(0), d = x.dim(1);
    const bool rg = wants_grad(t, x);
    Tensor y({n}, rg);
    for (int i = 0; i < n; ++i) {
        float acc = 0.0f;
        for (int j = 0; j < d; ++j) acc += x.data()[i * d + j];
        y.data()[i] = acc;
    }
    check_finite(y, "sum_rows");
    if (rg) {
        Tensor cx = x;
        t.record(y, [cx, y, n, d]() mutable {
            const float* gy = y.grad();
            float* gx = cx.grad();
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) gx[i * d + j] += gy[i];
        });
    }
    return y;
}

Tensor sum_all(Tape& t, const Tensor& x) {
    const bool rg = wants_grad(t, x);
    float acc = 0.0f;
    for (float v : x.vec()) acc += v;
    Tensor y = Tensor::from_data({1}, {acc}, rg);
    check_finite(y, "sum_all");
    if (rg) {
        Tensor cx = x;
        t.record(y, [cx, y]() mutable {
            const float g = y.grad()[0];
            float* gx = cx.grad();
            for (std::int64_t i = 0; i < cx.numel(); ++i) gx[i] += g;
        });
    }
    return y;
}

Tensor mean_all(Tape& t, const Tensor& x) {
    require(x.numel() > 0, "mean_all: empty tensor " + shape_str(x.shape()));
    const bool rg = wants_grad(t, x);
    float acc = 0.0f;
    for (float v : x.vec()) acc += v;
    const float inv = 1.0f / static_cast<float>(x.numel());
    Tensor y = Tensor::from_data({1}, {acc * inv}, rg);
    check_finite(y, "mean_all");
    if (rg) {
        Tensor cx = x;
        t.record(y, [cx, y, inv]() mutable {
            const float g = y.grad()[0] * inv;
            float* gx = cx.grad();
            for (std::int64_t i = 0; i < cx.numel(); ++i) gx[i] += g;
        });
    }
    return y;
}

Tensor log_softmax_rows(Tape& t, const Tensor& x) {
    require(x.ndim() == 2, "log_softmax_rows: need 2-D, got " + shape_str(x.shape()));
    const int n = x.dim(0), d = x.dim(1);
    const bool rg = wants_grad(t, x);
    Tensor y({n, d}, rg);
    for (int i = 0; i < n; ++i) {
        const float* row = x.data() + i * d;
        float mx = row[0];
        for (int j = 1; j < d; ++j) mx = std::max(mx, row[j]);
        float lse = 0.0f;
        for (int j = 0; j < d; ++j) lse += std::exp(row[j] - mx);
        lse = mx + std::log(lse);
        for (int j = 0; j < d; ++j) y.data()[i * d + j] = row[j] - lse;
    }
    check_finite(y, "log_softmax_rows");
    if (rg) {
        Tensor cx = x;
        t.record(y, [cx, y, n, d]() mutable {
            const float* gy = y.grad();
            const float* yd = y.data();
            float* gx = cx.grad();
            for (int i = 0; i < n; ++i) {
                float gsum = 0.0f;
                for (int j = 0; j < d; ++j) gsum += gy[i * d + j];
                for (int j = 0; j < d; ++j)
                    gx[i * d + j] += gy[i * d + j] - std::exp(yd[i * d + j]) * gsum;
            }
        });
    }
    return y;
}

Tensor gather_diag(Tape& t, const Tensor& x) {
    require(x.ndim() == 2 && x.dim(0) == x.dim(1),
            "gather_diag: need square matrix, got " + shape_str(x.shape()));
    const int n = x.dim(0);
    const bool rg = wants_grad(t, x);
    Tensor y({n}, rg);
    for (int i = 0; i < n; ++i) y.data()[i] = x.data()[i * n + i];
    if (rg) {
        Tensor cx = x;
        t.record(y, [cx, y, n]() mutable {
            const float* gy = y.grad();
            float* gx = cx.grad();
            for (int i = 0; i < n; ++i) gx[i * n + i] += gy[i];
        });
    }
    return y;
}

Tensor l2_normalize_rows(Tape& t, const Tensor& x, float eps) {
    require(x.ndim() == 2, "l2_normalize_rows: need 2-D, got " + shape_str(x.shape()));
    const int n = x.dim(0), d = x.dim(1);
    const bool rg = wants_grad(t, x);
    Tensor y({n, d}, rg);
    std::vector<float> norms(static_cast<size_t>(n), 0.0f);
    for (int i = 0; i < n; ++i) {
        float ss = 0.0f;
        for (int j = 0; j < d; ++j) ss += x.data()[i * d + j] * x.data()[i * d + j];
        const float norm = std::max(std::sqrt(ss), eps);
        norms[static_cast<size_t>(i)] = norm;
        for (int j = 0; j < d; ++j) y.data()[i * d + j] = x.data()[i * d + j] / norm;
    }
    check_finite(y, "l2_normalize_rows");
    if (rg) {
        Tensor cx = x;
        t.record(y, [cx, y, norms, n, d, eps]() mutable {
            const float* gy = y.grad();
            const float* yd = y.data();
            float* gx = cx.grad();
            for (int i = 0; i < n; ++i) {
                const float norm = norms[static_cast<size_t>(i)];
                float ss = 0.0f;
                for (int j = 0; j < d; ++j) ss += cx.data()[i * d + j] * cx.data()[i * d + j];
                if (std::sqrt(ss) <= eps) {
                    // Below the guard the map is x/eps, a plain scaling.
                    for (int j = 0; j < d; ++j) gx[i * d + j] += gy[i * d + j] / eps;
                } else {
                    float dot = 0.0f;
                    for (int j = 0; j < d; ++j) dot += gy[i * d + j] * yd[i * d + j];
                    for (int j = 0; j < d; ++j)
                        gx[i * d + j] += (gy[i * d + j] - yd[i * d + j] * dot) / norm;
                }
            }
        });
    }
    return y;
}

}  // namespace pillarnav
