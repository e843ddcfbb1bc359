#include "pillarnav/sparse_conv.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace pillarnav {

SparseBEVGrid sparse_conv(Tape& tape, const SparseBEVGrid& in, const Tensor& weight,
                          const Tensor& bias, int stride, int padding) {
    if (weight.ndim() != 4)
        throw std::invalid_argument("sparse_conv: weight must be 4-D, got " +
                                    shape_str(weight.shape()));
    const int cout = weight.dim(0), cin = weight.dim(1), kh = weight.dim(2), kw = weight.dim(3);
    if (in.active() > 0 && in.features.dim(1) != cin)
        throw std::invalid_argument("sparse_conv: input features " + shape_str(in.features.shape()) +
                                    " vs weight " + shape_str(weight.shape()));
    const int oh = (in.rows + 2 * padding - kh) / stride + 1;
    const int ow = (in.cols + 2 * padding - kw) / stride + 1;

    // Contribution list: input site i reaches output (or,oc) through kernel
    // offset (ky,kx) when or*stride - padding + ky == ir (same for columns).
    struct Contribution {
        int out_idx, in_idx, ky, kx;
    };
    std::map<std::pair<int, int>, int> out_index;
    std::vector<Contribution> contribs;
    for (size_t i = 0; i < in.sites.size(); ++i) {
        const auto [ir, ic] = in.sites[i];
        for (int ky = 0; ky < kh; ++ky) {
            const int num_r = ir + padding - ky;
            if (num_r < 0 || num_r % stride != 0) continue;
            const int orow = num_r / stride;
            if (orow >= oh) continue;
            for (int kx = 0; kx < kw; ++kx) {
                const int num_c = ic + padding - kx;
                if (num_c < 0 || num_c % stride != 0) continue;
                const int ocol = num_c / stride;
                if (ocol >= ow) continue;
                auto [it, inserted] = out_index.try_emplace({orow, ocol}, 0);
                (void)inserted;
                contribs.push_back({0, static_cast<int>(i), ky, kx});
                // out_idx patched after the site set is final (map keeps sites sorted)
                contribs.back().out_idx = -1;
                it->second = 0;
            }
        }
    }
    SparseBEVGrid out;
    out.rows = oh;
    out.cols = ow;
    out.sites.reserve(out_index.size());
    int idx = 0;
    for (auto& [site, slot] : out_index) {
        slot = idx++;
        out.sites.push_back(site);
    }
    // Second pass to resolve output indices (cheap relative to the math below).
    size_t k = 0;
    for (size_t i = 0; i < in.sites.size(); ++i) {
        const auto [ir, ic] = in.sites[i];
        for (int ky = 0; ky < kh; ++ky) {
            const int num_r = ir + padding - ky;
            if (num_r < 0 || num_r % stride != 0) continue;
            const int orow = num_r / stride;
            if (orow >= oh) continue;
            for (int kx = 0; kx < kw; ++kx) {
                const int num_c = ic + padding - kx;
                if (num_c < 0 || num_c % stride != 0) continue;
                const int ocol = num_c / stride;
                if (ocol >= ow) continue;
                contribs[k++].out_idx = out_index[{orow, ocol}];
            }
        }
    }

    const int a_out = static_cast<int>(out.sites.size());
    const bool rg = tape.enabled() && (in.features.requires_grad() || weight.requires_grad() ||
                                       bias.requires_grad());
    Tensor feats({a_out, cout}, rg);
    float* yd = feats.data();
    for (int o = 0; o < a_out; ++o)
        for (int c = 0; c < cout; ++c) yd[o * cout + c] = bias.data()[c];
    const float* xd = in.features.data();
    const float* wd = weight.data();
    for (const auto& cb : contribs) {
        const float* xrow = xd + static_cast<std::int64_t>(cb.in_idx) * cin;
        float* yrow = yd + static_cast<std::int64_t>(cb.out_idx) * cout;
        for (int c = 0; c < cout; ++c) {
            const float* wrow = wd + ((static_cast<std::int64_t>(c) * cin) * kh + cb.ky) * kw + cb.kx;
            float acc = 0.0f;
            for (int ic = 0; ic < cin; ++ic) acc += wrow[static_cast<std::int64_t>(ic) * kh * kw] * xrow[ic];
            yrow[c] += acc;
        }
    }
    check_finite(feats, "sparse_conv");
    out.features = feats;

    if (rg) {
        Tensor cx = in.features, cw = weight, cbias = bias, cy = feats;
        auto contribs_copy = contribs;
        tape.record(feats, [cx, cw, cbias, cy, contribs_copy, cin, cout, kh, kw, a_out]() mutable {
            const float* gy = cy.grad();
            if (cbias.requires_grad()) {
                float* gb = cbias.grad();
                for (int o = 0; o < a_out; ++o)
                    for (int c = 0; c < cout; ++c) gb[c] += gy[o * cout + c];
            }
            const bool gx_on = cx.requires_grad();
            const bool gw_on = cw.requires_grad();
            if (!gx_on && !gw_on) return;
            float* gx = gx_on ? cx.grad() : nullptr;
            float* gw = gw_on ? cw.grad() : nullptr;
            const float* xd2 = cx.data();
            const float* wd2 = cw.data();
            for (const auto& cb : contribs_copy) {
                const float* gyrow = gy + static_cast<std::int64_t>(cb.out_idx) * cout;
                const float* xrow = xd2 + static_cast<std::int64_t>(cb.in_idx) * cin;
                float* gxrow = gx_on ? gx + static_cast<std::int64_t>(cb.in_idx) * cin : nullptr;
                for (int c = 0; c < cout; ++c) {
                    const float g = gyrow[c];
                    const std::int64_t wbase =
                        ((static_cast<std::int64_t>(c) * cin) * kh + cb.ky) * kw + cb.kx;
                    for (int ic = 0; ic < cin; ++ic) {
                        const std::int64_t wi = wbase + static_cast<std::int64_t>(ic) * kh * kw;
                        if (gx_on) gxrow[ic] += g * wd2[wi];
                        if (gw_on) gw[wi] += g * xrow[ic];
                    }
                }
            }
        });
    }
    return out;
}

Tensor densify(Tape& tape, const SparseBEVGrid& grid, int channels) {
    if (grid.active() > 0 && grid.features.dim(1) != channels)
        throw std::invalid_argument("densify: grid features " + shape_str(grid.features.shape()) +
                                    " vs channels " + std::to_string(channels));
    const bool rg = tape.enabled() && grid.active() > 0 && grid.features.requires_grad();
    Tensor dense({channels, grid.rows, grid.cols}, rg);
    const std::int64_t hw = static_cast<std::int64_t>(grid.rows) * grid.cols;
    for (size_t i = 0; i < grid.sites.size(); ++i) {
        const std::int64_t cell =
            static_cast<std::int64_t>(grid.sites[i].first) * grid.cols + grid.sites[i].second;
        for (int c = 0; c < channels; ++c)
            dense.data()[c * hw + cell] = grid.features.data()[i * static_cast<size_t>(channels) + c];
    }
    if (rg) {
        Tensor cx = grid.features, cy = dense;
        auto sites = grid.sites;
        const int cols = grid.cols;
        tape.record(dense, [cx, cy, sites, channels, hw, cols]() mutable {
            const float* gy = cy.grad();
            float* gx = cx.grad();
            for (size_t i = 0; i < sites.size(); ++i) {
                const std::int64_t cell = static_cast<std::int64_t>(sites[i].first) * cols + sites[i].second;
                for (int c = 0; c < channels; ++c)
                    gx[i * static_cast<size_t>(channels) + c] += gy[c * hw + cell];
            }
        });
    }
    return dense;
}

SparseConvBlock::SparseConvBlock(int cin, int cout, std::mt19937& rng)
    : weight(init_uniform({cout, cin, 3, 3}, cin * 9, rng)),
      bias(init_uniform({cout}, cin * 9, rng)) {}

SparseBEVGrid SparseConvBlock::forward(Tape& tape, const SparseBEVGrid& in) const {
    SparseBEVGrid out = sparse_conv(tape, in, weight, bias, /*stride=*/2, /*padding=*/1);
    out.features = relu(tape, out.features);
    return out;
}

ParamList SparseConvBlock::params(const std::string& prefix) const {
    return {{prefix + ".weight", weight}, {prefix + ".bias", bias}};
}

}  // namespace pillarnav
