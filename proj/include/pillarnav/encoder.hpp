#pragma once

#include <random>

#include "pillarnav/sparse_conv.hpp"

namespace pillarnav {

struct EncoderConfig {
    PillarConfig pillar = PillarConfig::sim_preset();
    std::vector<int> sparse_channels{16, 32, 64, 128};  // four stride-2 stages
    int dense_blocks = 3;                               // 3x3 stride-1 at the last width
    int latent_dim() const { return sparse_channels.back(); }
};

// Pillar grid -> stride-2 sparse conv stack -> densify -> dense conv stack ->
// global max-pool. Emits the dense BEV feature map and the pooled latent.
class BevEncoder {
public:
    BevEncoder() = default;
    BevEncoder(const EncoderConfig& cfg, std::mt19937& rng);

    struct Output {
        Tensor bev;     // [C, H', W']
        Tensor latent;  // [C]
    };
    Output encode(Tape& tape, const PointCloud& cloud) const;
    Tensor encode_latent(Tape& tape, const PointCloud& cloud) const;

    const EncoderConfig& config() const { return cfg_; }
    ParamList params(const std::string& prefix) const;

private:
    EncoderConfig cfg_;
    std::vector<SparseConvBlock> sparse_;
    std::vector<Conv2d> dense_;
};

}  // namespace pillarnav
