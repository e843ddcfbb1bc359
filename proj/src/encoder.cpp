#include "pillarnav/encoder.hpp"

#include <stdexcept>

namespace pillarnav {

BevEncoder::BevEncoder(const EncoderConfig& cfg, std::mt19937& rng) : cfg_(cfg) {
    cfg_.pillar.validate();
    if (cfg_.sparse_channels.empty())
        throw std::invalid_argument("encoder: need at least one sparse stage");
    const int h = cfg_.pillar.rows();
    const int w = cfg_.pillar.cols();
    const int factor = 1 << static_cast<int>(cfg_.sparse_channels.size());
    if (h % factor != 0 || w % factor != 0)
        throw std::invalid_argument("encoder: grid " + std::to_string(h) + "x" + std::to_string(w) +
                                    " not divisible by total stride " + std::to_string(factor));
    int cin = kPillarFeatureDim;
    for (int cout : cfg_.sparse_channels) {
        sparse_.emplace_back(cin, cout, rng);
        cin = cout;
    }
    for (int i = 0; i < cfg_.dense_blocks; ++i)
        dense_.emplace_back(cin, cin, /*kernel=*/3, /*stride=*/1, /*padding=*/1, rng);
}

BevEncoder::Output BevEncoder::encode(Tape& tape, const PointCloud& cloud) const {
    SparseBEVGrid grid = pillarize(cloud, cfg_.pillar);
    for (const auto& block : sparse_) grid = block.forward(tape, grid);
    Tensor x = densify(tape, grid, cfg_.latent_dim());
    for (const auto& block : dense_) x = relu(tape, block.forward(tape, x));
    Tensor latent = global_max_pool(tape, x);
    return {x, latent};
}

Tensor BevEncoder::encode_latent(Tape& tape, const PointCloud& cloud) const {
    return encode(tape, cloud).latent;
}

ParamList BevEncoder::params(const std::string& prefix) const {
    ParamList out;
    for (size_t i = 0; i < sparse_.size(); ++i)
        append_params(out, prefix, sparse_[i].params("sparse" + std::to_string(i)));
    for (size_t i = 0; i < dense_.size(); ++i)
        append_params(out, prefix, dense_[i].params("dense" + std::to_string(i)));
    return out;
}

}  // namespace pillarnav
