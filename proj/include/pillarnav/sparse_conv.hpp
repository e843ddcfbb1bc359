#pragma once

#include <random>

#include "pillarnav/nn.hpp"
#include "pillarnav/pillars.hpp"

namespace pillarnav {

// Regular (dilating) sparse 2-D convolution. An output cell is active iff at
// least one active input cell falls inside its receptive field; values at
// active sites equal the dense convolution of the zero-densified input.
SparseBEVGrid sparse_conv(Tape& tape, const SparseBEVGrid& in, const Tensor& weight,
                          const Tensor& bias, int stride, int padding);

// Scatters active-site features into a zero-filled dense [C,H,W] tensor.
Tensor densify(Tape& tape, const SparseBEVGrid& grid, int channels);

// 3x3 stride-2 sparse convolution followed by ReLU.
struct SparseConvBlock {
    Tensor weight;  // [Cout, Cin, 3, 3]
    Tensor bias;    // [Cout]

    SparseConvBlock() = default;
    SparseConvBlock(int cin, int cout, std::mt19937& rng);
    SparseBEVGrid forward(Tape& tape, const SparseBEVGrid& in) const;
    ParamList params(const std::string& prefix) const;
};

}  // namespace pillarnav
