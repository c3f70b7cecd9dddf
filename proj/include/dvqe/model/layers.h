#pragma once

#include <cstddef>
#include <span>

#include "dvqe/common/tensor.h"

namespace dvqe {

// 2-D convolution over (time, frequency) with "same" padding (k/2 on each
// side) and stride (1, stride_f). Weights are [c_out][c_in][k_t][k_f]; bias
// may be empty. Output frequency size is ceil(F / stride_f).
Tensor3 conv2d(const Tensor3& in, std::span<const float> weight, std::span<const float> bias,
               std::size_t c_out, std::size_t k_t, std::size_t k_f, std::size_t stride_f);

// Per-channel normalization over (time, frequency) with affine gain/bias.
void channel_norm(Tensor3& x, std::span<const float> gain, std::span<const float> bias,
                  double eps = 1e-5);

// Per-channel PReLU.
void prelu(Tensor3& x, std::span<const float> slope);

// Pixel shuffle along frequency: out[c][t][f r + j] = in[c r + j][t][f].
Tensor3 subpixel_upsample(const Tensor3& x, std::size_t factor);
// Exact inverse of subpixel_upsample.
Tensor3 subpixel_downsample(const Tensor3& x, std::size_t factor);

// Centre crop (or symmetric zero pad) of the frequency axis to `freq` bins.
// The extra bin of an odd difference goes to the high end.
Tensor3 fit_freq(const Tensor3& x, std::size_t freq);

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b);

}  // namespace dvqe
