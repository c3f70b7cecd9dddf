#include "dvqe/model/layers.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "dvqe/common/error.h"

namespace dvqe {

Tensor3 conv2d(const Tensor3& in, std::span<const float> weight, std::span<const float> bias,
               std::size_t c_out, std::size_t k_t, std::size_t k_f, std::size_t stride_f) {
  const std::size_t c_in = in.channels();
  const std::size_t t_len = in.time();
  const std::size_t f_in = in.freq();
  if (stride_f == 0 || k_t == 0 || k_f == 0) throw ConfigError("conv2d: zero kernel or stride");
  if (weight.size() != c_out * c_in * k_t * k_f) {
    throw ConfigError("conv2d: weight size " + std::to_string(weight.size()) + " does not match [" +
                      std::to_string(c_out) + ", " + std::to_string(c_in) + ", " +
                      std::to_string(k_t) + ", " + std::to_string(k_f) + "]");
  }
  if (!bias.empty() && bias.size() != c_out) throw ConfigError("conv2d: bias size mismatch");
  const std::size_t f_out = (f_in + stride_f - 1) / stride_f;
  const std::ptrdiff_t pad_t = static_cast<std::ptrdiff_t>(k_t / 2);
  const std::ptrdiff_t pad_f = static_cast<std::ptrdiff_t>(k_f / 2);
  Tensor3 out(c_out, t_len, f_out);
  const auto s = static_cast<std::ptrdiff_t>(stride_f);
  for (std::size_t co = 0; co < c_out; ++co) {
    const float b = bias.empty() ? 0.0f : bias[co];
    std::fill(out.channel(co), out.channel(co) + t_len * f_out, b);
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const float* w = weight.data() + ((co * c_in + ci) * k_t) * k_f;
      for (std::size_t dt = 0; dt < k_t; ++dt) {
        for (std::size_t t = 0; t < t_len; ++t) {
          const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + dt) - pad_t;
          if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(t_len)) continue;
          const float* src = in.row(ci, static_cast<std::size_t>(ti));
          float* dst = out.row(co, t);
          for (std::size_t df = 0; df < k_f; ++df) {
            const float wv = w[dt * k_f + df];
            if (wv == 0.0f) continue;
            // Input index fi = f s + off must lie in [0, f_in).
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(df) - pad_f;
            std::ptrdiff_t lo = off >= 0 ? 0 : (-off + s - 1) / s;
            std::ptrdiff_t hi = (static_cast<std::ptrdiff_t>(f_in) - 1 - off) / s;
            hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(f_out) - 1);
            if (s == 1) {
              const float* sp = src + off;
              for (std::ptrdiff_t f = lo; f <= hi; ++f) dst[f] += wv * sp[f];
            } else {
              for (std::ptrdiff_t f = lo; f <= hi; ++f) dst[f] += wv * src[f * s + off];
            }
          }
        }
      }
    }
  }
  return out;
}

void channel_norm(Tensor3& x, std::span<const float> gain, std::span<const float> bias,
                  double eps) {
  if (gain.size() != x.channels() || bias.size() != x.channels()) {
    throw ConfigError("channel_norm: parameter size mismatch");
  }
  const std::size_t n = x.time() * x.freq();
  if (n == 0) return;
  for (std::size_t c = 0; c < x.channels(); ++c) {
    float* p = x.channel(c);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += p[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (p[i] - mean) * (p[i] - mean);
    var /= static_cast<double>(n);
    const double scale = gain[c] / std::sqrt(var + eps);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<float>((p[i] - mean) * scale + bias[c]);
    }
  }
}

void prelu(Tensor3& x, std::span<const float> slope) {
  if (slope.size() != x.channels()) throw ConfigError("prelu: slope size mismatch");
  const std::size_t n = x.time() * x.freq();
  for (std::size_t c = 0; c < x.channels(); ++c) {
    float* p = x.channel(c);
    const float a = slope[c];
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] < 0.0f) p[i] *= a;
    }
  }
}

Tensor3 subpixel_upsample(const Tensor3& x, std::size_t factor) {
  if (factor == 0 || x.channels() % factor != 0) {
    throw ConfigError("subpixel_upsample: " + std::to_string(x.channels()) +
                      " channels not divisible by factor " + std::to_string(factor));
  }
  const std::size_t c_out = x.channels() / factor;
  Tensor3 out(c_out, x.time(), x.freq() * factor);
  for (std::size_t c = 0; c < c_out; ++c) {
    for (std::size_t j = 0; j < factor; ++j) {
      for (std::size_t t = 0; t < x.time(); ++t) {
        const float* src = x.row(c * factor + j, t);
        float* dst = out.row(c, t);
        for (std::size_t f = 0; f < x.freq(); ++f) dst[f * factor + j] = src[f];
      }
    }
  }
  return out;
}

Tensor3 subpixel_downsample(const Tensor3& x, std::size_t factor) {
  if (factor == 0 || x.freq() % factor != 0) {
    throw ConfigError("subpixel_downsample: " + std::to_string(x.freq()) +
                      " bins not divisible by factor " + std::to_string(factor));
  }
  const std::size_t f_out = x.freq() / factor;
  Tensor3 out(x.channels() * factor, x.time(), f_out);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t j = 0; j < factor; ++j) {
      for (std::size_t t = 0; t < x.time(); ++t) {
        const float* src = x.row(c, t);
        float* dst = out.row(c * factor + j, t);
        for (std::size_t f = 0; f < f_out; ++f) dst[f] = src[f * factor + j];
      }
    }
  }
  return out;
}

Tensor3 fit_freq(const Tensor3& x, std::size_t freq) {
  if (freq == x.freq()) return x;
  Tensor3 out(x.channels(), x.time(), freq);
  if (x.freq() > freq) {
    const std::size_t start = (x.freq() - freq) / 2;
    for (std::size_t c = 0; c < x.channels(); ++c) {
      for (std::size_t t = 0; t < x.time(); ++t) {
        std::copy_n(x.row(c, t) + start, freq, out.row(c, t));
      }
    }
  } else {
    const std::size_t start = (freq - x.freq()) / 2;
    for (std::size_t c = 0; c < x.channels(); ++c) {
      for (std::size_t t = 0; t < x.time(); ++t) {
        std::copy_n(x.row(c, t), x.freq(), out.row(c, t) + start);
      }
    }
  }
  return out;
}

Tensor3 concat_channels(const Tensor3& a, const Tensor3& b) {
  if (a.time() != b.time() || a.freq() != b.freq()) {
    throw ConfigError("concat_channels: shape mismatch " + a.shape_string() + " vs " +
                      b.shape_string());
  }
  Tensor3 out(a.channels() + b.channels(), a.time(), a.freq());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

}  // namespace dvqe
