#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dvqe {

// Dense float feature map laid out [channel][time][frequency].
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t channels, std::size_t time, std::size_t freq, float fill = 0.0f)
      : c_(channels), t_(time), f_(freq), data_(channels * time * freq, fill) {}

  std::size_t channels() const { return c_; }
  std::size_t time() const { return t_; }
  std::size_t freq() const { return f_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& operator()(std::size_t c, std::size_t t, std::size_t f) {
    return data_[(c * t_ + t) * f_ + f];
  }
  float operator()(std::size_t c, std::size_t t, std::size_t f) const {
    return data_[(c * t_ + t) * f_ + f];
  }
  float* channel(std::size_t c) { return data_.data() + c * t_ * f_; }
  const float* channel(std::size_t c) const { return data_.data() + c * t_ * f_; }
  float* row(std::size_t c, std::size_t t) { return data_.data() + (c * t_ + t) * f_; }
  const float* row(std::size_t c, std::size_t t) const {
    return data_.data() + (c * t_ + t) * f_;
  }
  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  std::string shape_string() const {
    return "(" + std::to_string(c_) + ", " + std::to_string(t_) + ", " +
           std::to_string(f_) + ")";
  }
  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t c_ = 0, t_ = 0, f_ = 0;
  std::vector<float> data_;
};

}  // namespace dvqe
