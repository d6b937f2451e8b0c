#pragma once

#include <algorithm>
#include <vector>

#include "sgnv/core/tensor.hpp"

namespace sgnv {

/// Interleaved (y, x, channel) image of doubles in [0,1].
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int w, int h, int c)
      : width(w), height(h), channels(c),
        data(size_t(w) * size_t(h) * size_t(c), 0.0) {}

  double& at(int x, int y, int c) {
    return data[(size_t(y) * size_t(width) + size_t(x)) * size_t(channels) +
                size_t(c)];
  }
  double at(int x, int y, int c) const {
    return data[(size_t(y) * size_t(width) + size_t(x)) * size_t(channels) +
                size_t(c)];
  }

  void clamp01() {
    for (double& v : data) v = std::clamp(v, 0.0, 1.0);
  }

  /// To planar [C,H,W] tensor.
  Tensor to_chw() const {
    Tensor t({channels, height, width});
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
          t[(int64_t(c) * height + y) * width + x] = at(x, y, c);
    return t;
  }

  static Image from_chw(const Tensor& t) {
    if (t.rank() != 3) throw std::invalid_argument("from_chw: rank-3 required");
    Image im(t.dim(2), t.dim(1), t.dim(0));
    for (int c = 0; c < im.channels; ++c)
      for (int y = 0; y < im.height; ++y)
        for (int x = 0; x < im.width; ++x)
          im.at(x, y, c) = t[(int64_t(c) * im.height + y) * im.width + x];
    return im;
  }
};

}  // namespace sgnv
