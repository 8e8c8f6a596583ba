#pragma once

#include <cstdint>
#include <vector>

#include "egomem/errors.hpp"

namespace egomem {

/// 8-bit grayscale image, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
    if (w <= 0 || h <= 0) throw DomainError("image dimensions must be positive");
  }

  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool empty() const noexcept { return pixels.empty(); }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

}  // namespace egomem
