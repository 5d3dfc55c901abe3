#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace conceptscope {

/// 8-bit RGB image, row-major, interleaved channels. Raw pixel domain
/// (0..255); all occlusion geometry operates on this representation before
/// any normalization.
struct ImageU8 {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // height * width * 3

  ImageU8() = default;
  ImageU8(int w, int h, uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, fill) {}

  uint8_t& at(int row, int col, int ch) {
    return rgb[(static_cast<size_t>(row) * width + col) * 3 + ch];
  }
  uint8_t at(int row, int col, int ch) const {
    return rgb[(static_cast<size_t>(row) * width + col) * 3 + ch];
  }

  bool square() const { return width == height; }
  bool empty() const { return rgb.empty(); }
};

// Image file IO (PNG/JPEG/BMP via OpenCV). load_image decodes to RGB;
// resize_image is bilinear and deterministic.
ImageU8 load_image(const std::string& path);
void save_png(const std::string& path, const ImageU8& img);
ImageU8 resize_image(const ImageU8& img, int out_w, int out_h);

}  // namespace conceptscope
