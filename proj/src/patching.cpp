#include "conceptscope/patching.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

namespace conceptscope {

PatchGrid::PatchGrid(int image_size_, int s_p) {
  if (s_p < 1) throw std::invalid_argument("patch size must be >= 1");
  if (image_size_ < 1) throw std::invalid_argument("image size must be >= 1");
  if (image_size_ % s_p != 0)
    throw std::invalid_argument("patch size " + std::to_string(s_p) +
                                " does not divide image size " +
                                std::to_string(image_size_));
  image_size = image_size_;
  patch_size = s_p;
  grid_w = grid_h = image_size_ / s_p;
}

std::vector<PatchCoord> partition(int image_size, int s_p) {
  PatchGrid grid(image_size, s_p);
  std::vector<PatchCoord> out;
  out.reserve(static_cast<size_t>(grid.patch_count()));
  for (int lx = 1; lx <= grid.grid_h; ++lx)
    for (int ly = 1; ly <= grid.grid_w; ++ly) out.push_back({lx, ly});
  return out;
}

ImageU8 occlude(const ImageU8& image, PatchCoord patch, int s_p) {
  if (image.width != image.height)
    throw std::invalid_argument("occlude expects a square image");
  PatchGrid grid(image.width, s_p);
  if (patch.lx < 1 || patch.lx > grid.grid_h || patch.ly < 1 ||
      patch.ly > grid.grid_w)
    throw std::out_of_range("patch (" + std::to_string(patch.lx) + "," +
                            std::to_string(patch.ly) + ") outside a " +
                            std::to_string(grid.grid_h) + "x" +
                            std::to_string(grid.grid_w) + " grid");
  ImageU8 out = image;
  const int r0 = (patch.lx - 1) * s_p;
  const int c0 = (patch.ly - 1) * s_p;
  for (int r = r0; r < r0 + s_p; ++r)
    std::memset(&out.rgb[(static_cast<size_t>(r) * out.width + c0) * 3], 0,
                static_cast<size_t>(s_p) * 3);
  return out;
}

FeatureRegion map_patch_to_feature_region(PatchCoord patch, int s_p,
                                          int image_size, int feat_h,
                                          int feat_w) {
  PatchGrid grid(image_size, s_p);
  if (patch.lx < 1 || patch.lx > grid.grid_h || patch.ly < 1 ||
      patch.ly > grid.grid_w)
    throw std::out_of_range("patch outside grid");
  auto lo = [](int64_t start_px, int feat, int size) {
    return static_cast<int>((start_px * feat) / size);  // floor
  };
  auto hi = [](int64_t end_px, int feat, int size) {
    return static_cast<int>((end_px * feat + size - 1) / size);  // ceil
  };
  FeatureRegion r;
  r.row_begin = lo(static_cast<int64_t>(patch.lx - 1) * s_p, feat_h, image_size);
  r.row_end = hi(static_cast<int64_t>(patch.lx) * s_p, feat_h, image_size);
  r.col_begin = lo(static_cast<int64_t>(patch.ly - 1) * s_p, feat_w, image_size);
  r.col_end = hi(static_cast<int64_t>(patch.ly) * s_p, feat_w, image_size);
  return r;
}

}  // namespace conceptscope
