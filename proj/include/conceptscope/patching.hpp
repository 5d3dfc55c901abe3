#pragma once

#include <vector>

#include "conceptscope/image.hpp"

namespace conceptscope {

/// 1-based grid coordinates of a patch: lx is the row band (top to bottom),
/// ly the column band (left to right). Patch (lx, ly) covers pixel rows
/// [(lx-1)*s_p, lx*s_p) and columns [(ly-1)*s_p, ly*s_p).
struct PatchCoord {
  int lx = 1;
  int ly = 1;
  bool operator==(const PatchCoord&) const = default;
};

struct PatchGrid {
  int image_size = 0;
  int patch_size = 0;
  int grid_w = 0;  // patches per row band == image_size / patch_size
  int grid_h = 0;

  PatchGrid(int image_size, int s_p);

  int patch_count() const { return grid_w * grid_h; }
  /// Row-major index: (lx-1)*grid_w + (ly-1).
  int index_of(PatchCoord p) const { return (p.lx - 1) * grid_w + (p.ly - 1); }
  PatchCoord coord_of(int index) const {
    return {index / grid_w + 1, index % grid_w + 1};
  }
};

/// All patch coordinates of the (image_size / s_p)^2 grid in row-major order.
/// Errors when s_p does not divide image_size (no partial patches).
std::vector<PatchCoord> partition(int image_size, int s_p);

/// Zeroes the pixels of `patch`; all other pixels are preserved bit for bit.
/// Operates on the raw pixel domain, before any preprocessing.
ImageU8 occlude(const ImageU8& image, PatchCoord patch, int s_p);

/// Half-open rectangle on an Hf x Wf feature grid.
struct FeatureRegion {
  int row_begin = 0, row_end = 0;
  int col_begin = 0, col_end = 0;
  bool operator==(const FeatureRegion&) const = default;
};

/// Maps a pixel patch onto the feature grid with floor(start)/ceil(end)
/// rounding so no activation cell is lost when s_p does not align with the
/// feature resolution. Never empty.
FeatureRegion map_patch_to_feature_region(PatchCoord patch, int s_p,
                                          int image_size, int feat_h, int feat_w);

}  // namespace conceptscope
