#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "conceptscope/image.hpp"
#include "conceptscope/onnx_runtime.hpp"
#include "conceptscope/tensor.hpp"

namespace conceptscope {

using Logits = std::vector<float>;

/// Set of feature channels kept alive by an ablation; everything outside the
/// set is zeroed before the head runs.
class ChannelMask {
 public:
  ChannelMask() = default;
  ChannelMask(std::vector<int> keep, int num_channels);
  static ChannelMask all(int num_channels);
  static ChannelMask none(int num_channels);

  bool is_full() const { return static_cast<int>(keep_.size()) == num_channels_; }
  const std::vector<int>& keep() const { return keep_; }
  int num_channels() const { return num_channels_; }
  /// Stable textual form used in cache keys.
  std::string descriptor() const;

 private:
  std::vector<int> keep_;  // sorted, unique, in [0, num_channels)
  int num_channels_ = 0;
};

/// A CNN split at its last convolutional layer: `encoder` maps the
/// preprocessed image to the feature tensor, `head` maps (possibly ablated)
/// features to pre-softmax logits. Immutable after load; shareable across
/// threads.
class ModelBundle {
 public:
  static ModelBundle load(const std::string& descriptor_path);

  int input_size() const { return input_size_; }
  const std::array<float, 3>& means() const { return means_; }
  const std::array<float, 3>& stds() const { return stds_; }
  int channels() const { return feature_shape_[0]; }
  int feature_h() const { return feature_shape_[1]; }
  int feature_w() const { return feature_shape_[2]; }
  const std::array<int, 3>& feature_shape() const { return feature_shape_; }
  int num_classes() const { return static_cast<int>(class_names_.size()); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  int class_index(const std::string& name) const;
  /// SHA-256 over descriptor and both graph files; cache key component.
  const std::string& content_hash() const { return content_hash_; }

  /// Resize (if needed) plus per-channel (x/255 - mean)/std normalization.
  Tensor preprocess(const ImageU8& image) const;
  /// Raw encoder pass on an already preprocessed NCHW tensor.
  Tensor encode_tensor(const Tensor& input) const;
  /// Feature tensor [C, Hf, Wf] for one image.
  Tensor encode(const ImageU8& image) const;
  /// Pre-softmax logits after zeroing channels outside `mask`.
  Logits head_forward(const Tensor& features, const ChannelMask& mask) const;
  Logits forward(const ImageU8& image, const ChannelMask& mask) const;
  /// Order-preserving batched forward; element i equals
  /// forward(images[i], mask). Item failures carry the offending index.
  std::vector<Logits> batch_forward(const std::vector<ImageU8>& images,
                                    const ChannelMask& mask) const;

  /// Number of graph executions since load (cache telemetry).
  uint64_t inference_count() const { return inference_calls_->load(); }

 private:
  std::shared_ptr<OnnxModel> encoder_;
  std::shared_ptr<OnnxModel> head_;
  int input_size_ = 0;
  std::array<float, 3> means_{};
  std::array<float, 3> stds_{};
  std::array<int, 3> feature_shape_{};
  std::vector<std::string> class_names_;
  std::string content_hash_;
  std::shared_ptr<std::atomic<uint64_t>> inference_calls_;
};

}  // namespace conceptscope
