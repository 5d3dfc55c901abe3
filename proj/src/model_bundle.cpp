#include "conceptscope/model_bundle.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "conceptscope/hashing.hpp"
#include "conceptscope/parallel.hpp"

namespace conceptscope {

namespace fs = std::filesystem;
using nlohmann::json;

ChannelMask::ChannelMask(std::vector<int> keep, int num_channels)
    : num_channels_(num_channels) {
  std::set<int> uniq;
  for (int c : keep) {
    if (c < 0 || c >= num_channels)
      throw std::out_of_range("channel " + std::to_string(c) +
                              " outside [0," + std::to_string(num_channels) + ")");
    if (!uniq.insert(c).second)
      throw std::invalid_argument("duplicate channel in mask: " + std::to_string(c));
  }
  keep_.assign(uniq.begin(), uniq.end());
}

ChannelMask ChannelMask::all(int num_channels) {
  std::vector<int> keep(static_cast<size_t>(num_channels));
  for (int i = 0; i < num_channels; ++i) keep[static_cast<size_t>(i)] = i;
  return ChannelMask(std::move(keep), num_channels);
}

ChannelMask ChannelMask::none(int num_channels) {
  return ChannelMask({}, num_channels);
}

std::string ChannelMask::descriptor() const {
  if (is_full()) return "full";
  std::string s = "keep:";
  for (size_t i = 0; i < keep_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(keep_[i]);
  }
  return s;
}

ModelBundle ModelBundle::load(const std::string& descriptor_path) {
  std::ifstream in(descriptor_path);
  if (!in) throw std::runtime_error("model file not found: " + descriptor_path);
  json desc;
  try {
    in >> desc;
  } catch (const json::exception& e) {
    throw std::runtime_error("invalid model descriptor " + descriptor_path + ": " +
                             e.what());
  }

  const fs::path base = fs::path(descriptor_path).parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  ModelBundle b;
  const std::string encoder_path = resolve(desc.at("encoder").get<std::string>());
  const std::string head_path = resolve(desc.at("head").get<std::string>());
  if (!fs::exists(encoder_path))
    throw std::runtime_error("model file not found: " + encoder_path);
  if (!fs::exists(head_path))
    throw std::runtime_error("model file not found: " + head_path);
  b.encoder_ = std::make_shared<OnnxModel>(OnnxModel::load(encoder_path));
  b.head_ = std::make_shared<OnnxModel>(OnnxModel::load(head_path));
  b.input_size_ = desc.at("input_size").get<int>();
  if (b.input_size_ < 1) throw std::runtime_error("input_size must be >= 1");
  auto means = desc.at("means").get<std::vector<float>>();
  auto stds = desc.at("stds").get<std::vector<float>>();
  if (means.size() != 3 || stds.size() != 3)
    throw std::runtime_error("means/stds must have 3 entries");
  std::copy(means.begin(), means.end(), b.means_.begin());
  std::copy(stds.begin(), stds.end(), b.stds_.begin());
  for (float s : b.stds_)
    if (s == 0.0f) throw std::runtime_error("std must be nonzero");
  auto fshape = desc.at("feature_shape").get<std::vector<int>>();
  if (fshape.size() != 3)
    throw std::runtime_error("feature_shape must be [C,Hf,Wf]");
  std::copy(fshape.begin(), fshape.end(), b.feature_shape_.begin());
  b.class_names_ = desc.at("classes").get<std::vector<std::string>>();
  if (b.class_names_.size() < 2)
    throw std::runtime_error("at least 2 classes required");

  b.content_hash_ = sha256_hex(sha256_file(descriptor_path) +
                               sha256_file(encoder_path) + sha256_file(head_path));
  b.inference_calls_ = std::make_shared<std::atomic<uint64_t>>(0);

  // dry run on a zero image to validate declared shapes against the graphs
  Tensor probe({1, 3, b.input_size_, b.input_size_});
  Tensor feat = b.encoder_->run(probe);
  if (feat.rank() != 4 || feat.dim(0) != 1 ||
      feat.dim(1) != b.feature_shape_[0] || feat.dim(2) != b.feature_shape_[1] ||
      feat.dim(3) != b.feature_shape_[2])
    throw std::runtime_error(
        "shape mismatch: declared feature_shape [" +
        std::to_string(b.feature_shape_[0]) + "," +
        std::to_string(b.feature_shape_[1]) + "," +
        std::to_string(b.feature_shape_[2]) + "], encoder produced " +
        Tensor::shape_str(feat.dims()));
  Tensor logits = b.head_->run(feat);
  if (logits.size() != b.class_names_.size())
    throw std::runtime_error("shape mismatch: head emits " +
                             std::to_string(logits.size()) + " values, " +
                             std::to_string(b.class_names_.size()) +
                             " classes declared");
  return b;
}

int ModelBundle::class_index(const std::string& name) const {
  for (size_t i = 0; i < class_names_.size(); ++i)
    if (class_names_[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown class label: " + name);
}

Tensor ModelBundle::preprocess(const ImageU8& image) const {
  if (image.empty()) throw std::invalid_argument("empty image");
  const ImageU8* src = &image;
  ImageU8 resized;
  if (image.width != input_size_ || image.height != input_size_) {
    resized = resize_image(image, input_size_, input_size_);
    src = &resized;
  }
  Tensor t({1, 3, input_size_, input_size_});
  const size_t plane = static_cast<size_t>(input_size_) * input_size_;
  for (int c = 0; c < 3; ++c) {
    float* out = t.data() + c * plane;
    const float mean = means_[static_cast<size_t>(c)];
    const float inv_std = 1.0f / stds_[static_cast<size_t>(c)];
    for (size_t i = 0; i < plane; ++i)
      out[i] = (static_cast<float>(src->rgb[i * 3 + c]) / 255.0f - mean) * inv_std;
  }
  return t;
}

Tensor ModelBundle::encode_tensor(const Tensor& input) const {
  inference_calls_->fetch_add(1);
  Tensor feat = encoder_->run(input);
  if (feat.rank() == 4 && feat.dim(0) == 1)
    return Tensor({feat.dim(1), feat.dim(2), feat.dim(3)}, feat.values());
  return feat;
}

Tensor ModelBundle::encode(const ImageU8& image) const {
  return encode_tensor(preprocess(image));
}

Logits ModelBundle::head_forward(const Tensor& features, const ChannelMask& mask) const {
  if (features.rank() != 3 || features.dim(0) != feature_shape_[0] ||
      features.dim(1) != feature_shape_[1] || features.dim(2) != feature_shape_[2])
    throw std::invalid_argument("feature tensor shape " +
                                Tensor::shape_str(features.dims()) +
                                " does not match bundle feature_shape");
  if (mask.num_channels() != channels())
    throw std::invalid_argument("mask channel count does not match bundle");
  Tensor input({1, features.dim(0), features.dim(1), features.dim(2)},
               features.values());
  if (!mask.is_full()) {
    const size_t plane = static_cast<size_t>(feature_h()) * feature_w();
    std::vector<char> kept(static_cast<size_t>(channels()), 0);
    for (int c : mask.keep()) kept[static_cast<size_t>(c)] = 1;
    for (int c = 0; c < channels(); ++c) {
      if (kept[static_cast<size_t>(c)]) continue;
      std::fill_n(input.data() + static_cast<size_t>(c) * plane, plane, 0.0f);
    }
  }
  inference_calls_->fetch_add(1);
  Tensor out = head_->run(input);
  return Logits(out.values());
}

Logits ModelBundle::forward(const ImageU8& image, const ChannelMask& mask) const {
  return head_forward(encode(image), mask);
}

std::vector<Logits> ModelBundle::batch_forward(const std::vector<ImageU8>& images,
                                               const ChannelMask& mask) const {
  std::vector<Logits> out(images.size());
  parallel_for(images.size(), [&](size_t i) {
    try {
      out[i] = forward(images[i], mask);
    } catch (const std::exception& e) {
      throw std::runtime_error("batch item " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace conceptscope
