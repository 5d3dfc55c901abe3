#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace conceptscope {

/// Dense row-major float tensor. All graph values and activations use this;
/// shape metadata lives alongside the flat buffer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> dims)
      : dims_(std::move(dims)), data_(checked_size(dims_), 0.0f) {}
  Tensor(std::vector<int64_t> dims, std::vector<float> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (data_.size() != checked_size(dims_))
      throw std::invalid_argument("tensor data size does not match dims");
  }

  const std::vector<int64_t>& dims() const { return dims_; }
  int64_t dim(size_t i) const { return dims_.at(i); }
  size_t rank() const { return dims_.size(); }
  size_t size() const { return data_.size(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::vector<float>& values() { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& operator[](size_t i) { return data_[i]; }
  float operator[](size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }

  static std::string shape_str(const std::vector<int64_t>& dims) {
    std::string s = "[";
    for (size_t i = 0; i < dims.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims[i]);
    }
    return s + "]";
  }

 private:
  static size_t checked_size(const std::vector<int64_t>& dims) {
    size_t n = 1;
    for (int64_t d : dims) {
      if (d < 0) throw std::invalid_argument("negative tensor dim");
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  std::vector<int64_t> dims_;
  std::vector<float> data_;
};

}  // namespace conceptscope
