#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conceptscope/tensor.hpp"

namespace conceptscope {

/// Programmatic construction of small ONNX graphs (synthetic encoders and
/// heads, reference exports). Each add_* call appends one node and returns
/// the name of its output value.
class GraphBuilder {
 public:
  explicit GraphBuilder(std::string graph_name);
  ~GraphBuilder();
  GraphBuilder(GraphBuilder&&) noexcept;
  GraphBuilder& operator=(GraphBuilder&&) noexcept;

  /// Declares the graph input. Dims with value 0 are written as dynamic.
  std::string input(const std::string& name, const std::vector<int64_t>& dims);

  std::string conv(const std::string& in, const Tensor& weights,
                   const std::optional<Tensor>& bias, int stride, int pad);
  std::string relu(const std::string& in);
  std::string max_pool(const std::string& in, int kernel, int stride);
  std::string average_pool(const std::string& in, int kernel, int stride);
  std::string global_average_pool(const std::string& in);
  std::string flatten(const std::string& in, int axis = 1);
  /// Y = X * W^T + b, W shaped [out, in] (transB = 1).
  std::string gemm(const std::string& in, const Tensor& weights,
                   const std::optional<Tensor>& bias);
  std::string add(const std::string& a, const std::string& b);

  void output(const std::string& name, const std::vector<int64_t>& dims);
  void save(const std::string& path) const;
  std::string serialize() const;

 private:
  std::string fresh(const std::string& stem);
  std::string add_initializer(const std::string& stem, const Tensor& t);

  struct Impl;
  std::unique_ptr<Impl> impl_;
  int counter_ = 0;
};

}  // namespace conceptscope
