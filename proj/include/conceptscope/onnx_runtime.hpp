#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "conceptscope/tensor.hpp"

namespace conceptscope {

/// Evaluator for ONNX inference graphs covering the op set produced by
/// standard CNN exports: Conv, Relu, MaxPool, AveragePool,
/// GlobalAveragePool, BatchNormalization, Gemm, MatMul, Add, Flatten,
/// Reshape, Concat, Identity, Dropout (inference). Single input, single
/// output, float32. Execution is deterministic; nodes run in file order
/// (ONNX requires topological order).
class OnnxModel {
 public:
  struct Node {
    std::string op;
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, int64_t> attr_i;
    std::map<std::string, float> attr_f;
    std::map<std::string, std::vector<int64_t>> attr_ints;
    std::map<std::string, std::string> attr_s;
  };

  static OnnxModel load(const std::string& path);
  static OnnxModel parse(const std::string& serialized_bytes);

  /// Runs the graph on one input tensor. Dims declared as dynamic (0) in the
  /// graph input are taken from the supplied tensor; fixed dims must match.
  Tensor run(const Tensor& input) const;

  const std::string& input_name() const { return input_name_; }
  const std::string& output_name() const { return output_name_; }
  /// Declared input dims; 0 marks a dynamic dim.
  const std::vector<int64_t>& input_dims() const { return input_dims_; }
  const std::vector<int64_t>& output_dims() const { return output_dims_; }
  const std::vector<Node>& nodes() const { return nodes_; }

 private:
  std::vector<Node> nodes_;
  std::unordered_map<std::string, Tensor> float_inits_;
  std::unordered_map<std::string, std::vector<int64_t>> int64_inits_;
  std::string input_name_;
  std::string output_name_;
  std::vector<int64_t> input_dims_;
  std::vector<int64_t> output_dims_;
};

}  // namespace conceptscope
