#include "conceptscope/onnx_builder.hpp"

#include <fstream>
#include <stdexcept>

#include "onnx.pb.h"

namespace conceptscope {

struct GraphBuilder::Impl {
  onnx::ModelProto model;
  onnx::GraphProto* graph = nullptr;
};

namespace {

void set_value_info(onnx::ValueInfoProto* vi, const std::string& name,
                    const std::vector<int64_t>& dims) {
  vi->set_name(name);
  auto* tt = vi->mutable_type()->mutable_tensor_type();
  tt->set_elem_type(onnx::TensorProto::FLOAT);
  auto* shape = tt->mutable_shape();
  for (size_t i = 0; i < dims.size(); ++i) {
    auto* d = shape->add_dim();
    if (dims[i] > 0)
      d->set_dim_value(dims[i]);
    else
      d->set_dim_param("d" + std::to_string(i));
  }
}

void attr_ints(onnx::NodeProto* n, const std::string& name,
               const std::vector<int64_t>& vals) {
  auto* a = n->add_attribute();
  a->set_name(name);
  a->set_type(onnx::AttributeProto::INTS);
  for (int64_t v : vals) a->add_ints(v);
}

void attr_int(onnx::NodeProto* n, const std::string& name, int64_t v) {
  auto* a = n->add_attribute();
  a->set_name(name);
  a->set_type(onnx::AttributeProto::INT);
  a->set_i(v);
}

}  // namespace

GraphBuilder::GraphBuilder(std::string graph_name) : impl_(new Impl) {
  impl_->model.set_ir_version(7);
  impl_->model.set_producer_name("conceptscope");
  auto* opset = impl_->model.add_opset_import();
  opset->set_domain("");
  opset->set_version(13);
  impl_->graph = impl_->model.mutable_graph();
  impl_->graph->set_name(std::move(graph_name));
}

GraphBuilder::~GraphBuilder() = default;
GraphBuilder::GraphBuilder(GraphBuilder&&) noexcept = default;
GraphBuilder& GraphBuilder::operator=(GraphBuilder&&) noexcept = default;

std::string GraphBuilder::fresh(const std::string& stem) {
  return stem + "_" + std::to_string(counter_++);
}

std::string GraphBuilder::add_initializer(const std::string& stem, const Tensor& t) {
  const std::string name = fresh(stem);
  auto* init = impl_->graph->add_initializer();
  init->set_name(name);
  init->set_data_type(onnx::TensorProto::FLOAT);
  for (int64_t d : t.dims()) init->add_dims(d);
  init->mutable_raw_data()->assign(
      reinterpret_cast<const char*>(t.data()), t.size() * sizeof(float));
  return name;
}

std::string GraphBuilder::input(const std::string& name,
                                const std::vector<int64_t>& dims) {
  set_value_info(impl_->graph->add_input(), name, dims);
  return name;
}

std::string GraphBuilder::conv(const std::string& in, const Tensor& weights,
                               const std::optional<Tensor>& bias, int stride,
                               int pad) {
  const std::string w = add_initializer("conv_w", weights);
  auto* n = impl_->graph->add_node();
  n->set_op_type("Conv");
  n->set_name(fresh("conv"));
  n->add_input(in);
  n->add_input(w);
  if (bias) n->add_input(add_initializer("conv_b", *bias));
  const std::string out = fresh("conv_out");
  n->add_output(out);
  attr_ints(n, "kernel_shape", {weights.dim(2), weights.dim(3)});
  attr_ints(n, "strides", {stride, stride});
  attr_ints(n, "pads", {pad, pad, pad, pad});
  return out;
}

std::string GraphBuilder::relu(const std::string& in) {
  auto* n = impl_->graph->add_node();
  n->set_op_type("Relu");
  n->set_name(fresh("relu"));
  n->add_input(in);
  const std::string out = fresh("relu_out");
  n->add_output(out);
  return out;
}

std::string GraphBuilder::max_pool(const std::string& in, int kernel, int stride) {
  auto* n = impl_->graph->add_node();
  n->set_op_type("MaxPool");
  n->set_name(fresh("maxpool"));
  n->add_input(in);
  const std::string out = fresh("maxpool_out");
  n->add_output(out);
  attr_ints(n, "kernel_shape", {kernel, kernel});
  attr_ints(n, "strides", {stride, stride});
  return out;
}

std::string GraphBuilder::average_pool(const std::string& in, int kernel,
                                       int stride) {
  auto* n = impl_->graph->add_node();
  n->set_op_type("AveragePool");
  n->set_name(fresh("avgpool"));
  n->add_input(in);
  const std::string out = fresh("avgpool_out");
  n->add_output(out);
  attr_ints(n, "kernel_shape", {kernel, kernel});
  attr_ints(n, "strides", {stride, stride});
  return out;
}

std::string GraphBuilder::global_average_pool(const std::string& in) {
  auto* n = impl_->graph->add_node();
  n->set_op_type("GlobalAveragePool");
  n->set_name(fresh("gap"));
  n->add_input(in);
  const std::string out = fresh("gap_out");
  n->add_output(out);
  return out;
}

std::string GraphBuilder::flatten(const std::string& in, int axis) {
  auto* n = impl_->graph->add_node();
  n->set_op_type("Flatten");
  n->set_name(fresh("flatten"));
  n->add_input(in);
  const std::string out = fresh("flatten_out");
  n->add_output(out);
  attr_int(n, "axis", axis);
  return out;
}

std::string GraphBuilder::gemm(const std::string& in, const Tensor& weights,
                               const std::optional<Tensor>& bias) {
  const std::string w = add_initializer("gemm_w", weights);
  auto* n = impl_->graph->add_node();
  n->set_op_type("Gemm");
  n->set_name(fresh("gemm"));
  n->add_input(in);
  n->add_input(w);
  if (bias) n->add_input(add_initializer("gemm_b", *bias));
  const std::string out = fresh("gemm_out");
  n->add_output(out);
  attr_int(n, "transB", 1);
  return out;
}

std::string GraphBuilder::add(const std::string& a, const std::string& b) {
  auto* n = impl_->graph->add_node();
  n->set_op_type("Add");
  n->set_name(fresh("add"));
  n->add_input(a);
  n->add_input(b);
  const std::string out = fresh("add_out");
  n->add_output(out);
  return out;
}

void GraphBuilder::output(const std::string& name,
                          const std::vector<int64_t>& dims) {
  set_value_info(impl_->graph->add_output(), name, dims);
}

std::string GraphBuilder::serialize() const {
  std::string bytes;
  if (!impl_->model.SerializeToString(&bytes))
    throw std::runtime_error("failed to serialize ONNX model");
  return bytes;
}

void GraphBuilder::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing model to " + path);
}

}  // namespace conceptscope
