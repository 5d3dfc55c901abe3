#include "conceptscope/onnx_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "onnx.pb.h"

namespace conceptscope {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("model file not found: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor tensor_from_proto_float(const onnx::TensorProto& t) {
  std::vector<int64_t> dims(t.dims().begin(), t.dims().end());
  size_t n = 1;
  for (int64_t d : dims) n *= static_cast<size_t>(d);
  std::vector<float> data;
  if (!t.raw_data().empty()) {
    if (t.raw_data().size() != n * sizeof(float))
      throw std::runtime_error("initializer " + t.name() + ": raw_data size mismatch");
    data.resize(n);
    std::memcpy(data.data(), t.raw_data().data(), n * sizeof(float));
  } else {
    data.assign(t.float_data().begin(), t.float_data().end());
    if (data.size() != n)
      throw std::runtime_error("initializer " + t.name() + ": float_data size mismatch");
  }
  return Tensor(std::move(dims), std::move(data));
}

std::vector<int64_t> tensor_from_proto_int64(const onnx::TensorProto& t) {
  size_t n = 1;
  for (int64_t d : t.dims()) n *= static_cast<size_t>(d);
  std::vector<int64_t> data;
  if (!t.raw_data().empty()) {
    if (t.raw_data().size() != n * sizeof(int64_t))
      throw std::runtime_error("initializer " + t.name() + ": raw int64 size mismatch");
    data.resize(n);
    std::memcpy(data.data(), t.raw_data().data(), n * sizeof(int64_t));
  } else {
    data.assign(t.int64_data().begin(), t.int64_data().end());
  }
  return data;
}

struct PoolParams {
  int kh, kw, sh, sw, pt, pl, pb, pr;
};

PoolParams pool_params(const OnnxModel::Node& n, int default_k = -1) {
  PoolParams p{};
  auto ks = n.attr_ints.find("kernel_shape");
  if (ks != n.attr_ints.end()) {
    p.kh = static_cast<int>(ks->second.at(0));
    p.kw = static_cast<int>(ks->second.at(1));
  } else if (default_k > 0) {
    p.kh = p.kw = default_k;
  } else {
    throw std::runtime_error(n.op + ": missing kernel_shape");
  }
  p.sh = p.sw = 1;
  auto st = n.attr_ints.find("strides");
  if (st != n.attr_ints.end()) {
    p.sh = static_cast<int>(st->second.at(0));
    p.sw = static_cast<int>(st->second.at(1));
  }
  p.pt = p.pl = p.pb = p.pr = 0;
  auto pd = n.attr_ints.find("pads");
  if (pd != n.attr_ints.end()) {
    p.pt = static_cast<int>(pd->second.at(0));
    p.pl = static_cast<int>(pd->second.at(1));
    p.pb = static_cast<int>(pd->second.at(2));
    p.pr = static_cast<int>(pd->second.at(3));
  }
  return p;
}

void require_4d(const Tensor& t, const std::string& op) {
  if (t.rank() != 4)
    throw std::runtime_error(op + ": expected 4-D NCHW input, got " +
                             Tensor::shape_str(t.dims()));
}

Tensor op_conv(const OnnxModel::Node& n, const Tensor& x, const Tensor& w,
               const Tensor* bias) {
  require_4d(x, "Conv");
  if (w.rank() != 4) throw std::runtime_error("Conv: weights must be 4-D");
  auto g = n.attr_i.count("group") ? n.attr_i.at("group") : 1;
  if (g != 1) throw std::runtime_error("Conv: only group=1 supported");
  if (n.attr_ints.count("dilations")) {
    for (int64_t d : n.attr_ints.at("dilations"))
      if (d != 1) throw std::runtime_error("Conv: only dilation=1 supported");
  }
  PoolParams p = pool_params(n, static_cast<int>(w.dim(2)));
  const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
  const int M = static_cast<int>(w.dim(0));
  if (w.dim(1) != C)
    throw std::runtime_error("Conv: channel mismatch, input has " +
                             std::to_string(C) + ", weights expect " +
                             std::to_string(w.dim(1)));
  const int OH = (H + p.pt + p.pb - p.kh) / p.sh + 1;
  const int OW = (W + p.pl + p.pr - p.kw) / p.sw + 1;
  if (OH <= 0 || OW <= 0)
    throw std::runtime_error("Conv: input " + Tensor::shape_str(x.dims()) +
                             " smaller than kernel");
  Tensor y({N, M, OH, OW});
  const float* xd = x.data();
  const float* wd = w.data();
  float* yd = y.data();
  for (int nn = 0; nn < N; ++nn) {
    for (int m = 0; m < M; ++m) {
      const float b = bias ? bias->data()[m] : 0.0f;
      for (int oh = 0; oh < OH; ++oh) {
        for (int ow = 0; ow < OW; ++ow) {
          float acc = b;
          const int ih0 = oh * p.sh - p.pt;
          const int iw0 = ow * p.sw - p.pl;
          for (int c = 0; c < C; ++c) {
            const float* xp = xd + ((static_cast<size_t>(nn) * C + c) * H) * W;
            const float* wp = wd + ((static_cast<size_t>(m) * C + c) * p.kh) * p.kw;
            for (int kh = 0; kh < p.kh; ++kh) {
              const int ih = ih0 + kh;
              if (ih < 0 || ih >= H) continue;
              for (int kw = 0; kw < p.kw; ++kw) {
                const int iw = iw0 + kw;
                if (iw < 0 || iw >= W) continue;
                acc += xp[static_cast<size_t>(ih) * W + iw] * wp[kh * p.kw + kw];
              }
            }
          }
          yd[((static_cast<size_t>(nn) * M + m) * OH + oh) * OW + ow] = acc;
        }
      }
    }
  }
  return y;
}

Tensor op_pool(const OnnxModel::Node& n, const Tensor& x, bool is_max) {
  require_4d(x, n.op);
  PoolParams p = pool_params(n);
  const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const int H = static_cast<int>(x.dim(2)), W = static_cast<int>(x.dim(3));
  const bool include_pad =
      n.attr_i.count("count_include_pad") && n.attr_i.at("count_include_pad") != 0;
  const int OH = (H + p.pt + p.pb - p.kh) / p.sh + 1;
  const int OW = (W + p.pl + p.pr - p.kw) / p.sw + 1;
  if (OH <= 0 || OW <= 0)
    throw std::runtime_error(n.op + ": input smaller than kernel");
  Tensor y({N, C, OH, OW});
  for (int nn = 0; nn < N; ++nn) {
    for (int c = 0; c < C; ++c) {
      const float* xp = x.data() + ((static_cast<size_t>(nn) * C + c) * H) * W;
      float* yp = y.data() + ((static_cast<size_t>(nn) * C + c) * OH) * OW;
      for (int oh = 0; oh < OH; ++oh) {
        for (int ow = 0; ow < OW; ++ow) {
          const int ih0 = oh * p.sh - p.pt;
          const int iw0 = ow * p.sw - p.pl;
          float best = -std::numeric_limits<float>::infinity();
          double sum = 0.0;
          int count = 0;
          for (int kh = 0; kh < p.kh; ++kh) {
            const int ih = ih0 + kh;
            if (ih < 0 || ih >= H) continue;
            for (int kw = 0; kw < p.kw; ++kw) {
              const int iw = iw0 + kw;
              if (iw < 0 || iw >= W) continue;
              const float v = xp[static_cast<size_t>(ih) * W + iw];
              best = std::max(best, v);
              sum += v;
              ++count;
            }
          }
          if (is_max) {
            yp[static_cast<size_t>(oh) * OW + ow] = best;
          } else {
            const int denom = include_pad ? p.kh * p.kw : count;
            yp[static_cast<size_t>(oh) * OW + ow] =
                denom > 0 ? static_cast<float>(sum / denom) : 0.0f;
          }
        }
      }
    }
  }
  return y;
}

Tensor op_global_average_pool(const Tensor& x) {
  require_4d(x, "GlobalAveragePool");
  const int N = static_cast<int>(x.dim(0)), C = static_cast<int>(x.dim(1));
  const size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
  Tensor y({N, C, 1, 1});
  for (int nn = 0; nn < N; ++nn)
    for (int c = 0; c < C; ++c) {
      const float* xp = x.data() + (static_cast<size_t>(nn) * C + c) * plane;
      double sum = 0.0;
      for (size_t i = 0; i < plane; ++i) sum += xp[i];
      y.data()[static_cast<size_t>(nn) * C + c] =
          static_cast<float>(sum / static_cast<double>(plane));
    }
  return y;
}

Tensor op_gemm(const OnnxModel::Node& n, const Tensor& a, const Tensor& b,
               const Tensor* c) {
  const float alpha = n.attr_f.count("alpha") ? n.attr_f.at("alpha") : 1.0f;
  const float beta = n.attr_f.count("beta") ? n.attr_f.at("beta") : 1.0f;
  const bool tA = n.attr_i.count("transA") && n.attr_i.at("transA") != 0;
  const bool tB = n.attr_i.count("transB") && n.attr_i.at("transB") != 0;
  if (tA) throw std::runtime_error("Gemm: transA unsupported");
  if (a.rank() != 2 || b.rank() != 2)
    throw std::runtime_error("Gemm: expects 2-D operands");
  const int N = static_cast<int>(a.dim(0)), K = static_cast<int>(a.dim(1));
  const int M = static_cast<int>(tB ? b.dim(0) : b.dim(1));
  const int Kb = static_cast<int>(tB ? b.dim(1) : b.dim(0));
  if (K != Kb)
    throw std::runtime_error("Gemm: inner dim mismatch " + std::to_string(K) +
                             " vs " + std::to_string(Kb));
  Tensor y({N, M});
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < M; ++j) {
      double acc = 0.0;
      const float* ap = a.data() + static_cast<size_t>(i) * K;
      if (tB) {
        const float* bp = b.data() + static_cast<size_t>(j) * K;
        for (int k = 0; k < K; ++k) acc += static_cast<double>(ap[k]) * bp[k];
      } else {
        for (int k = 0; k < K; ++k)
          acc += static_cast<double>(ap[k]) * b.data()[static_cast<size_t>(k) * M + j];
      }
      float v = alpha * static_cast<float>(acc);
      if (c) {
        if (c->size() == static_cast<size_t>(M))
          v += beta * c->data()[j];
        else if (c->size() == static_cast<size_t>(N) * M)
          v += beta * c->data()[static_cast<size_t>(i) * M + j];
        else if (c->size() == 1)
          v += beta * c->data()[0];
        else
          throw std::runtime_error("Gemm: bias shape not broadcastable");
      }
      y.data()[static_cast<size_t>(i) * M + j] = v;
    }
  }
  return y;
}

Tensor op_add(const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) {
    Tensor y(a.dims());
    for (size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
    return y;
  }
  // per-channel bias broadcast onto NCHW
  if (a.rank() == 4 && (b.rank() == 1 || (b.rank() == 4 && b.dim(0) == 1 &&
                                          b.dim(2) == 1 && b.dim(3) == 1))) {
    const int C = static_cast<int>(a.dim(1));
    if (static_cast<int>(b.size()) != C)
      throw std::runtime_error("Add: broadcast shape mismatch");
    Tensor y(a.dims());
    const size_t plane = static_cast<size_t>(a.dim(2)) * a.dim(3);
    for (int nn = 0; nn < a.dim(0); ++nn)
      for (int c = 0; c < C; ++c) {
        const size_t base = (static_cast<size_t>(nn) * C + c) * plane;
        for (size_t i = 0; i < plane; ++i) y[base + i] = a[base + i] + b[c];
      }
    return y;
  }
  if (b.size() == 1) {
    Tensor y(a.dims());
    for (size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[0];
    return y;
  }
  throw std::runtime_error("Add: unsupported broadcast " +
                           Tensor::shape_str(a.dims()) + " + " +
                           Tensor::shape_str(b.dims()));
}

Tensor op_batch_norm(const OnnxModel::Node& n, const Tensor& x, const Tensor& scale,
                     const Tensor& bias, const Tensor& mean, const Tensor& var) {
  require_4d(x, "BatchNormalization");
  const float eps = n.attr_f.count("epsilon") ? n.attr_f.at("epsilon") : 1e-5f;
  const int C = static_cast<int>(x.dim(1));
  Tensor y(x.dims());
  const size_t plane = static_cast<size_t>(x.dim(2)) * x.dim(3);
  for (int nn = 0; nn < x.dim(0); ++nn)
    for (int c = 0; c < C; ++c) {
      const float s = scale[c] / std::sqrt(var[c] + eps);
      const float b = bias[c] - mean[c] * s;
      const size_t base = (static_cast<size_t>(nn) * C + c) * plane;
      for (size_t i = 0; i < plane; ++i) y[base + i] = x[base + i] * s + b;
    }
  return y;
}

Tensor op_flatten(const OnnxModel::Node& n, const Tensor& x) {
  int64_t axis = n.attr_i.count("axis") ? n.attr_i.at("axis") : 1;
  if (axis < 0) axis += static_cast<int64_t>(x.rank());
  int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < x.rank(); ++i)
    (static_cast<int64_t>(i) < axis ? outer : inner) *= x.dim(i);
  return Tensor({outer, inner}, x.values());
}

Tensor op_reshape(const Tensor& x, const std::vector<int64_t>& shape) {
  std::vector<int64_t> out(shape);
  int64_t known = 1;
  int infer = -1;
  for (size_t i = 0; i < out.size(); ++i) {
    if (out[i] == 0) out[i] = x.dim(i);
    if (out[i] == -1) {
      infer = static_cast<int>(i);
    } else {
      known *= out[i];
    }
  }
  if (infer >= 0) out[infer] = static_cast<int64_t>(x.size()) / known;
  return Tensor(out, x.values());
}

Tensor op_concat(const OnnxModel::Node& n, const std::vector<const Tensor*>& xs) {
  int64_t axis = n.attr_i.count("axis") ? n.attr_i.at("axis") : 1;
  if (axis < 0) axis += static_cast<int64_t>(xs.front()->rank());
  auto out_dims = xs.front()->dims();
  int64_t total = 0;
  for (const Tensor* t : xs) total += t->dim(static_cast<size_t>(axis));
  out_dims[static_cast<size_t>(axis)] = total;
  Tensor y(out_dims);
  size_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= static_cast<size_t>(out_dims[i]);
  for (size_t i = static_cast<size_t>(axis) + 1; i < out_dims.size(); ++i)
    inner *= static_cast<size_t>(out_dims[i]);
  size_t offset = 0;
  for (const Tensor* t : xs) {
    const size_t rows = static_cast<size_t>(t->dim(static_cast<size_t>(axis))) * inner;
    for (size_t o = 0; o < outer; ++o)
      std::memcpy(y.data() + o * static_cast<size_t>(total) * inner + offset,
                  t->data() + o * rows, rows * sizeof(float));
    offset += rows;
  }
  return y;
}

}  // namespace

OnnxModel OnnxModel::load(const std::string& path) {
  return parse(read_file(path));
}

OnnxModel OnnxModel::parse(const std::string& bytes) {
  onnx::ModelProto model;
  if (!model.ParseFromString(bytes))
    throw std::runtime_error("failed to parse ONNX model");
  const onnx::GraphProto& g = model.graph();

  OnnxModel m;
  for (const auto& init : g.initializer()) {
    if (init.data_type() == onnx::TensorProto::FLOAT)
      m.float_inits_.emplace(init.name(), tensor_from_proto_float(init));
    else if (init.data_type() == onnx::TensorProto::INT64)
      m.int64_inits_.emplace(init.name(), tensor_from_proto_int64(init));
    else
      throw std::runtime_error("initializer " + init.name() +
                               ": unsupported data type " +
                               std::to_string(init.data_type()));
  }

  // graph input = the one input that is not an initializer
  for (const auto& vi : g.input()) {
    if (m.float_inits_.count(vi.name()) || m.int64_inits_.count(vi.name())) continue;
    if (!m.input_name_.empty())
      throw std::runtime_error("graph has multiple non-initializer inputs");
    m.input_name_ = vi.name();
    for (const auto& d : vi.type().tensor_type().shape().dim())
      m.input_dims_.push_back(d.value_case() == onnx::TensorShapeProto::Dimension::kDimValue
                                  ? d.dim_value()
                                  : 0);
  }
  if (m.input_name_.empty()) throw std::runtime_error("graph has no input");
  if (g.output_size() != 1)
    throw std::runtime_error("graph must have exactly one output");
  m.output_name_ = g.output(0).name();
  for (const auto& d : g.output(0).type().tensor_type().shape().dim())
    m.output_dims_.push_back(d.value_case() == onnx::TensorShapeProto::Dimension::kDimValue
                                 ? d.dim_value()
                                 : 0);

  for (const auto& node : g.node()) {
    Node n;
    n.op = node.op_type();
    n.name = node.name();
    n.inputs.assign(node.input().begin(), node.input().end());
    n.outputs.assign(node.output().begin(), node.output().end());
    for (const auto& a : node.attribute()) {
      switch (a.type()) {
        case onnx::AttributeProto::INT: n.attr_i[a.name()] = a.i(); break;
        case onnx::AttributeProto::FLOAT: n.attr_f[a.name()] = a.f(); break;
        case onnx::AttributeProto::INTS:
          n.attr_ints[a.name()] = {a.ints().begin(), a.ints().end()};
          break;
        case onnx::AttributeProto::STRING: n.attr_s[a.name()] = a.s(); break;
        default:
          // tensor-valued attrs (Constant) handled at run time via the node
          break;
      }
    }
    m.nodes_.push_back(std::move(n));
  }
  return m;
}

Tensor OnnxModel::run(const Tensor& input) const {
  if (!input_dims_.empty()) {
    if (input.rank() != input_dims_.size())
      throw std::runtime_error("input rank mismatch: got " +
                               Tensor::shape_str(input.dims()) + ", declared " +
                               Tensor::shape_str(input_dims_));
    for (size_t i = 0; i < input_dims_.size(); ++i)
      if (input_dims_[i] > 0 && input_dims_[i] != input.dim(i))
        throw std::runtime_error("input dim " + std::to_string(i) +
                                 " mismatch: got " + Tensor::shape_str(input.dims()) +
                                 ", declared " + Tensor::shape_str(input_dims_));
  }

  std::unordered_map<std::string, Tensor> vals;
  vals.emplace(input_name_, input);

  auto get = [&](const std::string& name) -> const Tensor& {
    auto it = vals.find(name);
    if (it != vals.end()) return it->second;
    auto fi = float_inits_.find(name);
    if (fi != float_inits_.end()) return fi->second;
    throw std::runtime_error("value not available: " + name);
  };

  for (const Node& n : nodes_) {
    Tensor out;
    if (n.op == "Conv") {
      const Tensor* bias = n.inputs.size() > 2 ? &get(n.inputs[2]) : nullptr;
      out = op_conv(n, get(n.inputs[0]), get(n.inputs[1]), bias);
    } else if (n.op == "Relu") {
      out = get(n.inputs[0]);
      for (auto& v : out.values()) v = v > 0.0f ? v : 0.0f;
    } else if (n.op == "MaxPool") {
      out = op_pool(n, get(n.inputs[0]), /*is_max=*/true);
    } else if (n.op == "AveragePool") {
      out = op_pool(n, get(n.inputs[0]), /*is_max=*/false);
    } else if (n.op == "GlobalAveragePool") {
      out = op_global_average_pool(get(n.inputs[0]));
    } else if (n.op == "Gemm") {
      const Tensor* c = n.inputs.size() > 2 ? &get(n.inputs[2]) : nullptr;
      out = op_gemm(n, get(n.inputs[0]), get(n.inputs[1]), c);
    } else if (n.op == "MatMul") {
      out = op_gemm(n, get(n.inputs[0]), get(n.inputs[1]), nullptr);
    } else if (n.op == "Add") {
      out = op_add(get(n.inputs[0]), get(n.inputs[1]));
    } else if (n.op == "BatchNormalization") {
      out = op_batch_norm(n, get(n.inputs[0]), get(n.inputs[1]), get(n.inputs[2]),
                          get(n.inputs[3]), get(n.inputs[4]));
    } else if (n.op == "Flatten") {
      out = op_flatten(n, get(n.inputs[0]));
    } else if (n.op == "Reshape") {
      auto it = int64_inits_.find(n.inputs.at(1));
      if (it == int64_inits_.end())
        throw std::runtime_error("Reshape: shape must be an int64 initializer");
      out = op_reshape(get(n.inputs[0]), it->second);
    } else if (n.op == "Concat") {
      std::vector<const Tensor*> xs;
      for (const auto& in : n.inputs) xs.push_back(&get(in));
      out = op_concat(n, xs);
    } else if (n.op == "Identity" || n.op == "Dropout") {
      out = get(n.inputs[0]);
    } else {
      throw std::runtime_error("unsupported ONNX op: " + n.op);
    }
    if (n.outputs.empty()) throw std::runtime_error(n.op + ": node has no output");
    vals.insert_or_assign(n.outputs[0], std::move(out));
  }

  auto it = vals.find(output_name_);
  if (it == vals.end())
    throw std::runtime_error("graph output never produced: " + output_name_);
  for (float v : it->second.values())
    if (!std::isfinite(v))
      throw std::runtime_error("graph produced non-finite output values");
  return std::move(it->second);
}

}  // namespace conceptscope
