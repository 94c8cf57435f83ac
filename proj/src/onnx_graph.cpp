// Copyright 2026 The EgoPose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "egopose/onnx_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "egopose/errors.hpp"
#include "onnx.pb.h"

namespace egopose::onnx {

namespace {

using Shape = std::vector<std::int64_t>;

[[noreturn]] void fail(const std::string& msg) { throw BackendError("onnx: " + msg); }

struct Attribute {
  float f = 0.0f;
  std::int64_t i = 0;
  std::string s;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;
  std::optional<Tensor> t;
};

struct Node {
  std::string op;
  std::string name;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::unordered_map<std::string, Attribute> attrs;

  bool has(const std::string& key) const { return attrs.count(key) != 0; }
  std::int64_t int_attr(const std::string& key, std::int64_t fallback) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? fallback : it->second.i;
  }
  float float_attr(const std::string& key, float fallback) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? fallback : it->second.f;
  }
  std::string string_attr(const std::string& key, const std::string& fallback) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? fallback : it->second.s;
  }
  std::vector<std::int64_t> ints_attr(const std::string& key) const {
    auto it = attrs.find(key);
    return it == attrs.end() ? std::vector<std::int64_t>{} : it->second.ints;
  }
  std::string where() const { return op + (name.empty() ? "" : " '" + name + "'"); }
};

template <typename T>
std::vector<T> from_raw(const std::string& raw, std::size_t n, const std::string& what) {
  if (raw.size() != n * sizeof(T)) fail("tensor '" + what + "' raw_data has the wrong length");
  std::vector<T> out(n);
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

Tensor convert_tensor(const ::onnx::TensorProto& tp) {
  if (tp.data_location() == ::onnx::TensorProto::EXTERNAL) fail("external tensor data is not supported");
  Shape shape(tp.dims().begin(), tp.dims().end());
  const std::size_t n = element_count(shape);
  const bool raw = tp.has_raw_data();
  switch (tp.data_type()) {
    case ::onnx::TensorProto::FLOAT: {
      auto v = raw ? from_raw<float>(tp.raw_data(), n, tp.name())
                   : std::vector<float>(tp.float_data().begin(), tp.float_data().end());
      if (v.size() != n) fail("tensor '" + tp.name() + "' has " + std::to_string(v.size()) + " values for shape " +
                              shape_string(shape));
      return Tensor::floats(shape, std::move(v));
    }
    case ::onnx::TensorProto::DOUBLE: {
      auto d = raw ? from_raw<double>(tp.raw_data(), n, tp.name())
                   : std::vector<double>(tp.double_data().begin(), tp.double_data().end());
      if (d.size() != n) fail("tensor '" + tp.name() + "' value count mismatch");
      return Tensor::floats(shape, std::vector<float>(d.begin(), d.end()));
    }
    case ::onnx::TensorProto::INT64: {
      auto v = raw ? from_raw<std::int64_t>(tp.raw_data(), n, tp.name())
                   : std::vector<std::int64_t>(tp.int64_data().begin(), tp.int64_data().end());
      if (v.size() != n) fail("tensor '" + tp.name() + "' value count mismatch");
      return Tensor::int64s(shape, std::move(v));
    }
    case ::onnx::TensorProto::INT32: {
      auto v = raw ? from_raw<std::int32_t>(tp.raw_data(), n, tp.name())
                   : std::vector<std::int32_t>(tp.int32_data().begin(), tp.int32_data().end());
      if (v.size() != n) fail("tensor '" + tp.name() + "' value count mismatch");
      return Tensor::int64s(shape, std::vector<std::int64_t>(v.begin(), v.end()));
    }
    default:
      fail("tensor '" + tp.name() + "' has unsupported data type " + std::to_string(tp.data_type()));
  }
}

ValueInfo convert_value_info(const ::onnx::ValueInfoProto& vi) {
  ValueInfo out;
  out.name = vi.name();
  if (vi.has_type() && vi.type().has_tensor_type() && vi.type().tensor_type().has_shape()) {
    for (const auto& d : vi.type().tensor_type().shape().dim())
      out.shape.push_back(d.has_dim_value() ? d.dim_value() : -1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operator helpers

std::size_t norm_axis(std::int64_t axis, std::size_t rank, const Node& node) {
  const auto r = static_cast<std::int64_t>(rank);
  if (axis < -r || axis >= r) fail(node.where() + ": axis " + std::to_string(axis) + " out of range");
  return static_cast<std::size_t>(axis < 0 ? axis + r : axis);
}

Shape strides_of(const Shape& shape) {
  Shape s(shape.size(), 1);
  for (std::size_t k = shape.size(); k-- > 1;) s[k - 1] = s[k] * shape[k];
  return s;
}

Shape broadcast_shape(const Shape& a, const Shape& b, const Node& node) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    const std::int64_t da = k < rank - a.size() ? 1 : a[k - (rank - a.size())];
    const std::int64_t db = k < rank - b.size() ? 1 : b[k - (rank - b.size())];
    if (da != db && da != 1 && db != 1)
      fail(node.where() + ": cannot broadcast " + shape_string(a) + " with " + shape_string(b));
    out[k] = da == 1 ? db : da;
  }
  return out;
}

// Strides of `in` viewed with the rank of `out`, zero on broadcast axes.
Shape broadcast_strides(const Shape& in, const Shape& out) {
  Shape s(out.size(), 0);
  const Shape own = strides_of(in);
  const std::size_t off = out.size() - in.size();
  for (std::size_t k = 0; k < in.size(); ++k) s[k + off] = in[k] == 1 ? 0 : own[k];
  return s;
}

template <typename T, typename Op>
std::vector<T> broadcast_apply(const std::vector<T>& a, const Shape& sa, const std::vector<T>& b, const Shape& sb,
                               const Shape& out_shape, Op op) {
  const std::size_t n = element_count(out_shape);
  std::vector<T> out(n);
  if (sa == out_shape && sb == out_shape) {
    for (std::size_t k = 0; k < n; ++k) out[k] = op(a[k], b[k]);
    return out;
  }
  const Shape stra = broadcast_strides(sa, out_shape);
  const Shape strb = broadcast_strides(sb, out_shape);
  const std::size_t rank = out_shape.size();
  Shape idx(rank, 0);
  std::int64_t ia = 0;
  std::int64_t ib = 0;
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = op(a[static_cast<std::size_t>(ia)], b[static_cast<std::size_t>(ib)]);
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      ia += stra[d];
      ib += strb[d];
      if (idx[d] < out_shape[d]) break;
      ia -= stra[d] * idx[d];
      ib -= strb[d] * idx[d];
      idx[d] = 0;
    }
  }
  return out;
}

template <typename Fn>
Tensor binary(const Node& node, const Tensor& a, const Tensor& b, Fn fn) {
  if (a.dtype != b.dtype) fail(node.where() + ": mixed input types");
  const Shape out_shape = broadcast_shape(a.shape, b.shape, node);
  if (a.dtype == DType::Float) return Tensor::floats(out_shape, broadcast_apply(a.f, a.shape, b.f, b.shape, out_shape, fn));
  return Tensor::int64s(out_shape, broadcast_apply(a.i, a.shape, b.i, b.shape, out_shape, fn));
}

const Tensor& need_float(const Tensor& t, const Node& node) {
  if (t.dtype != DType::Float) fail(node.where() + ": expected a float tensor");
  return t;
}

Tensor op_conv(const Node& node, const Tensor& x, const Tensor& w, const Tensor* bias) {
  need_float(x, node);
  need_float(w, node);
  if (x.shape.size() != 4 || w.shape.size() != 4) fail(node.where() + ": only 2D convolution is supported");
  const std::int64_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const std::int64_t m = w.shape[0], cg = w.shape[1], kh = w.shape[2], kw = w.shape[3];
  const std::int64_t group = node.int_attr("group", 1);
  if (group <= 0 || c != cg * group || m % group != 0)
    fail(node.where() + ": channel/group mismatch, input " + x.shape_string() + " weight " + w.shape_string());
  Shape strides = node.ints_attr("strides");
  Shape dil = node.ints_attr("dilations");
  Shape pads = node.ints_attr("pads");
  if (strides.empty()) strides = {1, 1};
  if (dil.empty()) dil = {1, 1};
  if (pads.empty()) pads = {0, 0, 0, 0};
  if (strides.size() != 2 || dil.size() != 2 || pads.size() != 4) fail(node.where() + ": bad conv attributes");
  const std::string auto_pad = node.string_attr("auto_pad", "NOTSET");
  const std::int64_t ekh = (kh - 1) * dil[0] + 1;
  const std::int64_t ekw = (kw - 1) * dil[1] + 1;
  if (auto_pad == "SAME_UPPER" || auto_pad == "SAME_LOWER") {
    const std::int64_t oh = (h + strides[0] - 1) / strides[0];
    const std::int64_t ow = (wd + strides[1] - 1) / strides[1];
    const std::int64_t ph = std::max<std::int64_t>(0, (oh - 1) * strides[0] + ekh - h);
    const std::int64_t pw = std::max<std::int64_t>(0, (ow - 1) * strides[1] + ekw - wd);
    const bool upper = auto_pad == "SAME_UPPER";
    pads = {upper ? ph / 2 : ph - ph / 2, upper ? pw / 2 : pw - pw / 2, upper ? ph - ph / 2 : ph / 2,
            upper ? pw - pw / 2 : pw / 2};
  } else if (auto_pad == "VALID") {
    pads = {0, 0, 0, 0};
  } else if (auto_pad != "NOTSET") {
    fail(node.where() + ": unsupported auto_pad " + auto_pad);
  }
  const std::int64_t oh = (h + pads[0] + pads[2] - ekh) / strides[0] + 1;
  const std::int64_t ow = (wd + pads[1] + pads[3] - ekw) / strides[1] + 1;
  if (oh <= 0 || ow <= 0) fail(node.where() + ": kernel larger than padded input");
  if (bias && (bias->dtype != DType::Float || bias->numel() != static_cast<std::size_t>(m)))
    fail(node.where() + ": bias must have one value per output channel");

  Tensor y = Tensor::floats({n, m, oh, ow}, std::vector<float>(static_cast<std::size_t>(n * m * oh * ow), 0.0f));
  const std::int64_t mg = m / group;
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t oc = 0; oc < m; ++oc) {
      float* out = y.f.data() + ((b * m + oc) * oh) * ow;
      if (bias) std::fill(out, out + oh * ow, bias->f[static_cast<std::size_t>(oc)]);
      const std::int64_t g = oc / mg;
      for (std::int64_t ic = 0; ic < cg; ++ic) {
        const float* in = x.f.data() + ((b * c + g * cg + ic) * h) * wd;
        for (std::int64_t ky = 0; ky < kh; ++ky) {
          for (std::int64_t kx = 0; kx < kw; ++kx) {
            const float wv = w.f[static_cast<std::size_t>(((oc * cg + ic) * kh + ky) * kw + kx)];
            if (wv == 0.0f) continue;
            for (std::int64_t oy = 0; oy < oh; ++oy) {
              const std::int64_t iy = oy * strides[0] - pads[0] + ky * dil[0];
              if (iy < 0 || iy >= h) continue;
              const float* row = in + iy * wd;
              float* orow = out + oy * ow;
              for (std::int64_t ox = 0; ox < ow; ++ox) {
                const std::int64_t ix = ox * strides[1] - pads[1] + kx * dil[1];
                if (ix >= 0 && ix < wd) orow[ox] += wv * row[ix];
              }
            }
          }
        }
      }
    }
  }
  return y;
}

Tensor op_gemm(const Node& node, const Tensor& a, const Tensor& b, const Tensor* c) {
  need_float(a, node);
  need_float(b, node);
  if (a.shape.size() != 2 || b.shape.size() != 2) fail(node.where() + ": Gemm expects 2D inputs");
  const bool ta = node.int_attr("transA", 0) != 0;
  const bool tb = node.int_attr("transB", 0) != 0;
  const float alpha = node.float_attr("alpha", 1.0f);
  const float beta = node.float_attr("beta", 1.0f);
  const std::int64_t m = ta ? a.shape[1] : a.shape[0];
  const std::int64_t k = ta ? a.shape[0] : a.shape[1];
  const std::int64_t kb = tb ? b.shape[1] : b.shape[0];
  const std::int64_t n = tb ? b.shape[0] : b.shape[1];
  if (k != kb) fail(node.where() + ": inner dimensions differ, " + a.shape_string() + " x " + b.shape_string());
  std::vector<float> y(static_cast<std::size_t>(m * n), 0.0f);
  for (std::int64_t r = 0; r < m; ++r)
    for (std::int64_t q = 0; q < k; ++q) {
      const float av = ta ? a.f[static_cast<std::size_t>(q * m + r)] : a.f[static_cast<std::size_t>(r * k + q)];
      if (av == 0.0f) continue;
      for (std::int64_t col = 0; col < n; ++col) {
        const float bv = tb ? b.f[static_cast<std::size_t>(col * k + q)] : b.f[static_cast<std::size_t>(q * n + col)];
        y[static_cast<std::size_t>(r * n + col)] += av * bv;
      }
    }
  for (auto& v : y) v *= alpha;
  Tensor out = Tensor::floats({m, n}, std::move(y));
  if (c) {
    need_float(*c, node);
    Tensor scaled = *c;
    for (auto& v : scaled.f) v *= beta;
    out = binary(node, out, scaled, std::plus<float>());
    if (out.shape != Shape{m, n}) fail(node.where() + ": C does not broadcast to the output");
  }
  return out;
}

Tensor op_matmul(const Node& node, const Tensor& a, const Tensor& b) {
  need_float(a, node);
  need_float(b, node);
  if (a.shape.size() < 2 || b.shape.size() < 2) fail(node.where() + ": MatMul inputs must be at least 2D");
  const std::int64_t m = a.shape[a.shape.size() - 2];
  const std::int64_t k = a.shape.back();
  const std::int64_t kb = b.shape[b.shape.size() - 2];
  const std::int64_t n = b.shape.back();
  if (k != kb) fail(node.where() + ": inner dimensions differ, " + a.shape_string() + " x " + b.shape_string());
  Shape batch(a.shape.begin(), a.shape.end() - 2);
  const bool shared_b = b.shape.size() == 2;
  if (!shared_b && Shape(b.shape.begin(), b.shape.end() - 2) != batch)
    fail(node.where() + ": batched MatMul needs identical batch dimensions");
  const std::size_t batches = element_count(batch);
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);
  std::vector<float> y(batches * static_cast<std::size_t>(m * n), 0.0f);
  for (std::size_t bi = 0; bi < batches; ++bi) {
    const float* pa = a.f.data() + bi * static_cast<std::size_t>(m * k);
    const float* pb = b.f.data() + (shared_b ? 0 : bi * static_cast<std::size_t>(k * n));
    float* py = y.data() + bi * static_cast<std::size_t>(m * n);
    for (std::int64_t r = 0; r < m; ++r)
      for (std::int64_t q = 0; q < k; ++q) {
        const float av = pa[r * k + q];
        if (av == 0.0f) continue;
        for (std::int64_t col = 0; col < n; ++col) py[r * n + col] += av * pb[q * n + col];
      }
  }
  return Tensor::floats(out_shape, std::move(y));
}

Tensor op_reshape(const Node& node, const Tensor& x, const Tensor& shape_t) {
  if (shape_t.dtype != DType::Int64) fail(node.where() + ": shape input must be int64");
  const bool allowzero = node.int_attr("allowzero", 0) != 0;
  Shape target = shape_t.i;
  std::int64_t known = 1;
  std::optional<std::size_t> infer;
  for (std::size_t k = 0; k < target.size(); ++k) {
    if (target[k] == 0 && !allowzero) {
      if (k >= x.shape.size()) fail(node.where() + ": zero dimension has no input counterpart");
      target[k] = x.shape[k];
    }
    if (target[k] == -1) {
      if (infer) fail(node.where() + ": more than one -1 in target shape");
      infer = k;
    } else {
      if (target[k] < 0) fail(node.where() + ": negative target dimension");
      known *= target[k];
    }
  }
  const auto total = static_cast<std::int64_t>(x.numel());
  if (infer) {
    if (known == 0 || total % known != 0)
      fail(node.where() + ": cannot infer dimension reshaping " + x.shape_string() + " to " + shape_t.shape_string());
    target[*infer] = total / known;
  }
  if (static_cast<std::int64_t>(element_count(target)) != total)
    fail(node.where() + ": cannot reshape " + x.shape_string() + " to " + shape_string(target));
  Tensor y = x;
  y.shape = target;
  return y;
}

Tensor op_transpose(const Node& node, const Tensor& x) {
  const std::size_t rank = x.shape.size();
  Shape perm = node.ints_attr("perm");
  if (perm.empty()) {
    perm.resize(rank);
    for (std::size_t k = 0; k < rank; ++k) perm[k] = static_cast<std::int64_t>(rank - 1 - k);
  }
  if (perm.size() != rank) fail(node.where() + ": perm rank mismatch");
  Shape out_shape(rank);
  for (std::size_t k = 0; k < rank; ++k) out_shape[k] = x.shape[norm_axis(perm[k], rank, node)];
  const Shape in_strides = strides_of(x.shape);
  Shape src_strides(rank);
  for (std::size_t k = 0; k < rank; ++k) src_strides[k] = in_strides[norm_axis(perm[k], rank, node)];

  const std::size_t n = x.numel();
  std::vector<std::size_t> gather(n);
  Shape idx(rank, 0);
  std::int64_t src = 0;
  for (std::size_t k = 0; k < n; ++k) {
    gather[k] = static_cast<std::size_t>(src);
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      src += src_strides[d];
      if (idx[d] < out_shape[d]) break;
      src -= src_strides[d] * idx[d];
      idx[d] = 0;
    }
  }
  Tensor y;
  y.dtype = x.dtype;
  y.shape = out_shape;
  if (x.dtype == DType::Float) {
    y.f.resize(n);
    for (std::size_t k = 0; k < n; ++k) y.f[k] = x.f[gather[k]];
  } else {
    y.i.resize(n);
    for (std::size_t k = 0; k < n; ++k) y.i[k] = x.i[gather[k]];
  }
  return y;
}

Shape axes_from(const Node& node, const std::vector<const Tensor*>& in) {
  if (in.size() > 1 && in[1]) {
    if (in[1]->dtype != DType::Int64) fail(node.where() + ": axes must be int64");
    return in[1]->i;
  }
  return node.ints_attr("axes");
}

Tensor op_squeeze(const Node& node, const Tensor& x, const Shape& axes_in) {
  Shape out;
  std::vector<bool> drop(x.shape.size(), false);
  if (axes_in.empty()) {
    for (std::size_t k = 0; k < x.shape.size(); ++k) drop[k] = x.shape[k] == 1;
  } else {
    for (auto a : axes_in) {
      const auto k = norm_axis(a, x.shape.size(), node);
      if (x.shape[k] != 1) fail(node.where() + ": cannot squeeze a dimension of size " + std::to_string(x.shape[k]));
      drop[k] = true;
    }
  }
  for (std::size_t k = 0; k < x.shape.size(); ++k)
    if (!drop[k]) out.push_back(x.shape[k]);
  Tensor y = x;
  y.shape = out;
  return y;
}

Tensor op_unsqueeze(const Node& node, const Tensor& x, const Shape& axes_in) {
  const std::size_t rank = x.shape.size() + axes_in.size();
  std::vector<bool> inserted(rank, false);
  for (auto a : axes_in) inserted[norm_axis(a, rank, node)] = true;
  Shape out;
  std::size_t src = 0;
  for (std::size_t k = 0; k < rank; ++k) out.push_back(inserted[k] ? 1 : x.shape[src++]);
  Tensor y = x;
  y.shape = out;
  return y;
}

Tensor op_concat(const Node& node, const std::vector<const Tensor*>& in) {
  if (in.empty()) fail(node.where() + ": no inputs");
  const Tensor& first = *in.front();
  const std::size_t axis = norm_axis(node.int_attr("axis", 0), first.shape.size(), node);
  Shape out_shape = first.shape;
  out_shape[axis] = 0;
  for (const Tensor* t : in) {
    if (t->dtype != first.dtype || t->shape.size() != first.shape.size())
      fail(node.where() + ": inputs differ in type or rank");
    for (std::size_t k = 0; k < first.shape.size(); ++k)
      if (k != axis && t->shape[k] != first.shape[k]) fail(node.where() + ": inputs differ off the concat axis");
    out_shape[axis] += t->shape[axis];
  }
  const std::size_t outer = element_count(Shape(first.shape.begin(), first.shape.begin() + static_cast<std::ptrdiff_t>(axis)));
  const std::size_t inner = element_count(Shape(first.shape.begin() + static_cast<std::ptrdiff_t>(axis) + 1, first.shape.end()));
  Tensor y;
  y.dtype = first.dtype;
  y.shape = out_shape;
  for (std::size_t o = 0; o < outer; ++o) {
    for (const Tensor* t : in) {
      const std::size_t block = static_cast<std::size_t>(t->shape[axis]) * inner;
      if (first.dtype == DType::Float) {
        y.f.insert(y.f.end(), t->f.begin() + static_cast<std::ptrdiff_t>(o * block),
                   t->f.begin() + static_cast<std::ptrdiff_t>((o + 1) * block));
      } else {
        y.i.insert(y.i.end(), t->i.begin() + static_cast<std::ptrdiff_t>(o * block),
                   t->i.begin() + static_cast<std::ptrdiff_t>((o + 1) * block));
      }
    }
  }
  return y;
}

Tensor op_constant(const Node& node) {
  if (auto it = node.attrs.find("value"); it != node.attrs.end() && it->second.t) return *it->second.t;
  if (auto it = node.attrs.find("value_float"); it != node.attrs.end()) return Tensor::floats({}, {it->second.f});
  if (auto it = node.attrs.find("value_floats"); it != node.attrs.end())
    return Tensor::floats({static_cast<std::int64_t>(it->second.floats.size())}, it->second.floats);
  if (auto it = node.attrs.find("value_int"); it != node.attrs.end()) return Tensor::int64s({}, {it->second.i});
  if (auto it = node.attrs.find("value_ints"); it != node.attrs.end())
    return Tensor::int64s({static_cast<std::int64_t>(it->second.ints.size())}, it->second.ints);
  fail(node.where() + ": unsupported constant attribute");
}

Tensor op_global_average_pool(const Node& node, const Tensor& x) {
  need_float(x, node);
  if (x.shape.size() < 3) fail(node.where() + ": expects N x C x spatial input");
  const std::size_t nc = static_cast<std::size_t>(x.shape[0] * x.shape[1]);
  const std::size_t spatial = x.numel() / std::max<std::size_t>(nc, 1);
  Shape out_shape = {x.shape[0], x.shape[1]};
  out_shape.resize(x.shape.size(), 1);
  std::vector<float> y(nc);
  for (std::size_t k = 0; k < nc; ++k) {
    double acc = 0.0;
    for (std::size_t s = 0; s < spatial; ++s) acc += x.f[k * spatial + s];
    y[k] = static_cast<float>(acc / static_cast<double>(spatial));
  }
  return Tensor::floats(out_shape, std::move(y));
}

const std::vector<std::string> kSupportedOps = {
    "Add",     "Concat",    "Constant", "Conv",  "Div",     "Flatten", "Gemm",    "GlobalAveragePool",
    "Identity", "MatMul",   "Mul",      "Relu",  "Reshape", "Sigmoid", "Squeeze", "Sub",
    "Transpose", "Unsqueeze"};

}  // namespace

// ---------------------------------------------------------------------------

Tensor Tensor::floats(std::vector<std::int64_t> shape, std::vector<float> values) {
  Tensor t;
  t.dtype = DType::Float;
  t.shape = std::move(shape);
  t.f = std::move(values);
  return t;
}

Tensor Tensor::int64s(std::vector<std::int64_t> shape, std::vector<std::int64_t> values) {
  Tensor t;
  t.dtype = DType::Int64;
  t.shape = std::move(shape);
  t.i = std::move(values);
  return t;
}

std::size_t Tensor::numel() const { return dtype == DType::Float ? f.size() : i.size(); }
std::string Tensor::shape_string() const { return onnx::shape_string(shape); }

std::size_t element_count(std::span<const std::int64_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d < 0) fail("negative dimension in " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(std::span<const std::int64_t> shape) {
  std::string s = "(";
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (k) s += ",";
    s += shape[k] < 0 ? "?" : std::to_string(shape[k]);
  }
  return s + ")";
}

struct Graph::Impl {
  std::vector<Node> nodes;
  std::map<std::string, Tensor> initializers;
  std::vector<ValueInfo> inputs;
  std::vector<ValueInfo> outputs;
};

Graph::Graph(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Graph::Graph(Graph&&) noexcept = default;
Graph& Graph::operator=(Graph&&) noexcept = default;
Graph::~Graph() = default;

const std::vector<ValueInfo>& Graph::inputs() const { return impl_->inputs; }
const std::vector<ValueInfo>& Graph::outputs() const { return impl_->outputs; }
const std::vector<std::string>& Graph::supported_ops() { return kSupportedOps; }

Graph Graph::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError("onnx: cannot open graph file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse(bytes);
  } catch (const BackendError& e) {
    throw BackendError(std::string(e.what()) + " (" + path.string() + ")");
  }
}

Graph Graph::parse(std::span<const std::uint8_t> bytes) {
  ::onnx::ModelProto model;
  if (bytes.empty() || !model.ParseFromArray(bytes.data(), static_cast<int>(bytes.size())))
    fail("not a serialized ModelProto");
  if (!model.has_graph()) fail("model has no graph");
  const ::onnx::GraphProto& g = model.graph();

  auto impl = std::make_unique<Impl>();
  for (const auto& init : g.initializer()) impl->initializers.emplace(init.name(), convert_tensor(init));
  for (const auto& vi : g.input())
    if (!impl->initializers.count(vi.name())) impl->inputs.push_back(convert_value_info(vi));
  for (const auto& vi : g.output()) impl->outputs.push_back(convert_value_info(vi));

  for (const auto& np : g.node()) {
    if (!np.domain().empty() && np.domain() != "ai.onnx") fail("operator domain '" + np.domain() + "' not supported");
    if (std::find(kSupportedOps.begin(), kSupportedOps.end(), np.op_type()) == kSupportedOps.end())
      fail("operator " + np.op_type() + " is not supported");
    Node node;
    node.op = np.op_type();
    node.name = np.name();
    node.inputs.assign(np.input().begin(), np.input().end());
    node.outputs.assign(np.output().begin(), np.output().end());
    for (const auto& ap : np.attribute()) {
      Attribute a;
      a.f = ap.f();
      a.i = ap.i();
      a.s = ap.s();
      a.floats.assign(ap.floats().begin(), ap.floats().end());
      a.ints.assign(ap.ints().begin(), ap.ints().end());
      if (ap.has_t()) a.t = convert_tensor(ap.t());
      node.attrs.emplace(ap.name(), std::move(a));
    }
    impl->nodes.push_back(std::move(node));
  }
  if (impl->outputs.empty()) fail("graph declares no outputs");
  return Graph(std::move(impl));
}

std::map<std::string, Tensor> Graph::run(const std::map<std::string, Tensor>& feeds) const {
  std::unordered_map<std::string, Tensor> values;
  for (const auto& [name, t] : impl_->initializers) values.emplace(name, t);
  for (const auto& vi : impl_->inputs) {
    auto it = feeds.find(vi.name);
    if (it == feeds.end()) fail("missing graph input '" + vi.name + "'");
    const Tensor& t = it->second;
    bool ok = vi.shape.empty() || vi.shape.size() == t.shape.size();
    for (std::size_t k = 0; ok && k < vi.shape.size(); ++k) ok = vi.shape[k] < 0 || vi.shape[k] == t.shape[k];
    if (!ok)
      fail("input '" + vi.name + "' declared " + shape_string(vi.shape) + " but fed " + t.shape_string());
    if (t.numel() != element_count(t.shape)) fail("input '" + vi.name + "' value count does not match its shape");
    values[vi.name] = t;
  }

  for (const Node& node : impl_->nodes) {
    std::vector<const Tensor*> in;
    for (const auto& name : node.inputs) {
      if (name.empty()) {
        in.push_back(nullptr);
        continue;
      }
      auto it = values.find(name);
      if (it == values.end()) fail(node.where() + ": input '" + name + "' is not available");
      in.push_back(&it->second);
    }
    auto arg = [&](std::size_t k) -> const Tensor& {
      if (k >= in.size() || !in[k]) fail(node.where() + ": missing input " + std::to_string(k));
      return *in[k];
    };
    auto opt = [&](std::size_t k) -> const Tensor* { return k < in.size() ? in[k] : nullptr; };

    Tensor out;
    const std::string& op = node.op;
    if (op == "Add") {
      out = binary(node, arg(0), arg(1), [](auto a, auto b) { return a + b; });
    } else if (op == "Sub") {
      out = binary(node, arg(0), arg(1), [](auto a, auto b) { return a - b; });
    } else if (op == "Mul") {
      out = binary(node, arg(0), arg(1), [](auto a, auto b) { return a * b; });
    } else if (op == "Div") {
      if (arg(0).dtype == DType::Int64) {
        out = binary(node, arg(0), arg(1), [&](auto a, auto b) {
          if (b == 0) fail(node.where() + ": integer division by zero");
          return a / b;
        });
      } else {
        out = binary(node, arg(0), arg(1), [](auto a, auto b) { return a / b; });
      }
    } else if (op == "Relu") {
      out = need_float(arg(0), node);
      for (auto& v : out.f) v = std::max(v, 0.0f);
    } else if (op == "Sigmoid") {
      out = need_float(arg(0), node);
      for (auto& v : out.f) v = 1.0f / (1.0f + std::exp(-v));
    } else if (op == "Identity") {
      out = arg(0);
    } else if (op == "Constant") {
      out = op_constant(node);
    } else if (op == "Conv") {
      out = op_conv(node, arg(0), arg(1), opt(2));
    } else if (op == "Gemm") {
      out = op_gemm(node, arg(0), arg(1), opt(2));
    } else if (op == "MatMul") {
      out = op_matmul(node, arg(0), arg(1));
    } else if (op == "Reshape") {
      out = op_reshape(node, arg(0), arg(1));
    } else if (op == "Flatten") {
      const Tensor& x = arg(0);
      const auto rank = x.shape.size();
      std::int64_t axis = node.int_attr("axis", 1);
      if (axis < 0) axis += static_cast<std::int64_t>(rank);
      if (axis < 0 || axis > static_cast<std::int64_t>(rank)) fail(node.where() + ": axis out of range");
      const auto lead = element_count(Shape(x.shape.begin(), x.shape.begin() + axis));
      out = x;
      out.shape = {static_cast<std::int64_t>(lead), static_cast<std::int64_t>(x.numel() / std::max<std::size_t>(lead, 1))};
    } else if (op == "Transpose") {
      out = op_transpose(node, arg(0));
    } else if (op == "Squeeze") {
      out = op_squeeze(node, arg(0), axes_from(node, in));
    } else if (op == "Unsqueeze") {
      out = op_unsqueeze(node, arg(0), axes_from(node, in));
    } else if (op == "Concat") {
      for (std::size_t k = 0; k < in.size(); ++k) arg(k);
      out = op_concat(node, in);
    } else if (op == "GlobalAveragePool") {
      out = op_global_average_pool(node, arg(0));
    } else {
      fail("operator " + op + " is not supported");
    }
    if (node.outputs.empty()) fail(node.where() + ": node has no outputs");
    values[node.outputs.front()] = std::move(out);
  }

  std::map<std::string, Tensor> result;
  for (const auto& vi : impl_->outputs) {
    auto it = values.find(vi.name);
    if (it == values.end()) fail("graph output '" + vi.name + "' was never produced");
    result.emplace(vi.name, it->second);
  }
  return result;
}

}  // namespace egopose::onnx
