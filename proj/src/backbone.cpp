// Copyright 2026 The Pmet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pmet/backbone.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace pmet::backbone {

namespace {

constexpr char kMagic[5] = {'P', 'M', 'B', 'W', '1'};
constexpr uint16_t kVersion = 1;

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(uint16_t v) {
    u8(v & 0xff);
    u8(v >> 8);
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) u8((v >> (8 * i)) & 0xff);
  }
  void f32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void raw(const char* p, size_t n) { buf_.insert(buf_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  ByteReader(std::vector<char> buf, const std::string& path)
      : buf_(std::move(buf)), path_(path) {}

  uint8_t u8() {
    need(1);
    return static_cast<uint8_t>(buf_[pos_++]);
  }
  uint16_t u16() { return u8() | (static_cast<uint16_t>(u8()) << 8); }
  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  size_t pos() const { return pos_; }
  size_t size() const { return buf_.size(); }
  const char* data() const { return buf_.data(); }
  void need(size_t n) const {
    if (pos_ + n > buf_.size())
      throw std::runtime_error("load_weights: truncated file " + path_);
  }

 private:
  std::vector<char> buf_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

int BackboneWeights::input_channels() const {
  for (const Layer& l : layers)
    if (l.kind == Layer::Kind::kConv) return l.in_c;
  return 0;
}

std::vector<int> BackboneWeights::stage_channels() const {
  std::vector<int> out;
  int c = input_channels();
  std::vector<int> per_layer;
  for (const Layer& l : layers) {
    if (l.kind == Layer::Kind::kConv) c = l.out_c;
    per_layer.push_back(c);
  }
  for (uint32_t t : stage_taps) out.push_back(per_layer.at(t));
  return out;
}

void BackboneWeights::validate() const {
  if (layers.empty()) throw std::runtime_error("backbone: no layers");
  if (stage_taps.empty()) throw std::runtime_error("backbone: no exported stages");
  int c = input_channels();
  if (c <= 0) throw std::runtime_error("backbone: first conv layer missing");
  if (norm_mean.size() != static_cast<size_t>(c) || norm_std.size() != norm_mean.size())
    throw std::runtime_error("backbone: normalization constant count mismatch");
  for (double s : norm_std)
    if (!(s > 0)) throw std::runtime_error("backbone: non-positive std");
  int cur = c;
  for (const Layer& l : layers) {
    if (l.kind == Layer::Kind::kConv) {
      if (l.in_c != cur)
        throw std::runtime_error("backbone: layer shape chain mismatch");
      if (l.weights.size() != static_cast<size_t>(l.out_c) * l.in_c * l.kh * l.kw ||
          l.bias.size() != static_cast<size_t>(l.out_c))
        throw std::runtime_error("backbone: conv payload size mismatch");
      for (float v : l.weights)
        if (!std::isfinite(v)) throw std::runtime_error("backbone: non-finite taps");
      cur = l.out_c;
    }
  }
  for (uint32_t t : stage_taps)
    if (t >= layers.size()) throw std::runtime_error("backbone: stage index out of range");
  std::vector<int> sc = stage_channels();
  int total = 0;
  for (int s : sc) total += s;
  if (!lpips_weights.empty() && lpips_weights.size() != static_cast<size_t>(total))
    throw std::runtime_error("backbone: calibration vector size mismatch");
  size_t dists_n = static_cast<size_t>(c) + total;
  if (!dists_alpha.empty() &&
      (dists_alpha.size() != dists_n || dists_beta.size() != dists_n))
    throw std::runtime_error("backbone: structure/texture weight size mismatch");
}

void save_weights(const BackboneWeights& w, const std::string& path) {
  ByteWriter b;
  b.raw(kMagic, 5);
  b.u16(kVersion);
  b.u32(static_cast<uint32_t>(w.layers.size()));
  for (const Layer& l : w.layers) {
    b.u8(static_cast<uint8_t>(l.kind));
    if (l.kind == Layer::Kind::kConv) {
      b.u8(4);
      b.u32(static_cast<uint32_t>(l.out_c));
      b.u32(static_cast<uint32_t>(l.in_c));
      b.u32(static_cast<uint32_t>(l.kh));
      b.u32(static_cast<uint32_t>(l.kw));
      for (float v : l.weights) b.f32(v);
      for (float v : l.bias) b.f32(v);
    } else {
      b.u8(0);
    }
  }
  b.u32(static_cast<uint32_t>(w.stage_taps.size()));
  for (uint32_t t : w.stage_taps) b.u32(t);
  b.u32(static_cast<uint32_t>(w.norm_mean.size() + w.norm_std.size()));
  for (double v : w.norm_mean) b.f32(static_cast<float>(v));
  for (double v : w.norm_std) b.f32(static_cast<float>(v));
  b.u32(static_cast<uint32_t>(w.lpips_weights.size()));
  for (float v : w.lpips_weights) b.f32(v);
  b.u32(static_cast<uint32_t>(w.dists_alpha.size()));
  for (float v : w.dists_alpha) b.f32(v);
  b.u32(static_cast<uint32_t>(w.dists_beta.size()));
  for (float v : w.dists_beta) b.f32(v);

  uint32_t crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(b.bytes().data()),
            static_cast<uInt>(b.bytes().size())));
  ByteWriter tail;
  tail.u32(crc);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("save_weights: cannot open " + path);
  f.write(b.bytes().data(), static_cast<std::streamsize>(b.bytes().size()));
  f.write(tail.bytes().data(), 4);
}

BackboneWeights load_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_weights: cannot open " + path);
  std::vector<char> buf((std::istreambuf_iterator<char>(f)),
                        std::istreambuf_iterator<char>());
  if (buf.size() < 15) throw std::runtime_error("load_weights: truncated file " + path);

  uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i)
    stored_crc |= static_cast<uint32_t>(static_cast<uint8_t>(buf[buf.size() - 4 + i]))
                  << (8 * i);
  uint32_t crc = static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(buf.data()),
            static_cast<uInt>(buf.size() - 4)));
  if (crc != stored_crc)
    throw std::runtime_error("load_weights: checksum mismatch in " + path);
  buf.resize(buf.size() - 4);

  ByteReader r(std::move(buf), path);
  char magic[5];
  for (int i = 0; i < 5; ++i) magic[i] = static_cast<char>(r.u8());
  if (std::memcmp(magic, kMagic, 5) != 0)
    throw std::runtime_error("load_weights: bad magic in " + path);
  uint16_t version = r.u16();
  if (version != kVersion)
    throw std::runtime_error("load_weights: unsupported version in " + path);

  BackboneWeights w;
  uint32_t n_layers = r.u32();
  for (uint32_t i = 0; i < n_layers; ++i) {
    Layer l;
    uint8_t kind = r.u8();
    if (kind < 1 || kind > 4)
      throw std::runtime_error("load_weights: unknown layer kind in " + path);
    l.kind = static_cast<Layer::Kind>(kind);
    uint8_t rank = r.u8();
    if (l.kind == Layer::Kind::kConv) {
      if (rank != 4) throw std::runtime_error("load_weights: conv rank must be 4");
      l.out_c = static_cast<int>(r.u32());
      l.in_c = static_cast<int>(r.u32());
      l.kh = static_cast<int>(r.u32());
      l.kw = static_cast<int>(r.u32());
      size_t n = static_cast<size_t>(l.out_c) * l.in_c * l.kh * l.kw;
      r.need(4 * (n + l.out_c));
      l.weights.resize(n);
      for (size_t k = 0; k < n; ++k) l.weights[k] = r.f32();
      l.bias.resize(l.out_c);
      for (int k = 0; k < l.out_c; ++k) l.bias[k] = r.f32();
    } else if (rank != 0) {
      throw std::runtime_error("load_weights: non-conv layers carry no payload");
    }
    w.layers.push_back(std::move(l));
  }
  uint32_t n_stages = r.u32();
  for (uint32_t i = 0; i < n_stages; ++i) w.stage_taps.push_back(r.u32());
  uint32_t n_norm = r.u32();
  if (n_norm % 2 != 0) throw std::runtime_error("load_weights: odd norm count");
  for (uint32_t i = 0; i < n_norm / 2; ++i) w.norm_mean.push_back(r.f32());
  for (uint32_t i = 0; i < n_norm / 2; ++i) w.norm_std.push_back(r.f32());
  uint32_t n_cal = r.u32();
  for (uint32_t i = 0; i < n_cal; ++i) w.lpips_weights.push_back(r.f32());
  uint32_t n_alpha = r.u32();
  for (uint32_t i = 0; i < n_alpha; ++i) w.dists_alpha.push_back(r.f32());
  uint32_t n_beta = r.u32();
  for (uint32_t i = 0; i < n_beta; ++i) w.dists_beta.push_back(r.f32());
  if (r.pos() != r.size())
    throw std::runtime_error("load_weights: trailing bytes in " + path);
  w.validate();
  return w;
}

std::vector<ad::Var> forward_stages(const BackboneWeights& w, const ad::Var& img) {
  int c = w.input_channels();
  ad::Var x = img;
  if (img.channels() == 1 && c == 3)
    x = ad::concat_channels({img, img, img});
  if (x.channels() != c)
    throw std::invalid_argument("backbone: input channel mismatch");

  std::vector<double> scale(c), shift(c);
  for (int i = 0; i < c; ++i) {
    scale[i] = 1.0 / w.norm_std[i];
    shift[i] = -w.norm_mean[i];
  }
  x = ad::scale_shift_channels(x, scale, shift);

  std::vector<ad::Var> stages;
  for (size_t i = 0; i < w.layers.size(); ++i) {
    const Layer& l = w.layers[i];
    switch (l.kind) {
      case Layer::Kind::kConv:
        x = ad::conv_layer(x, l.weights, l.bias, l.out_c, l.in_c, l.kh, l.kw, 1,
                           l.kh / 2);
        break;
      case Layer::Kind::kRelu:
        x = ad::relu_(x);
        break;
      case Layer::Kind::kMaxPool:
        x = ad::maxpool2(x);
        break;
      case Layer::Kind::kAvgPool:
        x = ad::avgpool2(x);
        break;
    }
    for (uint32_t t : w.stage_taps)
      if (t == i) stages.push_back(x);
  }
  return stages;
}

std::vector<Tensor> forward(const BackboneWeights& w, const Tensor& img) {
  std::vector<Tensor> out;
  for (const ad::Var& v : forward_stages(w, ad::Var::constant(img)))
    out.push_back(v.val());
  return out;
}

Tensor backward(const BackboneWeights& w, const Tensor& img,
                const std::vector<Tensor>& stage_cotangents) {
  ad::Var leaf = ad::Var::leaf(img);
  std::vector<ad::Var> stages = forward_stages(w, leaf);
  if (stages.size() != stage_cotangents.size())
    throw std::invalid_argument("backbone backward: cotangent count mismatch");
  std::vector<std::pair<ad::Var, Tensor>> seeds;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (!stages[i].val().same_shape(stage_cotangents[i]))
      throw std::invalid_argument("backbone backward: cotangent shape mismatch");
    seeds.push_back({stages[i], stage_cotangents[i]});
  }
  ad::backward(seeds);
  return leaf.grad();
}

}  // namespace pmet::backbone
