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

#include "pmet/ad.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "fft_util.hpp"

namespace pmet::ad {

namespace {

using NodePtr = std::shared_ptr<Node>;

NodePtr make_node(Tensor value, std::vector<NodePtr> parents,
                  std::function<void(Node&)> backfn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->backfn = std::move(backfn);
  return n;
}

void check_binary_shapes(const Var& a, const Var& b, const char* op) {
  if (!a.val().same_shape(b.val()) && !a.val().is_scalar() && !b.val().is_scalar())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a.val().shape_str() + " vs " + b.val().shape_str());
}

// Reduces an elementwise cotangent to the shape of `target` (identity, or
// full sum when target is scalar).
Tensor reduce_to(const Tensor& g, const Tensor& target) {
  if (g.same_shape(target)) return g;
  return Tensor::scalar(g.sum());
}

double get_bc(const Tensor& t, size_t i) {
  return t.is_scalar() ? t.data()[0] : t.data()[i];
}

// Elementwise binary op with scalar broadcast. dfa/dfb give local partials
// as functions of (a_i, b_i, y_i).
template <typename F, typename DA, typename DB>
Var binary_op(const Var& a, const Var& b, const char* name, F f, DA dfa, DB dfb) {
  check_binary_shapes(a, b, name);
  const Tensor& av = a.val();
  const Tensor& bv = b.val();
  const Tensor& big = av.is_scalar() ? bv : av;
  Tensor out(big.height(), big.width(), big.channels());
  for (size_t i = 0; i < out.size(); ++i)
    out.data()[i] = f(get_bc(av, i), get_bc(bv, i));
  NodePtr pa = a.node(), pb = b.node();
  return Var(make_node(std::move(out), {pa, pb}, [pa, pb, dfa, dfb](Node& self) {
    const Tensor& g = self.grad;
    if (pa->requires_grad) {
      Tensor ga(self.value.height(), self.value.width(), self.value.channels());
      for (size_t i = 0; i < g.size(); ++i)
        ga.data()[i] = g.data()[i] * dfa(get_bc(pa->value, i), get_bc(pb->value, i),
                                         self.value.data()[i]);
      pa->accumulate(reduce_to(ga, pa->value));
    }
    if (pb->requires_grad) {
      Tensor gb(self.value.height(), self.value.width(), self.value.channels());
      for (size_t i = 0; i < g.size(); ++i)
        gb.data()[i] = g.data()[i] * dfb(get_bc(pa->value, i), get_bc(pb->value, i),
                                         self.value.data()[i]);
      pb->accumulate(reduce_to(gb, pb->value));
    }
  }));
}

template <typename F, typename D>
Var unary_op(const Var& a, F f, D df) {
  const Tensor& av = a.val();
  Tensor out(av.height(), av.width(), av.channels());
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] = f(av.data()[i]);
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa, df](Node& self) {
    Tensor ga(self.value.height(), self.value.width(), self.value.channels());
    for (size_t i = 0; i < ga.size(); ++i)
      ga.data()[i] = self.grad.data()[i] * df(pa->value.data()[i], self.value.data()[i]);
    pa->accumulate(ga);
  }));
}

int reflect_index(int i, int n, Boundary b) {
  if (i >= 0 && i < n) return i;
  switch (b) {
    case Boundary::kZero:
      return -1;
    case Boundary::kReplicate:
      return std::clamp(i, 0, n - 1);
    case Boundary::kMirror: {
      // Half-sample symmetric extension: edge samples are repeated,
      // period 2n. Matches 'symmetric' array padding.
      int m = 2 * n;
      int j = ((i % m) + m) % m;
      return j < n ? j : m - 1 - j;
    }
  }
  return -1;
}

}  // namespace

void Node::accumulate(const Tensor& g) {
  if (grad.empty()) {
    grad = g;
    return;
  }
  if (!grad.same_shape(g)) throw std::logic_error("gradient shape mismatch");
  for (size_t i = 0; i < grad.size(); ++i) grad.data()[i] += g.data()[i];
}

Var Var::leaf(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = true;
  return Var(n);
}

Var Var::constant(Tensor v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  return Var(n);
}

Tensor Var::grad() const {
  if (n_->grad.empty())
    return Tensor(n_->value.height(), n_->value.width(), n_->value.channels());
  return n_->grad;
}

void backward(const std::vector<std::pair<Var, Tensor>>& seeds) {
  // Post-order DFS over the requires_grad subgraph, then reverse: each node
  // is processed before its parents.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  for (const auto& [root, seed] : seeds) {
    Node* r = root.node().get();
    if (!r->requires_grad) continue;
    if (visited.count(r)) continue;
    stack.push_back({r, 0});
    visited.insert(r);
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->parents.size()) {
        Node* p = n->parents[idx++].get();
        if (p->requires_grad && !visited.count(p)) {
          visited.insert(p);
          stack.push_back({p, 0});
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
  }
  for (Node* n : visited) n->grad = Tensor();
  for (const auto& [root, seed] : seeds) {
    if (!root.node()->value.same_shape(seed))
      throw std::invalid_argument("backward: seed shape mismatch");
    if (root.node()->requires_grad) root.node()->accumulate(seed);
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backfn && !n->grad.empty()) n->backfn(*n);
  }
}

void backward(const Var& scalar_root) {
  backward({{scalar_root, Tensor::scalar(1.0)}});
}

// ---------------------------------------------------------------- pointwise

Var add(const Var& a, const Var& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Var div(const Var& a, const Var& b) {
  return binary_op(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double, double y, double out) { return -out / y; });
}

Var adds(const Var& a, double s) {
  return unary_op(a, [s](double x) { return x + s; },
                  [](double, double) { return 1.0; });
}

Var muls(const Var& a, double s) {
  return unary_op(a, [s](double x) { return x * s; },
                  [s](double, double) { return s; });
}

Var neg(const Var& a) { return muls(a, -1.0); }

Var maximum(const Var& a, const Var& b) {
  return binary_op(
      a, b, "maximum", [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y, double) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x >= y ? 0.0 : 1.0; });
}

Var minimum(const Var& a, const Var& b) {
  return binary_op(
      a, b, "minimum", [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y, double) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x <= y ? 0.0 : 1.0; });
}

Var clamp_min(const Var& a, double s) {
  return unary_op(a, [s](double x) { return x >= s ? x : s; },
                  [s](double x, double) { return x >= s ? 1.0 : 0.0; });
}

Var sqrt_(const Var& a) {
  return unary_op(a, [](double x) { return std::sqrt(x); },
                  [](double, double y) { return 0.5 / y; });
}

Var square(const Var& a) {
  return unary_op(a, [](double x) { return x * x; },
                  [](double x, double) { return 2.0 * x; });
}

Var pow_(const Var& a, double p) {
  return unary_op(a, [p](double x) { return std::pow(x, p); },
                  [p](double x, double y) { return x == 0.0 ? 0.0 : p * y / x; });
}

Var exp_(const Var& a) {
  return unary_op(a, [](double x) { return std::exp(x); },
                  [](double, double y) { return y; });
}

Var log_(const Var& a) {
  return unary_op(a, [](double x) { return std::log(x); },
                  [](double x, double) { return 1.0 / x; });
}

Var log2_(const Var& a) {
  constexpr double kInvLn2 = 1.4426950408889634;
  return unary_op(a, [](double x) { return std::log2(x); },
                  [](double x, double) { return kInvLn2 / x; });
}

Var abs_(const Var& a) {
  return unary_op(a, [](double x) { return std::abs(x); },
                  [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var tanh_(const Var& a) {
  return unary_op(a, [](double x) { return std::tanh(x); },
                  [](double, double y) { return 1.0 - y * y; });
}

Var relu_(const Var& a) {
  return unary_op(a, [](double x) { return x > 0 ? x : 0.0; },
                  [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------- reductions

Var sum_all(const Var& a) {
  NodePtr pa = a.node();
  return Var(make_node(Tensor::scalar(a.val().sum()), {pa}, [pa](Node& self) {
    double g = self.grad.item();
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels(), g);
    pa->accumulate(ga);
  }));
}

Var mean_all(const Var& a) { return muls(sum_all(a), 1.0 / static_cast<double>(a.val().size())); }

Var median_all(const Var& a) {
  const Tensor& av = a.val();
  size_t n = av.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&av](size_t i, size_t j) {
    return av.data()[i] < av.data()[j];
  });
  double value;
  std::vector<std::pair<size_t, double>> taps;
  if (n % 2 == 1) {
    value = av.data()[idx[n / 2]];
    taps = {{idx[n / 2], 1.0}};
  } else {
    size_t i0 = idx[n / 2 - 1], i1 = idx[n / 2];
    value = 0.5 * (av.data()[i0] + av.data()[i1]);
    taps = {{i0, 0.5}, {i1, 0.5}};
  }
  NodePtr pa = a.node();
  return Var(make_node(Tensor::scalar(value), {pa}, [pa, taps](Node& self) {
    double g = self.grad.item();
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    for (auto& [i, w] : taps) ga.data()[i] += g * w;
    pa->accumulate(ga);
  }));
}

namespace {

Var extremum_all(const Var& a, bool want_max) {
  const Tensor& av = a.val();
  size_t best = 0;
  for (size_t i = 1; i < av.size(); ++i) {
    bool better = want_max ? av.data()[i] > av.data()[best]
                           : av.data()[i] < av.data()[best];
    if (better) best = i;
  }
  NodePtr pa = a.node();
  return Var(make_node(Tensor::scalar(av.data()[best]), {pa}, [pa, best](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    ga.data()[best] = self.grad.item();
    pa->accumulate(ga);
  }));
}

}  // namespace

Var max_all(const Var& a) { return extremum_all(a, true); }
Var min_all(const Var& a) { return extremum_all(a, false); }

Var sum_channels(const Var& a) {
  const Tensor& av = a.val();
  Tensor out(av.height(), av.width(), 1);
  size_t plane = static_cast<size_t>(av.height()) * av.width();
  for (int c = 0; c < av.channels(); ++c) {
    const double* p = av.plane(c);
    for (size_t i = 0; i < plane; ++i) out.data()[i] += p[i];
  }
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    size_t plane = static_cast<size_t>(ga.height()) * ga.width();
    for (int c = 0; c < ga.channels(); ++c) {
      double* p = ga.plane(c);
      for (size_t i = 0; i < plane; ++i) p[i] = self.grad.data()[i];
    }
    pa->accumulate(ga);
  }));
}

Var broadcast_channel(const Var& a, int c) {
  const Tensor& av = a.val();
  if (av.channels() != 1)
    throw std::invalid_argument("broadcast_channel: input must be single channel");
  Tensor out(av.height(), av.width(), c);
  size_t plane = static_cast<size_t>(av.height()) * av.width();
  for (int ch = 0; ch < c; ++ch)
    std::copy(av.data(), av.data() + plane, out.plane(ch));
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), 1);
    size_t plane = static_cast<size_t>(ga.height()) * ga.width();
    for (int c = 0; c < self.grad.channels(); ++c) {
      const double* p = self.grad.plane(c);
      for (size_t i = 0; i < plane; ++i) ga.data()[i] += p[i];
    }
    pa->accumulate(ga);
  }));
}

Var spatial_mean(const Var& a) {
  const Tensor& av = a.val();
  size_t plane = static_cast<size_t>(av.height()) * av.width();
  Tensor out(1, 1, av.channels());
  for (int c = 0; c < av.channels(); ++c) {
    double s = 0;
    const double* p = av.plane(c);
    for (size_t i = 0; i < plane; ++i) s += p[i];
    out.data()[c] = s / static_cast<double>(plane);
  }
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    size_t plane = static_cast<size_t>(ga.height()) * ga.width();
    for (int c = 0; c < ga.channels(); ++c) {
      double g = self.grad.data()[c] / static_cast<double>(plane);
      double* p = ga.plane(c);
      for (size_t i = 0; i < plane; ++i) p[i] = g;
    }
    pa->accumulate(ga);
  }));
}

// --------------------------------------------------------------------- shape

Var pad(const Var& a, int top, int bottom, int left, int right, Boundary b) {
  const Tensor& av = a.val();
  int h = av.height(), w = av.width(), c = av.channels();
  int oh = h + top + bottom, ow = w + left + right;
  // Source index for each padded coordinate; -1 denotes a zero sample.
  std::vector<int> ym(oh), xm(ow);
  for (int y = 0; y < oh; ++y) ym[y] = reflect_index(y - top, h, b);
  for (int x = 0; x < ow; ++x) xm[x] = reflect_index(x - left, w, b);
  Tensor out(oh, ow, c);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        out.at(ch, y, x) = (ym[y] < 0 || xm[x] < 0) ? 0.0 : av.at(ch, ym[y], xm[x]);
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa, ym, xm](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    const Tensor& g = self.grad;
    for (int ch = 0; ch < g.channels(); ++ch)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
          if (ym[y] >= 0 && xm[x] >= 0) ga.at(ch, ym[y], xm[x]) += g.at(ch, y, x);
    pa->accumulate(ga);
  }));
}

Var crop(const Var& a, int y0, int x0, int h, int w) {
  const Tensor& av = a.val();
  if (y0 < 0 || x0 < 0 || y0 + h > av.height() || x0 + w > av.width())
    throw std::invalid_argument("crop: window out of range");
  Tensor out(h, w, av.channels());
  for (int c = 0; c < av.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = av.at(c, y0 + y, x0 + x);
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa, y0, x0](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    const Tensor& g = self.grad;
    for (int c = 0; c < g.channels(); ++c)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) ga.at(c, y0 + y, x0 + x) += g.at(c, y, x);
    pa->accumulate(ga);
  }));
}

Var slice_channel(const Var& a, int c) {
  const Tensor& av = a.val();
  if (c < 0 || c >= av.channels()) throw std::invalid_argument("slice_channel: bad index");
  Tensor out(av.height(), av.width(), 1);
  std::copy(av.plane(c), av.plane(c) + out.size(), out.data());
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa, c](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    std::copy(self.grad.data(), self.grad.data() + self.grad.size(), ga.plane(c));
    pa->accumulate(ga);
  }));
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: empty");
  int h = parts[0].height(), w = parts[0].width(), c = 0;
  for (const Var& p : parts) {
    if (p.height() != h || p.width() != w)
      throw std::invalid_argument("concat_channels: spatial mismatch");
    c += p.channels();
  }
  Tensor out(h, w, c);
  std::vector<NodePtr> ps;
  std::vector<int> offs;
  int off = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.val();
    std::copy(pv.data(), pv.data() + pv.size(), out.plane(off));
    ps.push_back(p.node());
    offs.push_back(off);
    off += pv.channels();
  }
  return Var(make_node(std::move(out), ps, [ps, offs](Node& self) {
    for (size_t k = 0; k < ps.size(); ++k) {
      if (!ps[k]->requires_grad) continue;
      const Tensor& pv = ps[k]->value;
      Tensor ga(pv.height(), pv.width(), pv.channels());
      std::copy(self.grad.plane(offs[k]), self.grad.plane(offs[k]) + ga.size(),
                ga.data());
      ps[k]->accumulate(ga);
    }
  }));
}

Var stopgrad(const Var& a) { return Var::constant(a.val()); }

// ------------------------------------------------------ filtering / sampling

Var filter2_valid(const Var& a, const Tensor& k) {
  if (k.channels() != 1) throw std::invalid_argument("filter2_valid: kernel must be 2-D");
  if (!k.all_finite()) throw std::invalid_argument("filter2_valid: non-finite kernel");
  const Tensor& av = a.val();
  int kh = k.height(), kw = k.width();
  int oh = av.height() - kh + 1, ow = av.width() - kw + 1;
  if (oh < 1 || ow < 1) throw std::invalid_argument("filter2_valid: kernel larger than image");
  Tensor out(oh, ow, av.channels());
  for (int c = 0; c < av.channels(); ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0;
        for (int i = 0; i < kh; ++i)
          for (int j = 0; j < kw; ++j) s += k.at(0, i, j) * av.at(c, y + i, x + j);
        out.at(c, y, x) = s;
      }
  NodePtr pa = a.node();
  Tensor kc = k;
  return Var(make_node(std::move(out), {pa}, [pa, kc](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    const Tensor& g = self.grad;
    for (int c = 0; c < g.channels(); ++c)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) {
          double gv = g.at(c, y, x);
          for (int i = 0; i < kc.height(); ++i)
            for (int j = 0; j < kc.width(); ++j)
              ga.at(c, y + i, x + j) += kc.at(0, i, j) * gv;
        }
    pa->accumulate(ga);
  }));
}

Var filter2_same(const Var& a, const Tensor& k, Boundary b) {
  // Anchor at floor((k-1)/2): output(y,x) covers input rows
  // [y - ah, y - ah + kh - 1].
  int ah = (k.height() - 1) / 2, aw = (k.width() - 1) / 2;
  Var padded = pad(a, ah, k.height() - 1 - ah, aw, k.width() - 1 - aw, b);
  return filter2_valid(padded, k);
}

Var sep_filter_same(const Var& a, const std::vector<double>& kx,
                    const std::vector<double>& ky, Boundary b) {
  Tensor kxt(1, static_cast<int>(kx.size()), 1);
  for (size_t i = 0; i < kx.size(); ++i) kxt.at(0, 0, static_cast<int>(i)) = kx[i];
  Tensor kyt(static_cast<int>(ky.size()), 1, 1);
  for (size_t i = 0; i < ky.size(); ++i) kyt.at(0, static_cast<int>(i), 0) = ky[i];
  return filter2_same(filter2_same(a, kxt, b), kyt, b);
}

Var conv_layer(const Var& a, const std::vector<float>& weights,
               const std::vector<float>& bias, int out_c, int in_c, int kh,
               int kw, int stride, int padn) {
  const Tensor& av = a.val();
  if (av.channels() != in_c) throw std::invalid_argument("conv_layer: channel mismatch");
  if (weights.size() != static_cast<size_t>(out_c) * in_c * kh * kw)
    throw std::invalid_argument("conv_layer: weight count mismatch");
  if (bias.size() != static_cast<size_t>(out_c))
    throw std::invalid_argument("conv_layer: bias count mismatch");
  int h = av.height(), w = av.width();
  int oh = (h + 2 * padn - kh) / stride + 1;
  int ow = (w + 2 * padn - kw) / stride + 1;
  if (oh < 1 || ow < 1) throw std::invalid_argument("conv_layer: input too small");
  Tensor out(oh, ow, out_c);
  auto wt = [&](int oc, int ic, int i, int j) {
    return static_cast<double>(
        weights[((static_cast<size_t>(oc) * in_c + ic) * kh + i) * kw + j]);
  };
  for (int oc = 0; oc < out_c; ++oc)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = bias[oc];
        int y0 = y * stride - padn, x0 = x * stride - padn;
        for (int ic = 0; ic < in_c; ++ic)
          for (int i = 0; i < kh; ++i) {
            int yy = y0 + i;
            if (yy < 0 || yy >= h) continue;
            for (int j = 0; j < kw; ++j) {
              int xx = x0 + j;
              if (xx < 0 || xx >= w) continue;
              s += wt(oc, ic, i, j) * av.at(ic, yy, xx);
            }
          }
        out.at(oc, y, x) = s;
      }
  NodePtr pa = a.node();
  auto weights_c = weights;
  return Var(make_node(
      std::move(out), {pa},
      [pa, weights_c, out_c, in_c, kh, kw, stride, padn](Node& self) {
        const Tensor& g = self.grad;
        int h = pa->value.height(), w = pa->value.width();
        Tensor ga(h, w, in_c);
        auto wt = [&](int oc, int ic, int i, int j) {
          return static_cast<double>(
              weights_c[((static_cast<size_t>(oc) * in_c + ic) * kh + i) * kw + j]);
        };
        for (int oc = 0; oc < out_c; ++oc)
          for (int y = 0; y < g.height(); ++y)
            for (int x = 0; x < g.width(); ++x) {
              double gv = g.at(oc, y, x);
              if (gv == 0) continue;
              int y0 = y * stride - padn, x0 = x * stride - padn;
              for (int ic = 0; ic < in_c; ++ic)
                for (int i = 0; i < kh; ++i) {
                  int yy = y0 + i;
                  if (yy < 0 || yy >= h) continue;
                  for (int j = 0; j < kw; ++j) {
                    int xx = x0 + j;
                    if (xx < 0 || xx >= w) continue;
                    ga.at(ic, yy, xx) += wt(oc, ic, i, j) * gv;
                  }
                }
            }
        pa->accumulate(ga);
      }));
}

Var avgpool2(const Var& a) {
  const Tensor& av = a.val();
  int oh = av.height() / 2, ow = av.width() / 2, c = av.channels();
  if (oh < 1 || ow < 1) throw std::invalid_argument("avgpool2: input too small");
  Tensor out(oh, ow, c);
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x)
        out.at(ch, y, x) = 0.25 * (av.at(ch, 2 * y, 2 * x) + av.at(ch, 2 * y, 2 * x + 1) +
                                   av.at(ch, 2 * y + 1, 2 * x) +
                                   av.at(ch, 2 * y + 1, 2 * x + 1));
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    const Tensor& g = self.grad;
    for (int ch = 0; ch < g.channels(); ++ch)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) {
          double gv = 0.25 * g.at(ch, y, x);
          ga.at(ch, 2 * y, 2 * x) += gv;
          ga.at(ch, 2 * y, 2 * x + 1) += gv;
          ga.at(ch, 2 * y + 1, 2 * x) += gv;
          ga.at(ch, 2 * y + 1, 2 * x + 1) += gv;
        }
    pa->accumulate(ga);
  }));
}

Var maxpool2(const Var& a) {
  const Tensor& av = a.val();
  int oh = av.height() / 2, ow = av.width() / 2, c = av.channels();
  if (oh < 1 || ow < 1) throw std::invalid_argument("maxpool2: input too small");
  Tensor out(oh, ow, c);
  std::vector<int> arg(out.size());
  size_t k = 0;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x, ++k) {
        double best = av.at(ch, 2 * y, 2 * x);
        int besti = 0;
        const double cand[3] = {av.at(ch, 2 * y, 2 * x + 1), av.at(ch, 2 * y + 1, 2 * x),
                                av.at(ch, 2 * y + 1, 2 * x + 1)};
        for (int t = 0; t < 3; ++t)
          if (cand[t] > best) {
            best = cand[t];
            besti = t + 1;
          }
        out.at(ch, y, x) = best;
        arg[k] = besti;
      }
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa, arg](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    const Tensor& g = self.grad;
    size_t k = 0;
    for (int ch = 0; ch < g.channels(); ++ch)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x, ++k) {
          int t = arg[k];
          int yy = 2 * y + (t >= 2), xx = 2 * x + (t == 1 || t == 3);
          ga.at(ch, yy, xx) += g.at(ch, y, x);
        }
    pa->accumulate(ga);
  }));
}

Var decimate(const Var& a, int fy, int fx) {
  const Tensor& av = a.val();
  int oh = (av.height() + fy - 1) / fy, ow = (av.width() + fx - 1) / fx;
  Tensor out(oh, ow, av.channels());
  for (int c = 0; c < av.channels(); ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) out.at(c, y, x) = av.at(c, y * fy, x * fx);
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa, fy, fx](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    const Tensor& g = self.grad;
    for (int c = 0; c < g.channels(); ++c)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) ga.at(c, y * fy, x * fx) += g.at(c, y, x);
    pa->accumulate(ga);
  }));
}

Var upsample_nearest(const Var& a, int f) {
  const Tensor& av = a.val();
  Tensor out(av.height() * f, av.width() * f, av.channels());
  for (int c = 0; c < av.channels(); ++c)
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x) out.at(c, y, x) = av.at(c, y / f, x / f);
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa, f](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    const Tensor& g = self.grad;
    for (int c = 0; c < g.channels(); ++c)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) ga.at(c, y / f, x / f) += g.at(c, y, x);
    pa->accumulate(ga);
  }));
}

Var box_mean_stride(const Var& a, int win, int stride) {
  const Tensor& av = a.val();
  if (av.height() < win || av.width() < win)
    throw std::invalid_argument("box_mean_stride: window larger than image");
  int oh = (av.height() - win) / stride + 1;
  int ow = (av.width() - win) / stride + 1;
  double inv = 1.0 / (static_cast<double>(win) * win);
  Tensor out(oh, ow, av.channels());
  for (int c = 0; c < av.channels(); ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) s += av.at(c, y * stride + i, x * stride + j);
        out.at(c, y, x) = s * inv;
      }
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa, win, stride, inv](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    const Tensor& g = self.grad;
    for (int c = 0; c < g.channels(); ++c)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) {
          double gv = g.at(c, y, x) * inv;
          for (int i = 0; i < win; ++i)
            for (int j = 0; j < win; ++j)
              ga.at(c, y * stride + i, x * stride + j) += gv;
        }
    pa->accumulate(ga);
  }));
}

Var scale_shift_channels(const Var& a, const std::vector<double>& scale,
                         const std::vector<double>& shift) {
  const Tensor& av = a.val();
  if (scale.size() != static_cast<size_t>(av.channels()) || scale.size() != shift.size())
    throw std::invalid_argument("scale_shift_channels: vector size mismatch");
  Tensor out(av.height(), av.width(), av.channels());
  for (int c = 0; c < av.channels(); ++c) {
    const double* src = av.plane(c);
    double* dst = out.plane(c);
    size_t n = static_cast<size_t>(av.height()) * av.width();
    for (size_t i = 0; i < n; ++i) dst[i] = (src[i] + shift[c]) * scale[c];
  }
  NodePtr pa = a.node();
  return Var(make_node(std::move(out), {pa}, [pa, scale](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    for (int c = 0; c < ga.channels(); ++c) {
      const double* src = self.grad.plane(c);
      double* dst = ga.plane(c);
      size_t n = static_cast<size_t>(ga.height()) * ga.width();
      for (size_t i = 0; i < n; ++i) dst[i] = src[i] * scale[c];
    }
    pa->accumulate(ga);
  }));
}

// ------------------------------------------------------------- resampling

namespace {

// Keys cubic kernel, a = -0.5.
double cubic_kernel(double t) {
  t = std::abs(t);
  if (t <= 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

ResampleTable make_table(int in_size, int out_size, double support,
                         const std::function<double(double)>& kernel,
                         bool antialias) {
  ResampleTable t;
  t.in_size = in_size;
  t.out_size = out_size;
  t.start.resize(out_size);
  t.w.resize(out_size);
  double factor = static_cast<double>(out_size) / in_size;
  double scale = (antialias && factor < 1.0) ? factor : 1.0;
  double rad = support / scale;
  for (int i = 0; i < out_size; ++i) {
    double x = (i + 0.5) / factor - 0.5;
    int j0 = static_cast<int>(std::ceil(x - rad));
    int j1 = static_cast<int>(std::floor(x + rad));
    std::vector<double> wraw(static_cast<size_t>(j1 - j0 + 1));
    double sum = 0;
    for (int j = j0; j <= j1; ++j) {
      double wv = kernel((x - j) * scale);
      wraw[j - j0] = wv;
      sum += wv;
    }
    // Clamp out-of-range taps to the edge (replicate) and renormalize.
    int c0 = std::clamp(j0, 0, in_size - 1);
    int c1 = std::clamp(j1, 0, in_size - 1);
    t.start[i] = c0;
    t.w[i].assign(static_cast<size_t>(c1 - c0 + 1), 0.0);
    for (int j = j0; j <= j1; ++j) {
      int cj = std::clamp(j, 0, in_size - 1);
      t.w[i][cj - c0] += wraw[j - j0] / sum;
    }
  }
  return t;
}

}  // namespace

ResampleTable make_table_nearest(int in_size, int out_size) {
  ResampleTable t;
  t.in_size = in_size;
  t.out_size = out_size;
  t.start.resize(out_size);
  t.w.resize(out_size);
  double factor = static_cast<double>(out_size) / in_size;
  for (int i = 0; i < out_size; ++i) {
    int j = std::clamp(static_cast<int>(std::floor((i + 0.5) / factor)), 0, in_size - 1);
    t.start[i] = j;
    t.w[i] = {1.0};
  }
  return t;
}

ResampleTable make_table_bilinear(int in_size, int out_size) {
  return make_table(in_size, out_size, 1.0,
                    [](double x) { return std::max(0.0, 1.0 - std::abs(x)); }, true);
}

ResampleTable make_table_bicubic(int in_size, int out_size, bool antialias) {
  return make_table(in_size, out_size, 2.0, cubic_kernel, antialias);
}

namespace {

Var resample_axis(const Var& a, const ResampleTable& t, bool rows) {
  const Tensor& av = a.val();
  int n_in = rows ? av.height() : av.width();
  if (n_in != t.in_size) throw std::invalid_argument("resample: table size mismatch");
  int oh = rows ? t.out_size : av.height();
  int ow = rows ? av.width() : t.out_size;
  Tensor out(oh, ow, av.channels());
  for (int c = 0; c < av.channels(); ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        int o = rows ? y : x;
        double s = 0;
        for (size_t k = 0; k < t.w[o].size(); ++k) {
          int j = t.start[o] + static_cast<int>(k);
          s += t.w[o][k] * (rows ? av.at(c, j, x) : av.at(c, y, j));
        }
        out.at(c, y, x) = s;
      }
  NodePtr pa = a.node();
  ResampleTable tc = t;
  return Var(make_node(std::move(out), {pa}, [pa, tc, rows](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    const Tensor& g = self.grad;
    for (int c = 0; c < g.channels(); ++c)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) {
          int o = rows ? y : x;
          double gv = g.at(c, y, x);
          for (size_t k = 0; k < tc.w[o].size(); ++k) {
            int j = tc.start[o] + static_cast<int>(k);
            if (rows)
              ga.at(c, j, x) += tc.w[o][k] * gv;
            else
              ga.at(c, y, j) += tc.w[o][k] * gv;
          }
        }
    pa->accumulate(ga);
  }));
}

}  // namespace

Var resample_rows(const Var& a, const ResampleTable& t) { return resample_axis(a, t, true); }
Var resample_cols(const Var& a, const ResampleTable& t) { return resample_axis(a, t, false); }

Var resize_bilinear(const Var& a, int out_h, int out_w) {
  Var r = resample_rows(a, make_table_bilinear(a.height(), out_h));
  return resample_cols(r, make_table_bilinear(a.width(), out_w));
}

// ------------------------------------------------------------------ complex

namespace {

// dir=-1 applies the forward kernel, dir=+1 the unnormalized inverse kernel.
void dft_planes(const Tensor& re, const Tensor* im, Tensor& ore, Tensor& oim, int dir) {
  int h = re.height(), w = re.width();
  ore = Tensor(h, w, re.channels());
  oim = Tensor(h, w, re.channels());
  for (int c = 0; c < re.channels(); ++c)
    fftutil::dft2(h, w, re.plane(c), im ? im->plane(c) : nullptr, ore.plane(c),
                  oim.plane(c), dir);
}

}  // namespace

CVar fft2(const Var& a) {
  Tensor ore, oim;
  dft_planes(a.val(), nullptr, ore, oim, -1);
  NodePtr pa = a.node();
  auto re_node = make_node(std::move(ore), {pa}, nullptr);
  auto im_node = make_node(std::move(oim), {pa}, nullptr);
  if (pa->requires_grad) {
    re_node->requires_grad = true;
    im_node->requires_grad = true;
    // The adjoint of the forward DFT is the unnormalized inverse kernel; a
    // real input keeps the real part. The adjoint is linear, so the re/im
    // halves push their contributions independently.
    re_node->backfn = [pa](Node& self) {
      Tensor ore, oim;
      dft_planes(self.grad, nullptr, ore, oim, +1);
      pa->accumulate(ore);
    };
    im_node->backfn = [pa](Node& self) {
      Tensor zero(self.grad.height(), self.grad.width(), self.grad.channels());
      Tensor ore, oim;
      dft_planes(zero, &self.grad, ore, oim, +1);
      pa->accumulate(ore);
    };
  }
  return {Var(re_node), Var(im_node)};
}

CVar fft2c(const CVar& a) {
  Tensor ore, oim;
  const Tensor& iim = a.im.val();
  dft_planes(a.re.val(), &iim, ore, oim, -1);
  NodePtr pre = a.re.node(), pim = a.im.node();
  auto re_node = make_node(std::move(ore), {pre, pim}, nullptr);
  auto im_node = make_node(std::move(oim), {pre, pim}, nullptr);
  if (pre->requires_grad || pim->requires_grad) {
    re_node->requires_grad = im_node->requires_grad = true;
    re_node->backfn = [pre, pim](Node& self) {
      Tensor ore, oim;
      dft_planes(self.grad, nullptr, ore, oim, +1);
      if (pre->requires_grad) pre->accumulate(ore);
      if (pim->requires_grad) pim->accumulate(oim);
    };
    im_node->backfn = [pre, pim](Node& self) {
      Tensor zero(self.grad.height(), self.grad.width(), self.grad.channels());
      Tensor ore, oim;
      dft_planes(zero, &self.grad, ore, oim, +1);
      if (pre->requires_grad) pre->accumulate(ore);
      if (pim->requires_grad) pim->accumulate(oim);
    };
  }
  return {Var(re_node), Var(im_node)};
}

CVar ifft2c(const CVar& a) {
  const Tensor& irv = a.re.val();
  double inv_n = 1.0 / (static_cast<double>(irv.height()) * irv.width());
  Tensor ore, oim;
  const Tensor& iim = a.im.val();
  dft_planes(irv, &iim, ore, oim, +1);
  for (size_t i = 0; i < ore.size(); ++i) {
    ore.data()[i] *= inv_n;
    oim.data()[i] *= inv_n;
  }
  NodePtr pre = a.re.node(), pim = a.im.node();
  auto re_node = make_node(std::move(ore), {pre, pim}, nullptr);
  auto im_node = make_node(std::move(oim), {pre, pim}, nullptr);
  if (pre->requires_grad || pim->requires_grad) {
    re_node->requires_grad = im_node->requires_grad = true;
    re_node->backfn = [pre, pim, inv_n](Node& self) {
      Tensor ore, oim;
      dft_planes(self.grad, nullptr, ore, oim, -1);
      for (size_t i = 0; i < ore.size(); ++i) {
        ore.data()[i] *= inv_n;
        oim.data()[i] *= inv_n;
      }
      if (pre->requires_grad) pre->accumulate(ore);
      if (pim->requires_grad) pim->accumulate(oim);
    };
    im_node->backfn = [pre, pim, inv_n](Node& self) {
      Tensor zero(self.grad.height(), self.grad.width(), self.grad.channels());
      Tensor ore, oim;
      dft_planes(zero, &self.grad, ore, oim, -1);
      for (size_t i = 0; i < ore.size(); ++i) {
        ore.data()[i] *= inv_n;
        oim.data()[i] *= inv_n;
      }
      if (pre->requires_grad) pre->accumulate(ore);
      if (pim->requires_grad) pim->accumulate(oim);
    };
  }
  return {Var(re_node), Var(im_node)};
}

CVar cmul_mask(const CVar& a, const Tensor& mre, const Tensor& mim) {
  Var ar = real_mul_mask(a.re, mre), ai = real_mul_mask(a.im, mre);
  Var br = real_mul_mask(a.im, mim), bi = real_mul_mask(a.re, mim);
  return {sub(ar, br), add(ai, bi)};
}

Var real_mul_mask(const Var& a, const Tensor& m) {
  const Tensor& av = a.val();
  bool per_channel = m.channels() == av.channels();
  if (!per_channel && m.channels() != 1)
    throw std::invalid_argument("real_mul_mask: mask channel mismatch");
  if (m.height() != av.height() || m.width() != av.width())
    throw std::invalid_argument("real_mul_mask: mask shape mismatch");
  Tensor out(av.height(), av.width(), av.channels());
  size_t plane = static_cast<size_t>(av.height()) * av.width();
  for (int c = 0; c < av.channels(); ++c) {
    const double* mp = m.plane(per_channel ? c : 0);
    const double* sp = av.plane(c);
    double* dp = out.plane(c);
    for (size_t i = 0; i < plane; ++i) dp[i] = sp[i] * mp[i];
  }
  NodePtr pa = a.node();
  Tensor mc = m;
  return Var(make_node(std::move(out), {pa}, [pa, mc, per_channel](Node& self) {
    Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
    size_t plane = static_cast<size_t>(ga.height()) * ga.width();
    for (int c = 0; c < ga.channels(); ++c) {
      const double* mp = mc.plane(per_channel ? c : 0);
      const double* gp = self.grad.plane(c);
      double* dp = ga.plane(c);
      for (size_t i = 0; i < plane; ++i) dp[i] = gp[i] * mp[i];
    }
    pa->accumulate(ga);
  }));
}

CVar cmul(const CVar& a, const CVar& b) {
  return {sub(mul(a.re, b.re), mul(a.im, b.im)),
          add(mul(a.re, b.im), mul(a.im, b.re))};
}

CVar conj(const CVar& a) { return {a.re, neg(a.im)}; }

Var cabs(const CVar& a, double eps) {
  return sqrt_(adds(add(square(a.re), square(a.im)), eps));
}

namespace {

// Maps output spectrum bin o (unshifted) to input bin, for central crop from
// n to m bins: shifted frequencies [-m/2, m/2) are retained.
std::vector<int> crop_map(int n, int m) {
  std::vector<int> map(m);
  for (int o = 0; o < m; ++o) {
    int f = o <= (m - 1) / 2 ? o : o - m;  // shifted frequency of output bin
    map[o] = ((f % n) + n) % n;
  }
  return map;
}

}  // namespace

CVar spec_crop(const CVar& a, int out_h, int out_w) {
  const Tensor& rv = a.re.val();
  const Tensor& iv = a.im.val();
  if (out_h > rv.height() || out_w > rv.width())
    throw std::invalid_argument("spec_crop: output larger than input");
  auto ym = crop_map(rv.height(), out_h);
  auto xm = crop_map(rv.width(), out_w);
  // Rescale so that ifft of the cropped spectrum keeps sample amplitudes.
  double s = (static_cast<double>(out_h) * out_w) /
             (static_cast<double>(rv.height()) * rv.width());
  auto crop_one = [&](const Var& v) {
    const Tensor& tv = v.val();
    Tensor out(out_h, out_w, tv.channels());
    for (int c = 0; c < tv.channels(); ++c)
      for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) out.at(c, y, x) = s * tv.at(c, ym[y], xm[x]);
    NodePtr pa = v.node();
    return Var(make_node(std::move(out), {pa}, [pa, ym, xm, s](Node& self) {
      Tensor ga(pa->value.height(), pa->value.width(), pa->value.channels());
      const Tensor& g = self.grad;
      for (int c = 0; c < g.channels(); ++c)
        for (int y = 0; y < g.height(); ++y)
          for (int x = 0; x < g.width(); ++x) ga.at(c, ym[y], xm[x]) += s * g.at(c, y, x);
      pa->accumulate(ga);
    }));
  };
  (void)iv;
  return {crop_one(a.re), crop_one(a.im)};
}

}  // namespace pmet::ad
