/* Copyright 2026 The mtex Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "mtex/autograd.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "mtex/summation.hpp"

namespace mtex::ag {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

thread_local bool g_grad_enabled = true;

// Upper bound on the im2col scratch size, in doubles.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

void require_rank3(const Tensor& t, const char* op) {
  if (t.rank() != 3) {
    throw std::invalid_argument(std::string(op) + ": expected (C, H, W), got " +
                                shape_string(t.shape()));
  }
}

bool any_requires_grad(std::initializer_list<const Var*> vars) {
  if (!g_grad_enabled) return false;
  for (const Var* v : vars) {
    if (v->requires_grad()) return true;
  }
  return false;
}

Var make_result(Tensor value, std::vector<std::shared_ptr<Node>> inputs, bool track,
                std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (track) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

// Rows [row0, row0 + rows) of the im2col matrix layout (ci, ky, kx) x (y, x).
void im2col(const Tensor& x, int k, int row0, int rows, RowMatrix& col) {
  const int channels = x.dim(0), height = x.dim(1), width = x.dim(2);
  const int pad = k / 2;
  col.resize(static_cast<Eigen::Index>(channels) * k * k, static_cast<Eigen::Index>(rows) * width);
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* dst = col.row((c * k + ky) * k + kx).data();
        for (int r = 0; r < rows; ++r) {
          const int sy = row0 + r + ky - pad;
          double* out = dst + static_cast<std::size_t>(r) * width;
          if (sy < 0 || sy >= height) {
            std::fill(out, out + width, 0.0);
            continue;
          }
          for (int xx = 0; xx < width; ++xx) {
            const int sx = xx + kx - pad;
            out[xx] = (sx >= 0 && sx < width) ? x.at(c, sy, sx) : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const RowMatrix& col, int k, int row0, int rows, Tensor& dx) {
  const int channels = dx.dim(0), height = dx.dim(1), width = dx.dim(2);
  const int pad = k / 2;
  for (int c = 0; c < channels; ++c) {
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* src = col.row((c * k + ky) * k + kx).data();
        for (int r = 0; r < rows; ++r) {
          const int sy = row0 + r + ky - pad;
          if (sy < 0 || sy >= height) continue;
          const double* in = src + static_cast<std::size_t>(r) * width;
          for (int xx = 0; xx < width; ++xx) {
            const int sx = xx + kx - pad;
            if (sx >= 0 && sx < width) dx.at(c, sy, sx) += in[xx];
          }
        }
      }
    }
  }
}

int rows_per_chunk(int channels, int k, int width, int height) {
  const std::size_t per_row = static_cast<std::size_t>(channels) * k * k * width;
  return static_cast<int>(std::clamp<std::size_t>(kColumnBudget / std::max<std::size_t>(per_row, 1), 1,
                                                   static_cast<std::size_t>(height)));
}

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.shape() != value.shape()) grad = Tensor(value.shape());
  return grad;
}

double Var::item() const {
  if (value().size() != 1) {
    throw std::logic_error("item() on non-scalar of shape " + shape_string(shape()));
  }
  return value()[0];
}

void Var::zero_grad() {
  if (!node_->grad.empty()) node_->grad.fill(0.0);
}

Var constant(Tensor value) { return make_result(std::move(value), {}, false, nullptr); }

Var leaf(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Var& root) {
  if (root.value().size() != 1) {
    throw std::logic_error("backward() requires a scalar root, got " + shape_string(root.shape()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

Var conv2d(const Var& x, const Var& weight, const Var& bias) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  require_rank3(xv, "conv2d");
  if (wv.rank() != 4 || wv.dim(2) != wv.dim(3) || wv.dim(2) % 2 == 0 || wv.dim(1) != xv.dim(0)) {
    throw std::invalid_argument("conv2d: weight " + shape_string(wv.shape()) +
                                " incompatible with input " + shape_string(xv.shape()));
  }
  const int out_channels = wv.dim(0), k = wv.dim(2);
  if (bias.value().size() != static_cast<std::size_t>(out_channels)) {
    throw std::invalid_argument("conv2d: bias size does not match output channels");
  }
  const int in_channels = xv.dim(0), height = xv.dim(1), width = xv.dim(2);
  const Eigen::Index inner = static_cast<Eigen::Index>(in_channels) * k * k;

  Tensor out({out_channels, height, width});
  MatrixMap out_mat(out.data(), out_channels, static_cast<Eigen::Index>(height) * width);
  ConstMatrixMap w_mat(wv.data(), out_channels, inner);
  const int chunk = rows_per_chunk(in_channels, k, width, height);
  RowMatrix col;
  for (int row0 = 0; row0 < height; row0 += chunk) {
    const int rows = std::min(chunk, height - row0);
    im2col(xv, k, row0, rows, col);
    out_mat.middleCols(static_cast<Eigen::Index>(row0) * width, static_cast<Eigen::Index>(rows) * width)
        .noalias() = w_mat * col;
  }
  const double* b = bias.value().data();
  for (int o = 0; o < out_channels; ++o) out_mat.row(o).array() += b[o];

  const bool track = any_requires_grad({&x, &weight, &bias});
  return make_result(std::move(out), {x.node(), weight.node(), bias.node()}, track, [k](Node& self) {
    Node& xn = *self.inputs[0];
    Node& wn = *self.inputs[1];
    Node& bn = *self.inputs[2];
    const int out_ch = wn.value.dim(0);
    const int in_ch = xn.value.dim(0), h = xn.value.dim(1), w = xn.value.dim(2);
    const Eigen::Index inner_dim = static_cast<Eigen::Index>(in_ch) * k * k;
    ConstMatrixMap dout(self.grad.data(), out_ch, static_cast<Eigen::Index>(h) * w);
    if (bn.requires_grad) {
      double* db = bn.grad_buffer().data();
      for (int o = 0; o < out_ch; ++o) db[o] += dout.row(o).sum();
    }
    if (!xn.requires_grad && !wn.requires_grad) return;
    ConstMatrixMap wmat(wn.value.data(), out_ch, inner_dim);
    const int rows_chunk = rows_per_chunk(in_ch, k, w, h);
    RowMatrix column;
    RowMatrix dcol;
    for (int r0 = 0; r0 < h; r0 += rows_chunk) {
      const int rows = std::min(rows_chunk, h - r0);
      const auto dblock =
          dout.middleCols(static_cast<Eigen::Index>(r0) * w, static_cast<Eigen::Index>(rows) * w);
      if (wn.requires_grad) {
        im2col(xn.value, k, r0, rows, column);
        MatrixMap dw(wn.grad_buffer().data(), out_ch, inner_dim);
        dw.noalias() += dblock * column.transpose();
      }
      if (xn.requires_grad) {
        dcol.noalias() = wmat.transpose() * dblock;
        col2im_add(dcol, k, r0, rows, xn.grad_buffer());
      }
    }
  });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0); }

Var leaky_relu(const Var& x, double slope) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : slope * xv[i];
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}), [slope](Node& self) {
    Node& xn = *self.inputs[0];
    Tensor& dx = xn.grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] += xn.value[i] > 0.0 ? self.grad[i] : slope * self.grad[i];
    }
  });
}

Var sigmoid(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-xv[i]));
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}), [](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double y = self.value[i];
      dx[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Var avg_pool2(const Var& x) {
  const Tensor& xv = x.value();
  require_rank3(xv, "avg_pool2");
  const int channels = xv.dim(0), ho = xv.dim(1) / 2, wo = xv.dim(2) / 2;
  Tensor out({channels, ho, wo});
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < ho; ++y) {
      for (int xx = 0; xx < wo; ++xx) {
        out.at(c, y, xx) = 0.25 * (xv.at(c, 2 * y, 2 * xx) + xv.at(c, 2 * y, 2 * xx + 1) +
                                   xv.at(c, 2 * y + 1, 2 * xx) + xv.at(c, 2 * y + 1, 2 * xx + 1));
      }
    }
  }
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}), [](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    const int ch = self.value.dim(0), h = self.value.dim(1), w = self.value.dim(2);
    for (int c = 0; c < ch; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int xx = 0; xx < w; ++xx) {
          const double g = 0.25 * self.grad.at(c, y, xx);
          dx.at(c, 2 * y, 2 * xx) += g;
          dx.at(c, 2 * y, 2 * xx + 1) += g;
          dx.at(c, 2 * y + 1, 2 * xx) += g;
          dx.at(c, 2 * y + 1, 2 * xx + 1) += g;
        }
      }
    }
  });
}

Var max_pool2(const Var& x) {
  const Tensor& xv = x.value();
  require_rank3(xv, "max_pool2");
  const int channels = xv.dim(0), ho = xv.dim(1) / 2, wo = xv.dim(2) / 2;
  Tensor out({channels, ho, wo});
  // Flat index of the winning input per output; ties go to the first in scan order.
  std::vector<std::size_t> argmax(out.size());
  std::size_t o = 0;
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < ho; ++y) {
      for (int xx = 0; xx < wo; ++xx, ++o) {
        double best = -INFINITY;
        std::size_t best_index = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const double v = xv.at(c, 2 * y + dy, 2 * xx + dx);
            if (v > best) {
              best = v;
              best_index = (static_cast<std::size_t>(c) * xv.dim(1) + 2 * y + dy) * xv.dim(2) + 2 * xx + dx;
            }
          }
        }
        out[o] = best;
        argmax[o] = best_index;
      }
    }
  }
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}),
                     [argmax = std::move(argmax)](Node& self) {
                       Tensor& dx = self.inputs[0]->grad_buffer();
                       for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += self.grad[i];
                     });
}

Var upsample_nearest2(const Var& x) {
  const Tensor& xv = x.value();
  require_rank3(xv, "upsample_nearest2");
  const int channels = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Tensor out({channels, 2 * h, 2 * w});
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < 2 * h; ++y) {
      for (int xx = 0; xx < 2 * w; ++xx) out.at(c, y, xx) = xv.at(c, y / 2, xx / 2);
    }
  }
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}), [](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    const int ch = self.value.dim(0), h2 = self.value.dim(1), w2 = self.value.dim(2);
    for (int c = 0; c < ch; ++c) {
      for (int y = 0; y < h2; ++y) {
        for (int xx = 0; xx < w2; ++xx) dx.at(c, y / 2, xx / 2) += self.grad.at(c, y, xx);
      }
    }
  });
}

Var concat_channels(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const int h = parts[0].value().dim(1), w = parts[0].value().dim(2);
  int channels = 0;
  bool track = false;
  std::vector<std::shared_ptr<Node>> inputs;
  for (const Var& p : parts) {
    require_rank3(p.value(), "concat_channels");
    if (p.value().dim(1) != h || p.value().dim(2) != w) {
      throw std::invalid_argument("concat_channels: spatial size mismatch");
    }
    channels += p.value().dim(0);
    track = track || p.requires_grad();
    inputs.push_back(p.node());
  }
  Tensor out({channels, h, w});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + offset);
    offset += p.value().size();
  }
  return make_result(std::move(out), std::move(inputs), track && g_grad_enabled, [](Node& self) {
    std::size_t off = 0;
    for (auto& in : self.inputs) {
      const std::size_t n = in->value.size();
      if (in->requires_grad) {
        double* dx = in->grad_buffer().data();
        for (std::size_t i = 0; i < n; ++i) dx[i] += self.grad[off + i];
      }
      off += n;
    }
  });
}

Var gather_channels(const Var& x, std::span<const int> channels) {
  const Tensor& xv = x.value();
  require_rank3(xv, "gather_channels");
  const int n = xv.dim(0);
  std::vector<int> index(channels.begin(), channels.end());
  for (int c : index) {
    if (c < 0 || c >= n) {
      throw std::out_of_range("gather_channels: channel " + std::to_string(c) + " outside [0, " +
                              std::to_string(n) + ")");
    }
  }
  Tensor out({static_cast<int>(index.size()), xv.dim(1), xv.dim(2)});
  for (std::size_t k = 0; k < index.size(); ++k) {
    auto src = xv.plane(index[k]);
    std::copy(src.begin(), src.end(), out.plane(static_cast<int>(k)).begin());
  }
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}),
                     [index = std::move(index)](Node& self) {
                       Tensor& dx = self.inputs[0]->grad_buffer();
                       for (std::size_t k = 0; k < index.size(); ++k) {
                         auto g = self.grad.plane(static_cast<int>(k));
                         auto d = dx.plane(index[k]);
                         for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
                       }
                     });
}

Var normalize_channels(const Var& x, std::span<const double> mean, std::span<const double> stddev) {
  const Tensor& xv = x.value();
  require_rank3(xv, "normalize_channels");
  const int channels = xv.dim(0);
  if (mean.size() != static_cast<std::size_t>(channels) || stddev.size() != mean.size()) {
    throw std::invalid_argument("normalize_channels: statistics do not match channel count");
  }
  std::vector<double> inv_std(stddev.size());
  for (std::size_t c = 0; c < stddev.size(); ++c) inv_std[c] = 1.0 / stddev[c];
  Tensor out(xv.shape());
  for (int c = 0; c < channels; ++c) {
    auto src = xv.plane(c);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (src[i] - mean[c]) * inv_std[c];
  }
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}),
                     [inv_std = std::move(inv_std)](Node& self) {
                       Tensor& dx = self.inputs[0]->grad_buffer();
                       for (int c = 0; c < self.value.dim(0); ++c) {
                         auto g = self.grad.plane(c);
                         auto d = dx.plane(c);
                         for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * inv_std[c];
                       }
                     });
}

Var response_norm(const Var& x, double eps) {
  const Tensor& xv = x.value();
  require_rank3(xv, "response_norm");
  const int channels = xv.dim(0);
  const std::size_t pixels = static_cast<std::size_t>(xv.dim(1)) * xv.dim(2);
  std::vector<double> inv_rms(pixels, 0.0);
  for (int c = 0; c < channels; ++c) {
    auto p = xv.plane(c);
    for (std::size_t i = 0; i < pixels; ++i) inv_rms[i] += p[i] * p[i];
  }
  for (double& r : inv_rms) r = 1.0 / std::sqrt(r / channels + eps);
  Tensor out(xv.shape());
  for (int c = 0; c < channels; ++c) {
    auto p = xv.plane(c);
    auto o = out.plane(c);
    for (std::size_t i = 0; i < pixels; ++i) o[i] = p[i] * inv_rms[i];
  }
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}),
                     [inv_rms = std::move(inv_rms)](Node& self) {
                       const Tensor& xv_in = self.inputs[0]->value;
                       Tensor& dx = self.inputs[0]->grad_buffer();
                       const int ch = xv_in.dim(0);
                       const std::size_t n = inv_rms.size();
                       std::vector<double> dot(n, 0.0);
                       for (int c = 0; c < ch; ++c) {
                         auto p = xv_in.plane(c);
                         auto g = self.grad.plane(c);
                         for (std::size_t i = 0; i < n; ++i) dot[i] += p[i] * g[i];
                       }
                       for (int c = 0; c < ch; ++c) {
                         auto p = xv_in.plane(c);
                         auto g = self.grad.plane(c);
                         auto d = dx.plane(c);
                         for (std::size_t i = 0; i < n; ++i) {
                           const double r = inv_rms[i];
                           d[i] += r * g[i] - p[i] * r * r * r * dot[i] / ch;
                         }
                       }
                     });
}

Var gram(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 3 && xv.rank() != 2) {
    throw std::invalid_argument("gram: expected (C, H, W) or (C, M), got " + shape_string(xv.shape()));
  }
  const int channels = xv.dim(0);
  const Eigen::Index positions = static_cast<Eigen::Index>(xv.size() / std::max(channels, 1));
  if (positions < 1) throw std::invalid_argument("gram: no spatial positions");
  // Entries are order-independent sums, so permuting positions leaves the
  // result unchanged bit for bit; the lower triangle is mirrored.
  Tensor out({channels, channels});
  std::vector<double> products(static_cast<std::size_t>(positions));
  const double inv_m = 1.0 / static_cast<double>(positions);
  for (int i = 0; i < channels; ++i) {
    const double* fi = xv.data() + static_cast<std::size_t>(i) * positions;
    for (int j = 0; j <= i; ++j) {
      const double* fj = xv.data() + static_cast<std::size_t>(j) * positions;
      for (Eigen::Index p = 0; p < positions; ++p) products[p] = fi[p] * fj[p];
      const double v = order_independent_sum(products) * inv_m;
      out[static_cast<std::size_t>(i) * channels + j] = v;
      out[static_cast<std::size_t>(j) * channels + i] = v;
    }
  }
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}), [](Node& self) {
    Node& xn = *self.inputs[0];
    const int ch = self.value.dim(0);
    const Eigen::Index m = static_cast<Eigen::Index>(xn.value.size() / ch);
    ConstMatrixMap fm(xn.value.data(), ch, m);
    ConstMatrixMap dg(self.grad.data(), ch, ch);
    MatrixMap df(xn.grad_buffer().data(), ch, m);
    const RowMatrix sym = (dg + dg.transpose()) / static_cast<double>(m);
    df.noalias() += sym * fm;
  });
}

Var weighted_squared_distance(const Var& x, const Tensor& target, double weight) {
  const Tensor& xv = x.value();
  if (xv.shape() != target.shape()) {
    throw std::invalid_argument("weighted_squared_distance: shape " + shape_string(xv.shape()) +
                                " vs " + shape_string(target.shape()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double d = xv[i] - target[i];
    total += d * d;
  }
  return make_result(Tensor::scalar(weight * total), {x.node()}, any_requires_grad({&x}),
                     [target, weight](Node& self) {
                       Node& xn = *self.inputs[0];
                       Tensor& dx = xn.grad_buffer();
                       const double g = 2.0 * weight * self.grad[0];
                       for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g * (xn.value[i] - target[i]);
                     });
}

Var sum_squares(const Var& x) {
  return make_result(Tensor::scalar(x.value().squared_norm()), {x.node()}, any_requires_grad({&x}),
                     [](Node& self) {
                       Node& xn = *self.inputs[0];
                       Tensor& dx = xn.grad_buffer();
                       for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += 2.0 * self.grad[0] * xn.value[i];
                     });
}

Var add(const Var& a, const Var& b) { return add_n({a, b}); }

Var add_n(const std::vector<Var>& terms) {
  if (terms.empty()) throw std::invalid_argument("add_n: no terms");
  Tensor out = terms[0].value();
  bool track = false;
  std::vector<std::shared_ptr<Node>> inputs;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += terms[i].value();
    track = track || terms[i].requires_grad();
    inputs.push_back(terms[i].node());
  }
  return make_result(std::move(out), std::move(inputs), track && g_grad_enabled, [](Node& self) {
    for (auto& in : self.inputs) {
      if (in->requires_grad) in->grad_buffer() += self.grad;
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  out *= factor;
  return make_result(std::move(out), {x.node()}, any_requires_grad({&x}), [factor](Node& self) {
    Tensor& dx = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += factor * self.grad[i];
  });
}

}  // namespace mtex::ag
