// Copyright 2026 The cfm-workbench Authors
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

#include "cfm/nn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "cfm/nn/thread_pool.hpp"

namespace cfm::nn {

Similarity similarity_from_string(const std::string& s) {
  if (s == "e2") return Similarity::kE2;
  if (s == "logbilinear") return Similarity::kLogBilinear;
  throw std::invalid_argument("unknown similarity: " + s);
}

std::string to_string(Similarity s) {
  return s == Similarity::kE2 ? "e2" : "logbilinear";
}

namespace {

// ---- dense kernels -------------------------------------------------------

// c[m,n] += a[m,k] b[k,n]
template <typename T>
void matmul_acc(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<int64_t>(i) * k;
    T* ci = c + static_cast<int64_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      T av = ai[p];
      if (av == T(0)) continue;
      const T* bp = b + static_cast<int64_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[m,n] += a[m,k] b[n,k]^T
template <typename T>
void matmul_abT_acc(const T* a, const T* b, T* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + static_cast<int64_t>(i) * k;
    T* ci = c + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* bj = b + static_cast<int64_t>(j) * k;
      T acc = T(0);
      for (int p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] += acc;
    }
  }
}

// c[m,n] += a[k,m]^T b[k,n], restricted to output rows [m0,m1)
template <typename T>
void matmul_aTb_rows(const T* a, const T* b, T* c, int m, int k, int n,
                     int m0, int m1) {
  for (int i = m0; i < m1; ++i) {
    T* ci = c + static_cast<int64_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      T av = a[static_cast<int64_t>(p) * m + i];
      if (av == T(0)) continue;
      const T* bp = b + static_cast<int64_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

// ---- convolution lowering ------------------------------------------------

// x:[C,H,W] -> col:[C*kh*kw, OH*OW]
template <typename T>
void im2col(const T* x, int C, int H, int W, int kh, int kw, int stride,
            int pad, int OH, int OW, T* col) {
  for (int c = 0; c < C; ++c) {
    const T* src = x + static_cast<int64_t>(c) * H * W;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        T* dst = col + (static_cast<int64_t>(c) * kh * kw + ky * kw + kx) *
                           (OH * OW);
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride - pad + ky;
          T* drow = dst + static_cast<int64_t>(oy) * OW;
          if (iy < 0 || iy >= H) {
            std::fill(drow, drow + OW, T(0));
            continue;
          }
          const T* srow = src + static_cast<int64_t>(iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride - pad + kx;
            drow[ox] = (ix >= 0 && ix < W) ? srow[ix] : T(0);
          }
        }
      }
    }
  }
}

// col:[C*kh*kw, OH*OW] accumulated back into x:[C,H,W]
template <typename T>
void col2im_acc(const T* col, int C, int H, int W, int kh, int kw, int stride,
                int pad, int OH, int OW, T* x) {
  for (int c = 0; c < C; ++c) {
    T* dst = x + static_cast<int64_t>(c) * H * W;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const T* src = col + (static_cast<int64_t>(c) * kh * kw + ky * kw + kx) *
                                 (OH * OW);
        for (int oy = 0; oy < OH; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          const T* srow = src + static_cast<int64_t>(oy) * OW;
          T* drow = dst + static_cast<int64_t>(iy) * W;
          for (int ox = 0; ox < OW; ++ox) {
            int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < W) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

struct ConvDims {
  int B, C, H, W, F, kh, kw, stride, pad, OH, OW;
  int64_t ck2() const { return static_cast<int64_t>(C) * kh * kw; }
  int64_t out_hw() const { return static_cast<int64_t>(OH) * OW; }
};

ConvDims conv_dims(const std::vector<int>& xs, const std::vector<int>& ks,
                   int stride, int pad) {
  if (xs.size() != 4 || ks.size() != 4) {
    throw std::invalid_argument("conv2d: expected 4-d input and kernel, got " +
                                shape_str(xs) + " and " + shape_str(ks));
  }
  if (xs[1] != ks[1]) {
    throw std::invalid_argument("conv2d: channel mismatch, input " +
                                shape_str(xs) + " kernel " + shape_str(ks));
  }
  if (stride < 1 || pad < 0) throw std::invalid_argument("conv2d: bad stride/pad");
  ConvDims d;
  d.B = xs[0]; d.C = xs[1]; d.H = xs[2]; d.W = xs[3];
  d.F = ks[0]; d.kh = ks[2]; d.kw = ks[3];
  d.stride = stride; d.pad = pad;
  d.OH = (d.H + 2 * pad - d.kh) / stride + 1;
  d.OW = (d.W + 2 * pad - d.kw) / stride + 1;
  if (d.H + 2 * pad < d.kh || d.W + 2 * pad < d.kw || d.OH < 1 || d.OW < 1) {
    throw std::invalid_argument("conv2d: non-positive output dims for input " +
                                shape_str(xs) + " kernel " + shape_str(ks));
  }
  return d;
}

// Sum in ascending value order: the result does not depend on the original
// ordering of the terms.
inline double sorted_sum(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

// ---- Graph ---------------------------------------------------------------

template <typename T>
int Graph<T>::push(Tensor<T> v, std::function<void(Graph&)> back) {
  nodes_.push_back(Node{std::move(v), Tensor<T>{}, std::move(back)});
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename T>
int Graph<T>::leaf(Tensor<T> value) {
  return push(std::move(value), nullptr);
}

template <typename T>
const Tensor<T>& Graph<T>::grad(int id) const {
  const Tensor<T>& g = nodes_[static_cast<size_t>(id)].grad;
  if (g.data.empty()) throw std::logic_error("Graph::grad before backward()");
  return g;
}

template <typename T>
void Graph<T>::check_finite(int id, const std::string& what) const {
  if (!val(id).all_finite()) {
    throw std::runtime_error("non-finite values in " + what);
  }
}

template <typename T>
void Graph<T>::backward(int root) {
  if (val(root).numel() != 1) {
    throw std::invalid_argument("backward: root must be scalar");
  }
  for (auto& n : nodes_) {
    n.grad = Tensor<T>(n.val.shape);
  }
  grad_mut(root).data[0] = T(1);
  for (int i = root; i >= 0; --i) {
    if (nodes_[static_cast<size_t>(i)].back) nodes_[static_cast<size_t>(i)].back(*this);
  }
}

template <typename T>
int Graph<T>::dense(int x, int w, int b) {
  const auto& xs = shape(x);
  const auto& ws = shape(w);
  const auto& bs = shape(b);
  if (xs.size() != 2 || ws.size() != 2 || bs.size() != 1 || xs[1] != ws[0] ||
      ws[1] != bs[0]) {
    throw std::invalid_argument("dense: shape mismatch x" + shape_str(xs) +
                                " w" + shape_str(ws) + " b" + shape_str(bs));
  }
  int B = xs[0], in = xs[1], out = ws[1];
  Tensor<T> y({B, out});
  {
    const T* xp = val(x).ptr();
    const T* wp = val(w).ptr();
    const T* bp = val(b).ptr();
    T* yp = y.ptr();
    parallel_for_work(B, static_cast<int64_t>(B) * in * out,
                      [&](int64_t r0, int64_t r1) {
      for (int64_t r = r0; r < r1; ++r) {
        T* row = yp + r * out;
        std::copy(bp, bp + out, row);
      }
      matmul_acc(xp + r0 * in, wp, yp + r0 * out, static_cast<int>(r1 - r0),
                 in, out);
    });
  }
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x, w, b, B, in, out](Graph& g) {
    const T* dy = g.grad(self).ptr();
    const T* xp = g.val(x).ptr();
    const T* wp = g.val(w).ptr();
    // dx += dy w^T
    T* dx = g.grad_mut(x).ptr();
    const int64_t work = static_cast<int64_t>(B) * in * out;
    parallel_for_work(B, work, [&](int64_t r0, int64_t r1) {
      matmul_abT_acc(dy + r0 * out, wp, dx + r0 * in,
                     static_cast<int>(r1 - r0), out, in);
    });
    // dw += x^T dy
    T* dw = g.grad_mut(w).ptr();
    parallel_for_work(in, work, [&](int64_t m0, int64_t m1) {
      matmul_aTb_rows(xp, dy, dw, in, B, out, static_cast<int>(m0),
                      static_cast<int>(m1));
    });
    // db += column sum of dy
    T* db = g.grad_mut(b).ptr();
    for (int r = 0; r < B; ++r) {
      const T* row = dy + static_cast<int64_t>(r) * out;
      for (int j = 0; j < out; ++j) db[j] += row[j];
    }
  };
  return self;
}

template <typename T>
int Graph<T>::matmul(int a, int b) {
  const auto& as = shape(a);
  const auto& bs = shape(b);
  if (as.size() != 2 || bs.size() != 2 || as[1] != bs[0]) {
    throw std::invalid_argument("matmul: shape mismatch " + shape_str(as) +
                                " x " + shape_str(bs));
  }
  int m = as[0], k = as[1], n = bs[1];
  Tensor<T> y({m, n});
  matmul_acc(val(a).ptr(), val(b).ptr(), y.ptr(), m, k, n);
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, a, b, m, k, n](Graph& g) {
    matmul_abT_acc(g.grad(self).ptr(), g.val(b).ptr(), g.grad_mut(a).ptr(), m,
                   n, k);
    matmul_aTb_rows(g.val(a).ptr(), g.grad(self).ptr(), g.grad_mut(b).ptr(), k,
                    m, n, 0, k);
  };
  return self;
}

template <typename T>
int Graph<T>::conv2d(int x, int k, int stride, int pad) {
  ConvDims d = conv_dims(shape(x), shape(k), stride, pad);
  Tensor<T> y({d.B, d.F, d.OH, d.OW});
  {
    const T* xp = val(x).ptr();
    const T* kp = val(k).ptr();
    T* yp = y.ptr();
    const int64_t work = d.B * d.F * d.out_hw() * d.ck2();
    parallel_for_work(d.B, work, [&](int64_t b0, int64_t b1) {
      std::vector<T> col(static_cast<size_t>(d.ck2() * d.out_hw()));
      for (int64_t bi = b0; bi < b1; ++bi) {
        im2col(xp + bi * d.C * d.H * d.W, d.C, d.H, d.W, d.kh, d.kw, d.stride,
               d.pad, d.OH, d.OW, col.data());
        matmul_acc(kp, col.data(), yp + bi * d.F * d.out_hw(), d.F,
                   static_cast<int>(d.ck2()), static_cast<int>(d.out_hw()));
      }
    });
  }
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x, k, d](Graph& g) {
    const T* dy = g.grad(self).ptr();
    const T* xp = g.val(x).ptr();
    const T* kp = g.val(k).ptr();
    const int64_t col_sz = d.ck2() * d.out_hw();
    const int64_t work = d.B * d.F * d.out_hw() * d.ck2();
    // Re-lower every image once; dK sums over images in index order so the
    // result is identical for any thread count.
    std::vector<T> cols(static_cast<size_t>(col_sz * d.B));
    parallel_for_work(d.B, col_sz * d.B, [&](int64_t b0, int64_t b1) {
      for (int64_t bi = b0; bi < b1; ++bi) {
        im2col(xp + bi * d.C * d.H * d.W, d.C, d.H, d.W, d.kh, d.kw, d.stride,
               d.pad, d.OH, d.OW, cols.data() + bi * col_sz);
      }
    });
    T* dx = g.grad_mut(x).ptr();
    parallel_for_work(d.B, work, [&](int64_t b0, int64_t b1) {
      std::vector<T> dcol(static_cast<size_t>(col_sz));
      for (int64_t bi = b0; bi < b1; ++bi) {
        std::fill(dcol.begin(), dcol.end(), T(0));
        matmul_aTb_rows(kp, dy + bi * d.F * d.out_hw(), dcol.data(),
                        static_cast<int>(d.ck2()), d.F,
                        static_cast<int>(d.out_hw()), 0,
                        static_cast<int>(d.ck2()));
        col2im_acc(dcol.data(), d.C, d.H, d.W, d.kh, d.kw, d.stride, d.pad,
                   d.OH, d.OW, dx + bi * d.C * d.H * d.W);
      }
    });
    T* dk = g.grad_mut(k).ptr();
    parallel_for_work(d.F, work, [&](int64_t f0, int64_t f1) {
      for (int64_t bi = 0; bi < d.B; ++bi) {
        const T* dyb = dy + bi * d.F * d.out_hw();
        const T* colb = cols.data() + bi * col_sz;
        matmul_abT_acc(dyb + f0 * d.out_hw(), colb, dk + f0 * d.ck2(),
                       static_cast<int>(f1 - f0),
                       static_cast<int>(d.out_hw()),
                       static_cast<int>(d.ck2()));
      }
    });
  };
  return self;
}

template <typename T>
int Graph<T>::conv2d_transpose(int x, int k, int stride, int pad) {
  const auto& xs = shape(x);
  const auto& ks = shape(k);
  if (xs.size() != 4 || ks.size() != 4 || xs[1] != ks[0]) {
    throw std::invalid_argument("conv2d_transpose: shape mismatch x" +
                                shape_str(xs) + " k" + shape_str(ks));
  }
  int B = xs[0], Cin = xs[1], H = xs[2], W = xs[3];
  int Cout = ks[1], kh = ks[2], kw = ks[3];
  int OH = (H - 1) * stride - 2 * pad + kh;
  int OW = (W - 1) * stride - 2 * pad + kw;
  if (OH < 1 || OW < 1) {
    throw std::invalid_argument("conv2d_transpose: non-positive output dims");
  }
  // The op is exactly the data-gradient of a conv with kernel [Cin,Cout,kh,kw]
  // mapping [B,Cout,OH,OW] -> [B,Cin,H,W].
  ConvDims d;
  d.B = B; d.C = Cout; d.H = OH; d.W = OW; d.F = Cin;
  d.kh = kh; d.kw = kw; d.stride = stride; d.pad = pad; d.OH = H; d.OW = W;

  Tensor<T> y({B, Cout, OH, OW});
  {
    const T* xp = val(x).ptr();
    const T* kp = val(k).ptr();
    T* yp = y.ptr();
    parallel_for_work(B, d.B * d.F * d.out_hw() * d.ck2(),
                      [&](int64_t b0, int64_t b1) {
      std::vector<T> dcol(static_cast<size_t>(d.ck2() * d.out_hw()));
      for (int64_t bi = b0; bi < b1; ++bi) {
        std::fill(dcol.begin(), dcol.end(), T(0));
        matmul_aTb_rows(kp, xp + bi * d.F * d.out_hw(), dcol.data(),
                        static_cast<int>(d.ck2()), d.F,
                        static_cast<int>(d.out_hw()), 0,
                        static_cast<int>(d.ck2()));
        col2im_acc(dcol.data(), d.C, d.H, d.W, d.kh, d.kw, d.stride, d.pad,
                   d.OH, d.OW, yp + bi * d.C * d.H * d.W);
      }
    });
  }
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x, k, d](Graph& g) {
    const T* dy = g.grad(self).ptr();  // [B,Cout,OH,OW] = conv "input" side
    const T* kp = g.val(k).ptr();
    const T* xp = g.val(x).ptr();
    const int64_t col_sz = d.ck2() * d.out_hw();
    const int64_t work = d.B * d.F * d.out_hw() * d.ck2();
    std::vector<T> cols(static_cast<size_t>(col_sz * d.B));
    parallel_for_work(d.B, col_sz * d.B, [&](int64_t b0, int64_t b1) {
      for (int64_t bi = b0; bi < b1; ++bi) {
        im2col(dy + bi * d.C * d.H * d.W, d.C, d.H, d.W, d.kh, d.kw, d.stride,
               d.pad, d.OH, d.OW, cols.data() + bi * col_sz);
      }
    });
    // dX = conv_forward(dY, K)
    T* dx = g.grad_mut(x).ptr();
    parallel_for_work(d.B, work, [&](int64_t b0, int64_t b1) {
      for (int64_t bi = b0; bi < b1; ++bi) {
        matmul_acc(kp, cols.data() + bi * col_sz, dx + bi * d.F * d.out_hw(),
                   d.F, static_cast<int>(d.ck2()),
                   static_cast<int>(d.out_hw()));
      }
    });
    // dK[f,:] = sum_b x_b[f,:] col_b^T
    T* dk = g.grad_mut(k).ptr();
    parallel_for_work(d.F, work, [&](int64_t f0, int64_t f1) {
      for (int64_t bi = 0; bi < d.B; ++bi) {
        const T* xb = xp + bi * d.F * d.out_hw();
        const T* colb = cols.data() + bi * col_sz;
        matmul_abT_acc(xb + f0 * d.out_hw(), colb, dk + f0 * d.ck2(),
                       static_cast<int>(f1 - f0),
                       static_cast<int>(d.out_hw()),
                       static_cast<int>(d.ck2()));
      }
    });
  };
  return self;
}

template <typename T>
int Graph<T>::bias_channels(int x, int b) {
  const auto& xs = shape(x);
  const auto& bs = shape(b);
  if (xs.size() != 4 || bs.size() != 1 || bs[0] != xs[1]) {
    throw std::invalid_argument("bias_channels: shape mismatch x" +
                                shape_str(xs) + " b" + shape_str(bs));
  }
  int B = xs[0], C = xs[1];
  int64_t hw = static_cast<int64_t>(xs[2]) * xs[3];
  Tensor<T> y = val(x);
  {
    const T* bp = val(b).ptr();
    T* yp = y.ptr();
    for (int bi = 0; bi < B; ++bi) {
      for (int c = 0; c < C; ++c) {
        T* p = yp + (static_cast<int64_t>(bi) * C + c) * hw;
        T add = bp[c];
        for (int64_t i = 0; i < hw; ++i) p[i] += add;
      }
    }
  }
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x, b, B, C, hw](Graph& g) {
    const T* dy = g.grad(self).ptr();
    T* dx = g.grad_mut(x).ptr();
    const int64_t n = static_cast<int64_t>(B) * C * hw;
    for (int64_t i = 0; i < n; ++i) dx[i] += dy[i];
    T* db = g.grad_mut(b).ptr();
    for (int bi = 0; bi < B; ++bi) {
      for (int c = 0; c < C; ++c) {
        const T* p = dy + (static_cast<int64_t>(bi) * C + c) * hw;
        T acc = T(0);
        for (int64_t i = 0; i < hw; ++i) acc += p[i];
        db[c] += acc;
      }
    }
  };
  return self;
}

template <typename T>
int Graph<T>::leaky_relu(int x, T slope) {
  if (!(slope > T(0) && slope < T(1))) {
    throw std::invalid_argument("leaky_relu: slope must be in (0,1)");
  }
  Tensor<T> y = val(x);
  for (T& v : y.data) {
    if (!(v > T(0))) v *= slope;
  }
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x, slope](Graph& g) {
    const T* dy = g.grad(self).ptr();
    const T* xp = g.val(x).ptr();
    T* dx = g.grad_mut(x).ptr();
    const int64_t n = g.val(x).numel();
    // Subgradient at exactly 0 takes the slope branch.
    for (int64_t i = 0; i < n; ++i) dx[i] += xp[i] > T(0) ? dy[i] : slope * dy[i];
  };
  return self;
}

template <typename T>
int Graph<T>::add(int a, int b) {
  if (!val(a).same_shape(val(b))) {
    throw std::invalid_argument("add: shape mismatch " + shape_str(shape(a)) +
                                " vs " + shape_str(shape(b)));
  }
  Tensor<T> y = val(a);
  const T* bp = val(b).ptr();
  for (int64_t i = 0; i < y.numel(); ++i) y.data[static_cast<size_t>(i)] += bp[i];
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, a, b](Graph& g) {
    const T* dy = g.grad(self).ptr();
    T* da = g.grad_mut(a).ptr();
    T* db = g.grad_mut(b).ptr();
    const int64_t n = g.val(a).numel();
    for (int64_t i = 0; i < n; ++i) {
      da[i] += dy[i];
      db[i] += dy[i];
    }
  };
  return self;
}

template <typename T>
int Graph<T>::sub(int a, int b) {
  if (!val(a).same_shape(val(b))) {
    throw std::invalid_argument("sub: shape mismatch " + shape_str(shape(a)) +
                                " vs " + shape_str(shape(b)));
  }
  Tensor<T> y = val(a);
  const T* bp = val(b).ptr();
  for (int64_t i = 0; i < y.numel(); ++i) y.data[static_cast<size_t>(i)] -= bp[i];
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, a, b](Graph& g) {
    const T* dy = g.grad(self).ptr();
    T* da = g.grad_mut(a).ptr();
    T* db = g.grad_mut(b).ptr();
    const int64_t n = g.val(a).numel();
    for (int64_t i = 0; i < n; ++i) {
      da[i] += dy[i];
      db[i] -= dy[i];
    }
  };
  return self;
}

template <typename T>
int Graph<T>::square(int x) {
  Tensor<T> y = val(x);
  for (T& v : y.data) v *= v;
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x](Graph& g) {
    const T* dy = g.grad(self).ptr();
    const T* xp = g.val(x).ptr();
    T* dx = g.grad_mut(x).ptr();
    const int64_t n = g.val(x).numel();
    for (int64_t i = 0; i < n; ++i) dx[i] += T(2) * xp[i] * dy[i];
  };
  return self;
}

template <typename T>
int Graph<T>::scale(int x, T c) {
  Tensor<T> y = val(x);
  for (T& v : y.data) v *= c;
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x, c](Graph& g) {
    const T* dy = g.grad(self).ptr();
    T* dx = g.grad_mut(x).ptr();
    const int64_t n = g.val(x).numel();
    for (int64_t i = 0; i < n; ++i) dx[i] += c * dy[i];
  };
  return self;
}

template <typename T>
int Graph<T>::sum(int x) {
  double acc = 0.0;
  for (T v : val(x).data) acc += static_cast<double>(v);
  Tensor<T> y({1});
  y.data[0] = static_cast<T>(acc);
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x](Graph& g) {
    T dy = g.grad(self).data[0];
    T* dx = g.grad_mut(x).ptr();
    const int64_t n = g.val(x).numel();
    for (int64_t i = 0; i < n; ++i) dx[i] += dy;
  };
  return self;
}

template <typename T>
int Graph<T>::mean(int x) {
  const int64_t n = val(x).numel();
  double acc = 0.0;
  for (T v : val(x).data) acc += static_cast<double>(v);
  Tensor<T> y({1});
  y.data[0] = static_cast<T>(acc / static_cast<double>(n));
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x, n](Graph& g) {
    T dy = static_cast<T>(static_cast<double>(g.grad(self).data[0]) /
                          static_cast<double>(n));
    T* dx = g.grad_mut(x).ptr();
    for (int64_t i = 0; i < n; ++i) dx[i] += dy;
  };
  return self;
}

template <typename T>
int Graph<T>::reshape(int x, std::vector<int> s) {
  if (Tensor<T>::numel_of(s) != val(x).numel()) {
    throw std::invalid_argument("reshape: element count mismatch " +
                                shape_str(shape(x)) + " -> " + shape_str(s));
  }
  Tensor<T> y(std::move(s), val(x).data);
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x](Graph& g) {
    const T* dy = g.grad(self).ptr();
    T* dx = g.grad_mut(x).ptr();
    const int64_t n = g.val(x).numel();
    for (int64_t i = 0; i < n; ++i) dx[i] += dy[i];
  };
  return self;
}

template <typename T>
int Graph<T>::concat_cols(int a, int b) {
  const auto& as = shape(a);
  const auto& bs = shape(b);
  if (as.size() != 2 || bs.size() != 2 || as[0] != bs[0]) {
    throw std::invalid_argument("concat_cols: shape mismatch " +
                                shape_str(as) + " vs " + shape_str(bs));
  }
  int B = as[0], n1 = as[1], n2 = bs[1];
  Tensor<T> y({B, n1 + n2});
  for (int r = 0; r < B; ++r) {
    std::copy_n(val(a).ptr() + static_cast<int64_t>(r) * n1, n1,
                y.ptr() + static_cast<int64_t>(r) * (n1 + n2));
    std::copy_n(val(b).ptr() + static_cast<int64_t>(r) * n2, n2,
                y.ptr() + static_cast<int64_t>(r) * (n1 + n2) + n1);
  }
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, a, b, B, n1, n2](Graph& g) {
    const T* dy = g.grad(self).ptr();
    T* da = g.grad_mut(a).ptr();
    T* db = g.grad_mut(b).ptr();
    for (int r = 0; r < B; ++r) {
      const T* row = dy + static_cast<int64_t>(r) * (n1 + n2);
      for (int j = 0; j < n1; ++j) da[static_cast<int64_t>(r) * n1 + j] += row[j];
      for (int j = 0; j < n2; ++j) db[static_cast<int64_t>(r) * n2 + j] += row[n1 + j];
    }
  };
  return self;
}

template <typename T>
int Graph<T>::slice_cols(int x, int from, int to) {
  const auto& xs = shape(x);
  if (xs.size() != 2 || from < 0 || to > xs[1] || from >= to) {
    throw std::invalid_argument("slice_cols: bad range");
  }
  int B = xs[0], n = xs[1], m = to - from;
  Tensor<T> y({B, m});
  for (int r = 0; r < B; ++r) {
    std::copy_n(val(x).ptr() + static_cast<int64_t>(r) * n + from, m,
                y.ptr() + static_cast<int64_t>(r) * m);
  }
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, x, B, n, m, from](Graph& g) {
    const T* dy = g.grad(self).ptr();
    T* dx = g.grad_mut(x).ptr();
    for (int r = 0; r < B; ++r) {
      for (int j = 0; j < m; ++j) {
        dx[static_cast<int64_t>(r) * n + from + j] += dy[static_cast<int64_t>(r) * m + j];
      }
    }
  };
  return self;
}

template <typename T>
int Graph<T>::apply_linear_map(int p, int z) {
  const auto& ps = shape(p);
  const auto& zs = shape(z);
  if (ps.size() != 2 || zs.size() != 2 || ps[0] != zs[0]) {
    throw std::invalid_argument("apply_linear_map: batch mismatch");
  }
  int B = ps[0], d = zs[1];
  if (ps[1] != d * d + d) {
    throw std::invalid_argument("apply_linear_map: params per row must be d*d+d");
  }
  Tensor<T> y({B, d});
  {
    const T* pp = val(p).ptr();
    const T* zp = val(z).ptr();
    T* yp = y.ptr();
    for (int i = 0; i < B; ++i) {
      const T* A = pp + static_cast<int64_t>(i) * (d * d + d);
      const T* c = A + d * d;
      const T* zi = zp + static_cast<int64_t>(i) * d;
      T* yi = yp + static_cast<int64_t>(i) * d;
      for (int r = 0; r < d; ++r) {
        double acc = static_cast<double>(c[r]);
        for (int cc = 0; cc < d; ++cc) acc += static_cast<double>(A[r * d + cc]) * zi[cc];
        yi[r] = static_cast<T>(acc);
      }
    }
  }
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, p, z, B, d](Graph& g) {
    const T* dy = g.grad(self).ptr();
    const T* pp = g.val(p).ptr();
    const T* zp = g.val(z).ptr();
    T* dp = g.grad_mut(p).ptr();
    T* dz = g.grad_mut(z).ptr();
    for (int i = 0; i < B; ++i) {
      const T* A = pp + static_cast<int64_t>(i) * (d * d + d);
      const T* zi = zp + static_cast<int64_t>(i) * d;
      const T* dyi = dy + static_cast<int64_t>(i) * d;
      T* dA = dp + static_cast<int64_t>(i) * (d * d + d);
      T* dc = dA + d * d;
      T* dzi = dz + static_cast<int64_t>(i) * d;
      for (int r = 0; r < d; ++r) {
        T gr = dyi[r];
        dc[r] += gr;
        for (int cc = 0; cc < d; ++cc) {
          dA[r * d + cc] += gr * zi[cc];
          dzi[cc] += A[r * d + cc] * gr;
        }
      }
    }
  };
  return self;
}

template <typename T>
int Graph<T>::mse(int a, int b) {
  if (!val(a).same_shape(val(b))) {
    throw std::invalid_argument("mse: shape mismatch " + shape_str(shape(a)) +
                                " vs " + shape_str(shape(b)));
  }
  const int64_t n = val(a).numel();
  double acc = 0.0;
  {
    const T* ap = val(a).ptr();
    const T* bp = val(b).ptr();
    for (int64_t i = 0; i < n; ++i) {
      double dlt = static_cast<double>(ap[i]) - static_cast<double>(bp[i]);
      acc += dlt * dlt;
    }
  }
  Tensor<T> y({1});
  y.data[0] = static_cast<T>(acc / static_cast<double>(n));
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back = [self, a, b, n](Graph& g) {
    const double gy = static_cast<double>(g.grad(self).data[0]);
    const T* ap = g.val(a).ptr();
    const T* bp = g.val(b).ptr();
    T* da = g.grad_mut(a).ptr();
    T* db = g.grad_mut(b).ptr();
    const double f = 2.0 * gy / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
      T v = static_cast<T>(f * (static_cast<double>(ap[i]) - static_cast<double>(bp[i])));
      da[i] += v;
      db[i] -= v;
    }
  };
  return self;
}

template <typename T>
int Graph<T>::infonce(int zhat, int znext, Similarity sim, bool include_positive) {
  const auto& hs = shape(zhat);
  const auto& ns = shape(znext);
  if (hs.size() != 2 || ns.size() != 2 || hs != ns) {
    throw std::invalid_argument("infonce: embeddings must be [B,d] and match");
  }
  const int B = hs[0], d = hs[1];
  if (B < 2) throw std::invalid_argument("infonce: batch size must be >= 2");

  const T* zh = val(zhat).ptr();
  const T* zn = val(znext).ptr();

  // Log-similarity matrix in double.
  std::vector<double> s(static_cast<size_t>(B) * B);
  for (int i = 0; i < B; ++i) {
    const T* a = zh + static_cast<int64_t>(i) * d;
    for (int j = 0; j < B; ++j) {
      const T* b = zn + static_cast<int64_t>(j) * d;
      double v = 0.0;
      if (sim == Similarity::kE2) {
        for (int c = 0; c < d; ++c) {
          double dlt = static_cast<double>(a[c]) - static_cast<double>(b[c]);
          v -= dlt * dlt;
        }
      } else {
        for (int c = 0; c < d; ++c) {
          v += static_cast<double>(a[c]) * static_cast<double>(b[c]);
        }
      }
      s[static_cast<size_t>(i) * B + j] = v;
    }
  }

  std::vector<double> lse(B);
  std::vector<double> row_loss(B);
  std::vector<double> terms;
  for (int i = 0; i < B; ++i) {
    double m = -1e308;
    for (int j = 0; j < B; ++j) {
      if (!include_positive && j == i) continue;
      m = std::max(m, s[static_cast<size_t>(i) * B + j]);
    }
    terms.clear();
    for (int j = 0; j < B; ++j) {
      if (!include_positive && j == i) continue;
      terms.push_back(std::exp(s[static_cast<size_t>(i) * B + j] - m));
    }
    lse[i] = m + std::log(sorted_sum(terms));
    row_loss[i] = lse[i] - s[static_cast<size_t>(i) * B + i];
  }
  std::vector<double> losses = row_loss;
  const double loss = sorted_sum(losses) / static_cast<double>(B);

  Tensor<T> y({1});
  y.data[0] = static_cast<T>(loss);
  int self = push(std::move(y), nullptr);
  nodes_[static_cast<size_t>(self)].back =
      [self, zhat, znext, B, d, sim, include_positive, s = std::move(s),
       lse = std::move(lse)](Graph& g) {
        const double gy = static_cast<double>(g.grad(self).data[0]);
        const T* zh = g.val(zhat).ptr();
        const T* zn = g.val(znext).ptr();
        T* dh = g.grad_mut(zhat).ptr();
        T* dn = g.grad_mut(znext).ptr();
        const double invb = gy / static_cast<double>(B);
        for (int i = 0; i < B; ++i) {
          const T* a = zh + static_cast<int64_t>(i) * d;
          for (int j = 0; j < B; ++j) {
            double w = 0.0;
            if (include_positive || j != i) {
              w = std::exp(s[static_cast<size_t>(i) * B + j] - lse[i]);
            }
            double ds = (w - (j == i ? 1.0 : 0.0)) * invb;
            if (ds == 0.0) continue;
            const T* b = zn + static_cast<int64_t>(j) * d;
            T* dhi = dh + static_cast<int64_t>(i) * d;
            T* dnj = dn + static_cast<int64_t>(j) * d;
            if (sim == Similarity::kE2) {
              for (int c = 0; c < d; ++c) {
                double dlt = static_cast<double>(a[c]) - static_cast<double>(b[c]);
                dhi[c] += static_cast<T>(-2.0 * dlt * ds);
                dnj[c] += static_cast<T>(2.0 * dlt * ds);
              }
            } else {
              for (int c = 0; c < d; ++c) {
                dhi[c] += static_cast<T>(static_cast<double>(b[c]) * ds);
                dnj[c] += static_cast<T>(static_cast<double>(a[c]) * ds);
              }
            }
          }
        }
      };
  return self;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace cfm::nn
