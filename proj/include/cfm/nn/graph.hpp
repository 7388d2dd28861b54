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

#ifndef CFM_NN_GRAPH_HPP_
#define CFM_NN_GRAPH_HPP_

#include <functional>
#include <string>
#include <vector>

#include "cfm/nn/tensor.hpp"

namespace cfm::nn {

enum class Similarity { kE2, kLogBilinear };

Similarity similarity_from_string(const std::string& s);
std::string to_string(Similarity s);

// Reverse-mode autodiff tape. Nodes are created by the op member functions
// and identified by index; backward() walks the tape in reverse and
// accumulates gradients for every node.
//
// Scalar reductions (sum, mean, logsumexp inside infonce, mse) accumulate in
// double regardless of T. The contrastive reductions additionally sum terms
// in value-sorted order so the loss is bit-identical under permutation of the
// batch rows.
template <typename T>
class Graph {
 public:
  int leaf(Tensor<T> value);

  const Tensor<T>& val(int id) const { return nodes_[static_cast<size_t>(id)].val; }
  const Tensor<T>& grad(int id) const;
  const std::vector<int>& shape(int id) const { return val(id).shape; }

  // y = x W + b.  x:[B,in] W:[in,out] b:[out]
  int dense(int x, int w, int b);
  // C = A B.  a:[m,k] b:[k,n]
  int matmul(int a, int b);
  // Cross-correlation. x:[B,C,H,W] k:[F,C,kh,kw] -> [B,F,OH,OW]
  int conv2d(int x, int k, int stride, int pad);
  // Transposed convolution. x:[B,Cin,H,W] k:[Cin,Cout,kh,kw] -> [B,Cout,OH,OW]
  // with OH = (H-1)*stride - 2*pad + kh.
  int conv2d_transpose(int x, int k, int stride, int pad);
  // Adds b[c] to every spatial location of channel c. x:[B,C,H,W] b:[C]
  int bias_channels(int x, int b);
  int leaky_relu(int x, T slope);
  int add(int a, int b);
  int sub(int a, int b);
  int square(int x);
  int scale(int x, T c);
  int sum(int x);   // -> scalar [1]
  int mean(int x);  // -> scalar [1]
  int reshape(int x, std::vector<int> s);
  int concat_cols(int a, int b);               // [B,n1],[B,n2] -> [B,n1+n2]
  int slice_cols(int x, int from, int to);     // [B,n] -> [B,to-from]
  // Per-row linear map: p rows hold (A row-major | c); y_i = A_i z_i + c_i.
  // p:[B,d*d+d] z:[B,d] -> [B,d]
  int apply_linear_map(int p, int z);
  // Mean squared error over all elements -> scalar.
  int mse(int a, int b);
  // InfoNCE over embedding rows: anchors zhat[i] scored against all rows of
  // znext; row i is the positive. Log-space throughout; similarities are
  // never exponentiated directly.  zhat,znext:[B,d] -> scalar
  int infonce(int zhat, int znext, Similarity sim, bool include_positive);

  // Seeds root (must be scalar) with gradient 1 and accumulates gradients
  // for every node on the tape.
  void backward(int root);

  void check_finite(int id, const std::string& what) const;
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Tensor<T> val;
    Tensor<T> grad;
    std::function<void(Graph&)> back;  // null for leaves
  };

  int push(Tensor<T> v, std::function<void(Graph&)> back);
  Tensor<T>& grad_mut(int id) { return nodes_[static_cast<size_t>(id)].grad; }

  std::vector<Node> nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace cfm::nn

#endif  // CFM_NN_GRAPH_HPP_
