#pragma once

#include <string>
#include <vector>

#include "prunekit/net/rng.hpp"
#include "prunekit/net/tensor.hpp"

namespace prunekit {

/// Handle to a trainable tensor and its gradient buffer.
struct ParamTensor {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
  bool decay = true;  // weight decay applies (off for norms and biases)
};

/// 3x3 / 1x1 convolution, no bias (normalization follows every conv here).
/// im2col + GEMM per sample; backward rebuilds the column buffer from the
/// cached input instead of keeping it.
struct Conv2d {
  int in_ch = 0, out_ch = 0, k = 3, stride = 1, pad = 1;
  Tensor w, dw;     // [out_ch, in_ch, k, k]
  Tensor x_cache;   // [N, in_ch, H, W]

  void init(int in, int out, int kernel, int str, Rng& rng);
  Tensor forward(const Tensor& x);
  /// Accumulates dw; returns dx unless want_dx is false.
  Tensor backward(const Tensor& dy, bool want_dx = true);
  void collect(const std::string& prefix, std::vector<ParamTensor>& out);
  std::int64_t out_hw(int h) const { return (h + 2 * pad - k) / stride + 1; }
};

struct BatchNorm2d {
  int ch = 0;
  float eps = 1e-5f, momentum = 0.1f;
  Tensor gamma, beta, dgamma, dbeta;
  Tensor running_mean, running_var;
  // caches
  Tensor xhat;
  std::vector<float> inv_std;
  bool forward_was_training = false;

  void init(int channels);
  Tensor forward(const Tensor& x, bool training);
  Tensor backward(const Tensor& dy);
  void collect(const std::string& prefix, std::vector<ParamTensor>& out);
};

struct ReLU {
  Tensor mask;
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy) const;
};

/// Fully connected layer on [rows, in] inputs.
struct Linear {
  int in = 0, out = 0;
  Tensor w, dw;  // [out, in]
  Tensor b, db;  // [out]
  Tensor x_cache;

  void init(int in_dim, int out_dim, float weight_std, Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy, bool want_dx = true);
  void collect(const std::string& prefix, std::vector<ParamTensor>& out);
};

struct GlobalAvgPool2d {
  std::vector<int> in_shape;
  Tensor forward(const Tensor& x);  // [N,C,H,W] -> [N,C]
  Tensor backward(const Tensor& dy) const;
};

/// Normalization over the last axis of [rows, dim] inputs.
struct LayerNorm {
  int dim = 0;
  float eps = 1e-5f;
  Tensor gamma, beta, dgamma, dbeta;
  Tensor xhat;
  std::vector<float> inv_std;

  void init(int d);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(const std::string& prefix, std::vector<ParamTensor>& out);
};

/// Scaled dot-product multi-head self-attention over [N, T, D].
struct MultiHeadAttention {
  int dim = 0, heads = 0;
  Linear wq, wk, wv, wo;
  // caches
  Tensor q, k, v;   // [N, T, D]
  Tensor attn;      // [N, heads, T, T]

  void init(int model_dim, int num_heads, Rng& rng);
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void collect(const std::string& prefix, std::vector<ParamTensor>& out);
};

/// Mean softmax cross-entropy; returns loss and writes dL/dlogits.
double softmax_xent(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits);

}  // namespace prunekit
