#include "prunekit/net/layers.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace prunekit {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRow = Eigen::Map<RowMat>;
using CMapRow = Eigen::Map<const RowMat>;
using ColMat = Eigen::MatrixXf;

// Gathers one sample's receptive fields into a (in_ch*k*k) x (Hout*Wout)
// column matrix. Out-of-bounds taps read as zero.
void im2col(const float* x, int ch, int h, int w, int k, int stride, int pad,
            int hout, int wout, ColMat& col) {
  for (int oy = 0; oy < hout; ++oy) {
    for (int ox = 0; ox < wout; ++ox) {
      const int q = oy * wout + ox;
      float* dst = col.data() + static_cast<std::ptrdiff_t>(q) * col.rows();
      for (int ci = 0; ci < ch; ++ci) {
        const float* plane = x + static_cast<std::ptrdiff_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride + ky - pad;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride + kx - pad;
            *dst++ = (iy >= 0 && iy < h && ix >= 0 && ix < w) ? plane[iy * w + ix] : 0.0f;
          }
        }
      }
    }
  }
}

// Scatter-add of a column matrix back onto the input plane.
void col2im_add(const ColMat& col, int ch, int h, int w, int k, int stride, int pad,
                int hout, int wout, float* dx) {
  for (int oy = 0; oy < hout; ++oy) {
    for (int ox = 0; ox < wout; ++ox) {
      const int q = oy * wout + ox;
      const float* src = col.data() + static_cast<std::ptrdiff_t>(q) * col.rows();
      for (int ci = 0; ci < ch; ++ci) {
        float* plane = dx + static_cast<std::ptrdiff_t>(ci) * h * w;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * stride + ky - pad;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * stride + kx - pad;
            float val = *src++;
            if (iy >= 0 && iy < h && ix >= 0 && ix < w) plane[iy * w + ix] += val;
          }
        }
      }
    }
  }
}

}  // namespace

void Conv2d::init(int in, int out, int kernel, int str, Rng& rng) {
  in_ch = in;
  out_ch = out;
  k = kernel;
  stride = str;
  pad = kernel == 1 ? 0 : kernel / 2;
  w = Tensor({out_ch, in_ch, k, k});
  dw = Tensor(w.shape);
  const float std_dev = std::sqrt(2.0f / static_cast<float>(in_ch * k * k));
  for (auto& value : w.v) value = rng.normal(0.0f, std_dev);
}

Tensor Conv2d::forward(const Tensor& x) {
  const int n = x.dim(0), h = x.dim(2), wd = x.dim(3);
  require_shape(x, {n, in_ch, h, wd}, "conv input");
  const int hout = static_cast<int>(out_hw(h));
  const int wout = static_cast<int>(out_hw(wd));
  const int p = hout * wout;
  const int kk = in_ch * k * k;

  x_cache = x;
  Tensor y({n, out_ch, hout, wout});
  ColMat col(kk, p);
  CMapRow wm(w.data(), out_ch, kk);
  for (int i = 0; i < n; ++i) {
    im2col(x.data() + static_cast<std::ptrdiff_t>(i) * in_ch * h * wd, in_ch, h, wd, k,
           stride, pad, hout, wout, col);
    MapRow om(y.data() + static_cast<std::ptrdiff_t>(i) * out_ch * p, out_ch, p);
    om.noalias() = wm * col;
  }
  return y;
}

Tensor Conv2d::backward(const Tensor& dy, bool want_dx) {
  const int n = x_cache.dim(0), h = x_cache.dim(2), wd = x_cache.dim(3);
  const int hout = dy.dim(2), wout = dy.dim(3);
  const int p = hout * wout;
  const int kk = in_ch * k * k;

  Tensor dx;
  if (want_dx) dx = Tensor(x_cache.shape);
  ColMat col(kk, p);
  ColMat dcol(kk, p);
  CMapRow wm(w.data(), out_ch, kk);
  MapRow dwm(dw.data(), out_ch, kk);
  for (int i = 0; i < n; ++i) {
    im2col(x_cache.data() + static_cast<std::ptrdiff_t>(i) * in_ch * h * wd, in_ch, h, wd,
           k, stride, pad, hout, wout, col);
    CMapRow gm(dy.data() + static_cast<std::ptrdiff_t>(i) * out_ch * p, out_ch, p);
    dwm.noalias() += gm * col.transpose();
    if (want_dx) {
      dcol.noalias() = wm.transpose() * gm;
      col2im_add(dcol, in_ch, h, wd, k, stride, pad, hout, wout,
                 dx.data() + static_cast<std::ptrdiff_t>(i) * in_ch * h * wd);
    }
  }
  return dx;
}

void Conv2d::collect(const std::string& prefix, std::vector<ParamTensor>& out) {
  out.push_back({prefix + ".w", &w, &dw, true});
}

void BatchNorm2d::init(int channels) {
  ch = channels;
  gamma = Tensor({ch});
  gamma.fill(1.0f);
  beta = Tensor({ch});
  dgamma = Tensor({ch});
  dbeta = Tensor({ch});
  running_mean = Tensor({ch});
  running_var = Tensor({ch});
  running_var.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
  const int n = x.dim(0), h = x.dim(2), wd = x.dim(3);
  const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
  const std::int64_t m = static_cast<std::int64_t>(n) * plane;

  forward_was_training = training;
  xhat = Tensor(x.shape);
  inv_std.assign(static_cast<std::size_t>(ch), 0.0f);
  Tensor y(x.shape);

  for (int c = 0; c < ch; ++c) {
    float mean, istd;
    if (training) {
      double sum = 0.0, sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const float* p = x.data() + (static_cast<std::int64_t>(i) * ch + c) * plane;
        for (std::int64_t j = 0; j < plane; ++j) {
          sum += p[j];
          sq += static_cast<double>(p[j]) * p[j];
        }
      }
      mean = static_cast<float>(sum / static_cast<double>(m));
      float var = static_cast<float>(sq / static_cast<double>(m)) - mean * mean;
      if (var < 0.0f) var = 0.0f;
      istd = 1.0f / std::sqrt(var + eps);
      // unbiased variance feeds the running estimate
      const float unbiased = m > 1 ? var * static_cast<float>(m) / static_cast<float>(m - 1) : var;
      running_mean.v[c] = (1.0f - momentum) * running_mean.v[c] + momentum * mean;
      running_var.v[c] = (1.0f - momentum) * running_var.v[c] + momentum * unbiased;
    } else {
      mean = running_mean.v[c];
      istd = 1.0f / std::sqrt(running_var.v[c] + eps);
    }
    inv_std[static_cast<std::size_t>(c)] = istd;
    const float g = gamma.v[c], bt = beta.v[c];
    for (int i = 0; i < n; ++i) {
      const std::int64_t base = (static_cast<std::int64_t>(i) * ch + c) * plane;
      const float* px = x.data() + base;
      float* ph = xhat.data() + base;
      float* py = y.data() + base;
      for (std::int64_t j = 0; j < plane; ++j) {
        const float norm = (px[j] - mean) * istd;
        ph[j] = norm;
        py[j] = g * norm + bt;
      }
    }
  }
  return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
  const int n = dy.dim(0), h = dy.dim(2), wd = dy.dim(3);
  const std::int64_t plane = static_cast<std::int64_t>(h) * wd;
  const std::int64_t m = static_cast<std::int64_t>(n) * plane;
  Tensor dx(dy.shape);

  for (int c = 0; c < ch; ++c) {
    const float g = gamma.v[c];
    const float istd = inv_std[static_cast<std::size_t>(c)];
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::int64_t base = (static_cast<std::int64_t>(i) * ch + c) * plane;
      const float* pdy = dy.data() + base;
      const float* ph = xhat.data() + base;
      for (std::int64_t j = 0; j < plane; ++j) {
        sum_dy += pdy[j];
        sum_dy_xhat += static_cast<double>(pdy[j]) * ph[j];
      }
    }
    dgamma.v[c] += static_cast<float>(sum_dy_xhat);
    dbeta.v[c] += static_cast<float>(sum_dy);

    if (forward_was_training) {
      const float inv_m = 1.0f / static_cast<float>(m);
      const float a = g * istd;
      const float mean_dy = static_cast<float>(sum_dy) * inv_m;
      const float mean_dy_xhat = static_cast<float>(sum_dy_xhat) * inv_m;
      for (int i = 0; i < n; ++i) {
        const std::int64_t base = (static_cast<std::int64_t>(i) * ch + c) * plane;
        const float* pdy = dy.data() + base;
        const float* ph = xhat.data() + base;
        float* pdx = dx.data() + base;
        for (std::int64_t j = 0; j < plane; ++j) {
          pdx[j] = a * (pdy[j] - mean_dy - ph[j] * mean_dy_xhat);
        }
      }
    } else {
      const float a = g * istd;
      for (int i = 0; i < n; ++i) {
        const std::int64_t base = (static_cast<std::int64_t>(i) * ch + c) * plane;
        const float* pdy = dy.data() + base;
        float* pdx = dx.data() + base;
        for (std::int64_t j = 0; j < plane; ++j) pdx[j] = a * pdy[j];
      }
    }
  }
  return dx;
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<ParamTensor>& out) {
  out.push_back({prefix + ".gamma", &gamma, &dgamma, false});
  out.push_back({prefix + ".beta", &beta, &dbeta, false});
}

Tensor ReLU::forward(const Tensor& x) {
  mask = Tensor(x.shape);
  Tensor y(x.shape);
  for (std::int64_t i = 0; i < x.size(); ++i) {
    const bool on = x.v[static_cast<std::size_t>(i)] > 0.0f;
    mask.v[static_cast<std::size_t>(i)] = on ? 1.0f : 0.0f;
    y.v[static_cast<std::size_t>(i)] = on ? x.v[static_cast<std::size_t>(i)] : 0.0f;
  }
  return y;
}

Tensor ReLU::backward(const Tensor& dy) const {
  Tensor dx(dy.shape);
  for (std::int64_t i = 0; i < dy.size(); ++i) {
    dx.v[static_cast<std::size_t>(i)] =
        dy.v[static_cast<std::size_t>(i)] * mask.v[static_cast<std::size_t>(i)];
  }
  return dx;
}

void Linear::init(int in_dim, int out_dim, float weight_std, Rng& rng) {
  in = in_dim;
  out = out_dim;
  w = Tensor({out, in});
  dw = Tensor(w.shape);
  b = Tensor({out});
  db = Tensor({out});
  for (auto& value : w.v) value = rng.normal(0.0f, weight_std);
}

Tensor Linear::forward(const Tensor& x) {
  const auto rows = static_cast<int>(x.size() / in);
  x_cache = x;
  std::vector<int> out_shape = x.shape;
  out_shape.back() = out;
  Tensor y(out_shape);
  CMapRow xm(x.data(), rows, in);
  CMapRow wm(w.data(), out, in);
  MapRow ym(y.data(), rows, out);
  ym.noalias() = xm * wm.transpose();
  CMapRow bm(b.data(), 1, out);
  ym.rowwise() += bm.row(0);
  return y;
}

Tensor Linear::backward(const Tensor& dy, bool want_dx) {
  const auto rows = static_cast<int>(dy.size() / out);
  CMapRow gm(dy.data(), rows, out);
  CMapRow xm(x_cache.data(), rows, in);
  MapRow dwm(dw.data(), out, in);
  dwm.noalias() += gm.transpose() * xm;
  MapRow dbm(db.data(), 1, out);
  dbm.row(0) += gm.colwise().sum();

  Tensor dx;
  if (want_dx) {
    dx = Tensor(x_cache.shape);
    CMapRow wm(w.data(), out, in);
    MapRow dxm(dx.data(), rows, in);
    dxm.noalias() = gm * wm;
  }
  return dx;
}

void Linear::collect(const std::string& prefix, std::vector<ParamTensor>& out_params) {
  out_params.push_back({prefix + ".w", &w, &dw, true});
  out_params.push_back({prefix + ".b", &b, &db, false});
}

Tensor GlobalAvgPool2d::forward(const Tensor& x) {
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  in_shape = x.shape;
  Tensor y({n, c});
  const float inv = 1.0f / static_cast<float>(h * wd);
  for (int i = 0; i < n; ++i) {
    for (int cc = 0; cc < c; ++cc) {
      const float* p = x.data() + (static_cast<std::int64_t>(i) * c + cc) * h * wd;
      double sum = 0.0;
      for (int j = 0; j < h * wd; ++j) sum += p[j];
      y.v[static_cast<std::size_t>(i * c + cc)] = static_cast<float>(sum) * inv;
    }
  }
  return y;
}

Tensor GlobalAvgPool2d::backward(const Tensor& dy) const {
  const int n = in_shape[0], c = in_shape[1], h = in_shape[2], wd = in_shape[3];
  Tensor dx(in_shape);
  const float inv = 1.0f / static_cast<float>(h * wd);
  for (int i = 0; i < n; ++i) {
    for (int cc = 0; cc < c; ++cc) {
      const float g = dy.v[static_cast<std::size_t>(i * c + cc)] * inv;
      float* p = dx.data() + (static_cast<std::int64_t>(i) * c + cc) * h * wd;
      for (int j = 0; j < h * wd; ++j) p[j] = g;
    }
  }
  return dx;
}

void LayerNorm::init(int d) {
  dim = d;
  gamma = Tensor({dim});
  gamma.fill(1.0f);
  beta = Tensor({dim});
  dgamma = Tensor({dim});
  dbeta = Tensor({dim});
}

Tensor LayerNorm::forward(const Tensor& x) {
  const auto rows = static_cast<int>(x.size() / dim);
  xhat = Tensor(x.shape);
  inv_std.assign(static_cast<std::size_t>(rows), 0.0f);
  Tensor y(x.shape);
  for (int r = 0; r < rows; ++r) {
    const float* px = x.data() + static_cast<std::int64_t>(r) * dim;
    float* ph = xhat.data() + static_cast<std::int64_t>(r) * dim;
    float* py = y.data() + static_cast<std::int64_t>(r) * dim;
    double sum = 0.0, sq = 0.0;
    for (int j = 0; j < dim; ++j) {
      sum += px[j];
      sq += static_cast<double>(px[j]) * px[j];
    }
    const float mean = static_cast<float>(sum / dim);
    float var = static_cast<float>(sq / dim) - mean * mean;
    if (var < 0.0f) var = 0.0f;
    const float istd = 1.0f / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(r)] = istd;
    for (int j = 0; j < dim; ++j) {
      const float norm = (px[j] - mean) * istd;
      ph[j] = norm;
      py[j] = gamma.v[static_cast<std::size_t>(j)] * norm + beta.v[static_cast<std::size_t>(j)];
    }
  }
  return y;
}

Tensor LayerNorm::backward(const Tensor& dy) {
  const auto rows = static_cast<int>(dy.size() / dim);
  Tensor dx(dy.shape);
  for (int r = 0; r < rows; ++r) {
    const float* pdy = dy.data() + static_cast<std::int64_t>(r) * dim;
    const float* ph = xhat.data() + static_cast<std::int64_t>(r) * dim;
    float* pdx = dx.data() + static_cast<std::int64_t>(r) * dim;
    const float istd = inv_std[static_cast<std::size_t>(r)];
    double sum_dxh = 0.0, sum_dxh_xhat = 0.0;
    for (int j = 0; j < dim; ++j) {
      const float dxh = pdy[j] * gamma.v[static_cast<std::size_t>(j)];
      sum_dxh += dxh;
      sum_dxh_xhat += static_cast<double>(dxh) * ph[j];
      dgamma.v[static_cast<std::size_t>(j)] += pdy[j] * ph[j];
      dbeta.v[static_cast<std::size_t>(j)] += pdy[j];
    }
    const float mean_dxh = static_cast<float>(sum_dxh / dim);
    const float mean_dxh_xhat = static_cast<float>(sum_dxh_xhat / dim);
    for (int j = 0; j < dim; ++j) {
      const float dxh = pdy[j] * gamma.v[static_cast<std::size_t>(j)];
      pdx[j] = istd * (dxh - mean_dxh - ph[j] * mean_dxh_xhat);
    }
  }
  return dx;
}

void LayerNorm::collect(const std::string& prefix, std::vector<ParamTensor>& out) {
  out.push_back({prefix + ".gamma", &gamma, &dgamma, false});
  out.push_back({prefix + ".beta", &beta, &dbeta, false});
}

void MultiHeadAttention::init(int model_dim, int num_heads, Rng& rng) {
  dim = model_dim;
  heads = num_heads;
  const float std_dev = std::sqrt(1.0f / static_cast<float>(dim));
  wq.init(dim, dim, std_dev, rng);
  wk.init(dim, dim, std_dev, rng);
  wv.init(dim, dim, std_dev, rng);
  wo.init(dim, dim, std_dev, rng);
}

Tensor MultiHeadAttention::forward(const Tensor& x) {
  const int n = x.dim(0), t = x.dim(1);
  const int dh = dim / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

  q = wq.forward(x);
  k = wk.forward(x);
  v = wv.forward(x);
  attn = Tensor({n, heads, t, t});
  Tensor ctx({n, t, dim});

  ColMat qh(t, dh), kh(t, dh), vh(t, dh);
  for (int i = 0; i < n; ++i) {
    for (int hd = 0; hd < heads; ++hd) {
      const int off = hd * dh;
      for (int tt = 0; tt < t; ++tt) {
        const std::int64_t base = (static_cast<std::int64_t>(i) * t + tt) * dim + off;
        for (int j = 0; j < dh; ++j) {
          qh(tt, j) = q.v[static_cast<std::size_t>(base + j)];
          kh(tt, j) = k.v[static_cast<std::size_t>(base + j)];
          vh(tt, j) = v.v[static_cast<std::size_t>(base + j)];
        }
      }
      ColMat scores = qh * kh.transpose() * scale;
      // row-wise softmax
      for (int r = 0; r < t; ++r) {
        float mx = scores.row(r).maxCoeff();
        double denom = 0.0;
        for (int cc = 0; cc < t; ++cc) {
          scores(r, cc) = std::exp(scores(r, cc) - mx);
          denom += scores(r, cc);
        }
        scores.row(r) /= static_cast<float>(denom);
      }
      float* pa = attn.data() + ((static_cast<std::int64_t>(i) * heads + hd) * t) * t;
      for (int r = 0; r < t; ++r)
        for (int cc = 0; cc < t; ++cc) pa[r * t + cc] = scores(r, cc);

      ColMat out_h = scores * vh;
      for (int tt = 0; tt < t; ++tt) {
        const std::int64_t base = (static_cast<std::int64_t>(i) * t + tt) * dim + off;
        for (int j = 0; j < dh; ++j) ctx.v[static_cast<std::size_t>(base + j)] = out_h(tt, j);
      }
    }
  }
  return wo.forward(ctx);
}

Tensor MultiHeadAttention::backward(const Tensor& dy) {
  const int n = dy.dim(0), t = dy.dim(1);
  const int dh = dim / heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));

  Tensor dctx = wo.backward(dy);
  Tensor dq(q.shape), dk(k.shape), dv(v.shape);

  ColMat qh(t, dh), kh(t, dh), vh(t, dh), dout_h(t, dh), a(t, t);
  for (int i = 0; i < n; ++i) {
    for (int hd = 0; hd < heads; ++hd) {
      const int off = hd * dh;
      for (int tt = 0; tt < t; ++tt) {
        const std::int64_t base = (static_cast<std::int64_t>(i) * t + tt) * dim + off;
        for (int j = 0; j < dh; ++j) {
          qh(tt, j) = q.v[static_cast<std::size_t>(base + j)];
          kh(tt, j) = k.v[static_cast<std::size_t>(base + j)];
          vh(tt, j) = v.v[static_cast<std::size_t>(base + j)];
          dout_h(tt, j) = dctx.v[static_cast<std::size_t>(base + j)];
        }
      }
      const float* pa = attn.data() + ((static_cast<std::int64_t>(i) * heads + hd) * t) * t;
      for (int r = 0; r < t; ++r)
        for (int cc = 0; cc < t; ++cc) a(r, cc) = pa[r * t + cc];

      ColMat da = dout_h * vh.transpose();
      ColMat dvh = a.transpose() * dout_h;
      // softmax backward: ds = a .* (da - rowsum(da .* a))
      ColMat ds(t, t);
      for (int r = 0; r < t; ++r) {
        double dot = 0.0;
        for (int cc = 0; cc < t; ++cc) dot += static_cast<double>(da(r, cc)) * a(r, cc);
        for (int cc = 0; cc < t; ++cc) {
          ds(r, cc) = a(r, cc) * (da(r, cc) - static_cast<float>(dot));
        }
      }
      ColMat dqh = ds * kh * scale;
      ColMat dkh = ds.transpose() * qh * scale;
      for (int tt = 0; tt < t; ++tt) {
        const std::int64_t base = (static_cast<std::int64_t>(i) * t + tt) * dim + off;
        for (int j = 0; j < dh; ++j) {
          dq.v[static_cast<std::size_t>(base + j)] = dqh(tt, j);
          dk.v[static_cast<std::size_t>(base + j)] = dkh(tt, j);
          dv.v[static_cast<std::size_t>(base + j)] = dvh(tt, j);
        }
      }
    }
  }

  Tensor dx = wq.backward(dq);
  Tensor dxk = wk.backward(dk);
  Tensor dxv = wv.backward(dv);
  for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += dxk.v[i] + dxv.v[i];
  return dx;
}

void MultiHeadAttention::collect(const std::string& prefix, std::vector<ParamTensor>& out) {
  wq.collect(prefix + ".wq", out);
  wk.collect(prefix + ".wk", out);
  wv.collect(prefix + ".wv", out);
  wo.collect(prefix + ".wo", out);
}

double softmax_xent(const Tensor& logits, const std::vector<int>& labels, Tensor* dlogits) {
  const int n = logits.dim(0), classes = logits.dim(1);
  if (static_cast<int>(labels.size()) != n) {
    fail(ErrorKind::ShapeMismatch, "labels do not match logits");
  }
  if (dlogits) *dlogits = Tensor(logits.shape);
  double total = 0.0;
  const float inv_n = 1.0f / static_cast<float>(n);
  for (int i = 0; i < n; ++i) {
    const float* row = logits.data() + static_cast<std::int64_t>(i) * classes;
    float mx = row[0];
    for (int c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(row[c]) - mx);
    const int y = labels[static_cast<std::size_t>(i)];
    total += -(static_cast<double>(row[y]) - mx - std::log(denom));
    if (dlogits) {
      float* drow = dlogits->data() + static_cast<std::int64_t>(i) * classes;
      for (int c = 0; c < classes; ++c) {
        const float p = static_cast<float>(std::exp(static_cast<double>(row[c]) - mx) / denom);
        drow[c] = (p - (c == y ? 1.0f : 0.0f)) * inv_n;
      }
    }
  }
  return total / n;
}

}  // namespace prunekit
