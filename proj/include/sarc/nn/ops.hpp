#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sarc/nn/tensor.hpp"
#include "sarc/rng.hpp"

namespace sarc::nn {

template <class T>
inline T sigmoid_scalar(T x) {
  if (x >= T(0)) {
    T e = std::exp(-x);
    return T(1) / (T(1) + e);
  }
  T e = std::exp(x);
  return e / (T(1) + e);
}

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

template <class T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  auto out = Tensor<T>::make_op(a.shape(), {a, b}, [](typename Tensor<T>::Node& self) {
    for (int pi = 0; pi < 2; ++pi) {
      auto& p = *self.parents[static_cast<size_t>(pi)];
      if (!p.needs_grad) continue;
      for (size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += self.grad[i];
    }
  });
  auto& y = out.data();
  const auto& xa = a.data();
  const auto& xb = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = xa[i] + xb[i];
  return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "sub");
  auto out = Tensor<T>::make_op(a.shape(), {a, b}, [](typename Tensor<T>::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.needs_grad)
      for (size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += self.grad[i];
    if (pb.needs_grad)
      for (size_t i = 0; i < pb.grad.size(); ++i) pb.grad[i] -= self.grad[i];
  });
  auto& y = out.data();
  const auto& xa = a.data();
  const auto& xb = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = xa[i] - xb[i];
  return out;
}

// Hadamard product
template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  auto out = Tensor<T>::make_op(a.shape(), {a, b}, [](typename Tensor<T>::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.needs_grad)
      for (size_t i = 0; i < pa.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.data[i];
    if (pb.needs_grad)
      for (size_t i = 0; i < pb.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.data[i];
  });
  auto& y = out.data();
  const auto& xa = a.data();
  const auto& xb = b.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = xa[i] * xb[i];
  return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  auto out = Tensor<T>::make_op(a.shape(), {a}, [s](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (size_t i = 0; i < p.grad.size(); ++i) p.grad[i] += self.grad[i] * s;
  });
  auto& y = out.data();
  const auto& x = a.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = x[i] * s;
  return out;
}

// ---------------------------------------------------------------------------
// broadcasts over a [B, m] matrix
// ---------------------------------------------------------------------------

// y[b,j] = x[b,j] + v[j]
template <class T>
Tensor<T> add_row(const Tensor<T>& x, const Tensor<T>& v) {
  detail::require(x.rank() == 2, "add_row: input must be rank 2, got " + shape_string(x.shape()));
  detail::require(v.size() == x.dim(1),
                  "add_row: shape mismatch " + shape_string(x.shape()) + " vs " + shape_string(v.shape()));
  const int B = x.dim(0), m = x.dim(1);
  auto out = Tensor<T>::make_op(x.shape(), {x, v}, [B, m](typename Tensor<T>::Node& self) {
    auto& px = *self.parents[0];
    auto& pv = *self.parents[1];
    if (px.needs_grad)
      for (size_t i = 0; i < px.grad.size(); ++i) px.grad[i] += self.grad[i];
    if (pv.needs_grad)
      for (int b = 0; b < B; ++b)
        for (int j = 0; j < m; ++j) pv.grad[static_cast<size_t>(j)] += self.grad[static_cast<size_t>(b * m + j)];
  });
  auto& y = out.data();
  const auto& xd = x.data();
  const auto& vd = v.data();
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < m; ++j) y[static_cast<size_t>(b * m + j)] = xd[static_cast<size_t>(b * m + j)] + vd[static_cast<size_t>(j)];
  return out;
}

// y[b,j] = x[b,j] * v[j]  (diagonal peepholes and the like)
template <class T>
Tensor<T> mul_row(const Tensor<T>& x, const Tensor<T>& v) {
  detail::require(x.rank() == 2, "mul_row: input must be rank 2, got " + shape_string(x.shape()));
  detail::require(v.size() == x.dim(1),
                  "mul_row: shape mismatch " + shape_string(x.shape()) + " vs " + shape_string(v.shape()));
  const int B = x.dim(0), m = x.dim(1);
  auto out = Tensor<T>::make_op(x.shape(), {x, v}, [B, m](typename Tensor<T>::Node& self) {
    auto& px = *self.parents[0];
    auto& pv = *self.parents[1];
    for (int b = 0; b < B; ++b)
      for (int j = 0; j < m; ++j) {
        const size_t i = static_cast<size_t>(b * m + j);
        if (px.needs_grad) px.grad[i] += self.grad[i] * pv.data[static_cast<size_t>(j)];
        if (pv.needs_grad) pv.grad[static_cast<size_t>(j)] += self.grad[i] * px.data[i];
      }
  });
  auto& y = out.data();
  const auto& xd = x.data();
  const auto& vd = v.data();
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < m; ++j) y[static_cast<size_t>(b * m + j)] = xd[static_cast<size_t>(b * m + j)] * vd[static_cast<size_t>(j)];
  return out;
}

// y[b,j] = x[b,j] * c[b]  with c of shape [B] or [B,1]
template <class T>
Tensor<T> mul_col(const Tensor<T>& x, const Tensor<T>& c) {
  detail::require(x.rank() == 2, "mul_col: input must be rank 2, got " + shape_string(x.shape()));
  detail::require(c.size() == x.dim(0),
                  "mul_col: shape mismatch " + shape_string(x.shape()) + " vs " + shape_string(c.shape()));
  const int B = x.dim(0), m = x.dim(1);
  auto out = Tensor<T>::make_op(x.shape(), {x, c}, [B, m](typename Tensor<T>::Node& self) {
    auto& px = *self.parents[0];
    auto& pc = *self.parents[1];
    for (int b = 0; b < B; ++b) {
      const T cb = pc.data[static_cast<size_t>(b)];
      for (int j = 0; j < m; ++j) {
        const size_t i = static_cast<size_t>(b * m + j);
        if (px.needs_grad) px.grad[i] += self.grad[i] * cb;
        if (pc.needs_grad) pc.grad[static_cast<size_t>(b)] += self.grad[i] * px.data[i];
      }
    }
  });
  auto& y = out.data();
  const auto& xd = x.data();
  const auto& cd = c.data();
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < m; ++j) y[static_cast<size_t>(b * m + j)] = xd[static_cast<size_t>(b * m + j)] * cd[static_cast<size_t>(b)];
  return out;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

// [B,n] x [n,m] -> [B,m]
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& w) {
  detail::require(a.rank() == 2 && w.rank() == 2 && a.dim(1) == w.dim(0),
                  "matmul: shape mismatch " + shape_string(a.shape()) + " vs " + shape_string(w.shape()));
  const int B = a.dim(0), n = a.dim(1), m = w.dim(1);
  auto out = Tensor<T>::make_op({B, m}, {a, w}, [B, n, m](typename Tensor<T>::Node& self) {
    auto& pa = *self.parents[0];
    auto& pw = *self.parents[1];
    if (pa.needs_grad) {
      // dA = dY. W^T
      for (int b = 0; b < B; ++b)
        for (int k = 0; k < n; ++k) {
          T acc = T(0);
          const T* gy = self.grad.data() + static_cast<size_t>(b) * m;
          const T* wr = pw.data.data() + static_cast<size_t>(k) * m;
          for (int j = 0; j < m; ++j) acc += gy[j] * wr[j];
          pa.grad[static_cast<size_t>(b * n + k)] += acc;
        }
    }
    if (pw.needs_grad) {
      // dW = A^T . dY
      for (int b = 0; b < B; ++b)
        for (int k = 0; k < n; ++k) {
          const T av = pa.data[static_cast<size_t>(b * n + k)];
          if (av == T(0)) continue;
          T* gw = pw.grad.data() + static_cast<size_t>(k) * m;
          const T* gy = self.grad.data() + static_cast<size_t>(b) * m;
          for (int j = 0; j < m; ++j) gw[j] += av * gy[j];
        }
    }
  });
  auto& y = out.data();
  const auto& ad = a.data();
  const auto& wd = w.data();
  for (int b = 0; b < B; ++b) {
    T* yr = y.data() + static_cast<size_t>(b) * m;
    for (int k = 0; k < n; ++k) {
      const T av = ad[static_cast<size_t>(b * n + k)];
      if (av == T(0)) continue;
      const T* wr = wd.data() + static_cast<size_t>(k) * m;
      for (int j = 0; j < m; ++j) yr[j] += av * wr[j];
    }
  }
  return out;
}

// y = xW + b
template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return add_row(matmul(x, w), b);
}

// ---------------------------------------------------------------------------
// activations
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  auto out = Tensor<T>::make_op(x.shape(), {x}, [](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (size_t i = 0; i < p.grad.size(); ++i)
      if (p.data[i] > T(0)) p.grad[i] += self.grad[i];
  });
  auto& y = out.data();
  const auto& xd = x.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = xd[i] > T(0) ? xd[i] : T(0);
  return out;
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  auto out = Tensor<T>::make_op(x.shape(), {x}, [](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (size_t i = 0; i < p.grad.size(); ++i) {
      const T s = self.data[i];
      p.grad[i] += self.grad[i] * s * (T(1) - s);
    }
  });
  auto& y = out.data();
  const auto& xd = x.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = sigmoid_scalar(xd[i]);
  return out;
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
  auto out = Tensor<T>::make_op(x.shape(), {x}, [](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (size_t i = 0; i < p.grad.size(); ++i) {
      const T t = self.data[i];
      p.grad[i] += self.grad[i] * (T(1) - t * t);
    }
  });
  auto& y = out.data();
  const auto& xd = x.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(xd[i]);
  return out;
}

// ---------------------------------------------------------------------------
// shape plumbing
// ---------------------------------------------------------------------------

// concatenate [B,m_i] blocks along the feature axis
template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  detail::require(!parts.empty(), "concat_cols: no inputs");
  const int B = parts[0].dim(0);
  int total = 0;
  std::vector<int> widths;
  for (const auto& p : parts) {
    detail::require(p.rank() == 2 && p.dim(0) == B, "concat_cols: shape mismatch " + shape_string(p.shape()));
    widths.push_back(p.dim(1));
    total += p.dim(1);
  }
  auto out = Tensor<T>::make_op({B, total}, parts, [B, total, widths](typename Tensor<T>::Node& self) {
    int off = 0;
    for (size_t pi = 0; pi < self.parents.size(); ++pi) {
      auto& p = *self.parents[pi];
      const int m = widths[pi];
      if (p.needs_grad)
        for (int b = 0; b < B; ++b)
          for (int j = 0; j < m; ++j) p.grad[static_cast<size_t>(b * m + j)] += self.grad[static_cast<size_t>(b * total + off + j)];
      off += m;
    }
  });
  auto& y = out.data();
  int off = 0;
  for (size_t pi = 0; pi < parts.size(); ++pi) {
    const auto& pd = parts[pi].data();
    const int m = widths[pi];
    for (int b = 0; b < B; ++b)
      for (int j = 0; j < m; ++j) y[static_cast<size_t>(b * total + off + j)] = pd[static_cast<size_t>(b * m + j)];
    off += m;
  }
  return out;
}

// columns [lo, hi) of a [B,m] matrix
template <class T>
Tensor<T> slice_cols(const Tensor<T>& x, int lo, int hi) {
  detail::require(x.rank() == 2, "slice_cols: input must be rank 2");
  const int B = x.dim(0), m = x.dim(1);
  detail::require(0 <= lo && lo < hi && hi <= m, "slice_cols: bad range [" + std::to_string(lo) + "," + std::to_string(hi) + ") for width " + std::to_string(m));
  const int w = hi - lo;
  auto out = Tensor<T>::make_op({B, w}, {x}, [B, m, lo, w](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (int b = 0; b < B; ++b)
      for (int j = 0; j < w; ++j) p.grad[static_cast<size_t>(b * m + lo + j)] += self.grad[static_cast<size_t>(b * w + j)];
  });
  auto& y = out.data();
  const auto& xd = x.data();
  for (int b = 0; b < B; ++b)
    for (int j = 0; j < w; ++j) y[static_cast<size_t>(b * w + j)] = xd[static_cast<size_t>(b * m + lo + j)];
  return out;
}

// ---------------------------------------------------------------------------
// dropout (inverted: survivors scaled by 1/(1-rate), inference is identity)
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng& rng) {
  detail::require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  std::vector<uint8_t> keep(static_cast<size_t>(x.size()));
  for (auto& k : keep) k = rng.next_double() >= rate ? 1 : 0;
  const T inv = T(1.0 / (1.0 - rate));
  auto out = Tensor<T>::make_op(x.shape(), {x}, [keep, inv](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (size_t i = 0; i < p.grad.size(); ++i)
      if (keep[i]) p.grad[i] += self.grad[i] * inv;
  });
  auto& y = out.data();
  const auto& xd = x.data();
  for (size_t i = 0; i < y.size(); ++i) y[i] = keep[i] ? xd[i] * inv : T(0);
  return out;
}

// Bernoulli(1-rate)/(1-rate) mask tensor; used for recurrent dropout where
// one mask is shared across all time steps of a sequence
template <class T>
Tensor<T> dropout_mask(std::vector<int> shape, double rate, Rng& rng) {
  detail::require(rate >= 0.0 && rate < 1.0, "dropout_mask: rate must be in [0,1), got " + std::to_string(rate));
  Tensor<T> m = Tensor<T>::constant(std::move(shape), T(0));
  const T inv = T(1.0 / (1.0 - rate));
  for (auto& v : m.data()) v = rng.next_double() >= rate ? inv : T(0);
  return m;
}

// ---------------------------------------------------------------------------
// softmax over the valid prefix of each row; padded positions get exactly 0
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> softmax_masked(const Tensor<T>& scores, const std::vector<int>& lengths) {
  detail::require(scores.rank() == 2, "softmax_masked: scores must be rank 2");
  const int B = scores.dim(0), L = scores.dim(1);
  detail::require(static_cast<int>(lengths.size()) == B, "softmax_masked: lengths size mismatch");
  for (int b = 0; b < B; ++b)
    detail::require(lengths[b] >= 1 && lengths[b] <= L, "softmax_masked: invalid length " + std::to_string(lengths[b]) + " for row " + std::to_string(b));

  auto out = Tensor<T>::make_op(scores.shape(), {scores}, [B, L, lengths](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (int b = 0; b < B; ++b) {
      const int len = lengths[b];
      const T* a = self.data.data() + static_cast<size_t>(b) * L;
      const T* ga = self.grad.data() + static_cast<size_t>(b) * L;
      T dot = T(0);
      for (int t = 0; t < len; ++t) dot += a[t] * ga[t];
      T* gs = p.grad.data() + static_cast<size_t>(b) * L;
      for (int t = 0; t < len; ++t) gs[t] += a[t] * (ga[t] - dot);
    }
  });
  auto& y = out.data();
  const auto& s = scores.data();
  for (int b = 0; b < B; ++b) {
    const int len = lengths[b];
    const T* row = s.data() + static_cast<size_t>(b) * L;
    T mx = row[0];
    for (int t = 1; t < len; ++t) mx = std::max(mx, row[t]);
    T sum = T(0);
    T* yrow = y.data() + static_cast<size_t>(b) * L;
    for (int t = 0; t < len; ++t) {
      yrow[t] = std::exp(row[t] - mx);
      sum += yrow[t];
    }
    for (int t = 0; t < len; ++t) yrow[t] /= sum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// convolution / pooling over [B, L, C] feature maps
// ---------------------------------------------------------------------------

// valid cross-correlation, stride 1: [B,L,Cin] * [k,Cin,Cout] -> [B,L-k+1,Cout]
template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& kernels, const Tensor<T>& bias) {
  detail::require(x.rank() == 3, "conv1d: input must be [B,L,C], got " + shape_string(x.shape()));
  detail::require(kernels.rank() == 3, "conv1d: kernels must be [k,Cin,Cout], got " + shape_string(kernels.shape()));
  const int B = x.dim(0), L = x.dim(1), Cin = x.dim(2);
  const int k = kernels.dim(0), Cout = kernels.dim(2);
  detail::require(kernels.dim(1) == Cin,
                  "conv1d: channel mismatch " + shape_string(x.shape()) + " vs " + shape_string(kernels.shape()));
  detail::require(bias.size() == Cout, "conv1d: bias must have " + std::to_string(Cout) + " entries");
  detail::require(L >= k, "conv1d: sequence length " + std::to_string(L) + " shorter than kernel " + std::to_string(k));
  const int Lo = L - k + 1;

  auto out = Tensor<T>::make_op({B, Lo, Cout}, {x, kernels, bias}, [B, L, Cin, k, Cout, Lo](typename Tensor<T>::Node& self) {
    auto& px = *self.parents[0];
    auto& pk = *self.parents[1];
    auto& pb = *self.parents[2];
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < Lo; ++t) {
        const T* gy = self.grad.data() + (static_cast<size_t>(b) * Lo + t) * Cout;
        for (int dk = 0; dk < k; ++dk)
          for (int ci = 0; ci < Cin; ++ci) {
            const size_t xi = (static_cast<size_t>(b) * L + t + dk) * Cin + ci;
            const T* kr = pk.data.data() + (static_cast<size_t>(dk) * Cin + ci) * Cout;
            if (px.needs_grad) {
              T acc = T(0);
              for (int co = 0; co < Cout; ++co) acc += gy[co] * kr[co];
              px.grad[xi] += acc;
            }
            if (pk.needs_grad) {
              const T xv = px.data[xi];
              T* gk = pk.grad.data() + (static_cast<size_t>(dk) * Cin + ci) * Cout;
              for (int co = 0; co < Cout; ++co) gk[co] += xv * gy[co];
            }
          }
        if (pb.needs_grad)
          for (int co = 0; co < Cout; ++co) pb.grad[static_cast<size_t>(co)] += gy[co];
      }
  });
  auto& y = out.data();
  const auto& xd = x.data();
  const auto& kd = kernels.data();
  const auto& bd = bias.data();
  for (int b = 0; b < B; ++b)
    for (int t = 0; t < Lo; ++t) {
      T* yr = y.data() + (static_cast<size_t>(b) * Lo + t) * Cout;
      for (int co = 0; co < Cout; ++co) yr[co] = bd[static_cast<size_t>(co)];
      for (int dk = 0; dk < k; ++dk)
        for (int ci = 0; ci < Cin; ++ci) {
          const T xv = xd[(static_cast<size_t>(b) * L + t + dk) * Cin + ci];
          if (xv == T(0)) continue;
          const T* kr = kd.data() + (static_cast<size_t>(dk) * Cin + ci) * Cout;
          for (int co = 0; co < Cout; ++co) yr[co] += xv * kr[co];
        }
    }
  return out;
}

// max over pooling windows; gradient routed to the argmax, ties to the lowest index
template <class T>
Tensor<T> maxpool1d(const Tensor<T>& x, int pool, int stride) {
  detail::require(x.rank() == 3, "maxpool1d: input must be [B,L,C], got " + shape_string(x.shape()));
  detail::require(pool >= 1 && stride >= 1, "maxpool1d: pool and stride must be >= 1");
  const int B = x.dim(0), L = x.dim(1), C = x.dim(2);
  detail::require(L >= pool, "maxpool1d: sequence length " + std::to_string(L) + " shorter than pool " + std::to_string(pool));
  const int Lo = (L - pool) / stride + 1;

  const auto& xd = x.data();
  std::vector<T> vals(static_cast<size_t>(B) * Lo * C);
  std::vector<int> arg(vals.size());
  for (int b = 0; b < B; ++b)
    for (int w = 0; w < Lo; ++w)
      for (int c = 0; c < C; ++c) {
        const int start = w * stride;
        size_t best = (static_cast<size_t>(b) * L + start) * C + c;
        T bestv = xd[best];
        for (int p = 1; p < pool; ++p) {
          const size_t idx = (static_cast<size_t>(b) * L + start + p) * C + c;
          if (xd[idx] > bestv) {
            bestv = xd[idx];
            best = idx;
          }
        }
        const size_t oi = (static_cast<size_t>(b) * Lo + w) * C + c;
        vals[oi] = bestv;
        arg[oi] = static_cast<int>(best);
      }

  auto out = Tensor<T>::make_op({B, Lo, C}, {x}, [arg](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i) p.grad[static_cast<size_t>(arg[i])] += self.grad[i];
  });
  out.data() = std::move(vals);
  return out;
}

// per-channel max over the first valid[b] timesteps (1 <= valid[b] <= L)
template <class T>
Tensor<T> global_maxpool_masked(const Tensor<T>& x, const std::vector<int>& valid) {
  detail::require(x.rank() == 3, "global_maxpool: input must be [B,L,C], got " + shape_string(x.shape()));
  const int B = x.dim(0), L = x.dim(1), C = x.dim(2);
  detail::require(static_cast<int>(valid.size()) == B, "global_maxpool: valid size mismatch");
  for (int b = 0; b < B; ++b)
    detail::require(valid[b] >= 1 && valid[b] <= L, "global_maxpool: invalid window " + std::to_string(valid[b]));

  const auto& xd = x.data();
  std::vector<T> vals(static_cast<size_t>(B) * C);
  std::vector<int> arg(vals.size());
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      size_t best = static_cast<size_t>(b) * L * C + c;
      T bestv = xd[best];
      for (int t = 1; t < valid[b]; ++t) {
        const size_t idx = (static_cast<size_t>(b) * L + t) * C + c;
        if (xd[idx] > bestv) {
          bestv = xd[idx];
          best = idx;
        }
      }
      vals[static_cast<size_t>(b * C + c)] = bestv;
      arg[static_cast<size_t>(b * C + c)] = static_cast<int>(best);
    }

  auto out = Tensor<T>::make_op({B, C}, {x}, [arg](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (size_t i = 0; i < self.grad.size(); ++i) p.grad[static_cast<size_t>(arg[i])] += self.grad[i];
  });
  out.data() = std::move(vals);
  return out;
}

template <class T>
Tensor<T> global_maxpool(const Tensor<T>& x) {
  detail::require(x.rank() == 3, "global_maxpool: input must be [B,L,C], got " + shape_string(x.shape()));
  return global_maxpool_masked(x, std::vector<int>(static_cast<size_t>(x.dim(0)), x.dim(1)));
}

// ---------------------------------------------------------------------------
// embedding and sequence plumbing
// ---------------------------------------------------------------------------

// rows of E ([V,d]) gathered into [B,L,d]; differentiable into E
template <class T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<int>& ids, int B, int L) {
  detail::require(table.rank() == 2, "embedding_lookup: table must be [V,d]");
  detail::require(static_cast<int>(ids.size()) == B * L, "embedding_lookup: ids size mismatch");
  const int V = table.dim(0), d = table.dim(1);
  for (int id : ids)
    detail::require(id >= 0 && id < V, "embedding_lookup: index " + std::to_string(id) + " out of range for vocabulary of " + std::to_string(V));

  auto out = Tensor<T>::make_op({B, L, d}, {table}, [ids, d](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (size_t r = 0; r < ids.size(); ++r) {
      T* gr = p.grad.data() + static_cast<size_t>(ids[r]) * d;
      const T* gy = self.grad.data() + r * d;
      for (int j = 0; j < d; ++j) gr[j] += gy[j];
    }
  });
  auto& y = out.data();
  const auto& td = table.data();
  for (size_t r = 0; r < ids.size(); ++r) {
    const T* row = td.data() + static_cast<size_t>(ids[r]) * d;
    T* yr = y.data() + r * d;
    for (int j = 0; j < d; ++j) yr[j] = row[j];
  }
  return out;
}

// time slice t of [B,L,d] -> [B,d]
template <class T>
Tensor<T> step_slice(const Tensor<T>& x, int t) {
  detail::require(x.rank() == 3, "step_slice: input must be [B,L,d]");
  const int B = x.dim(0), L = x.dim(1), d = x.dim(2);
  detail::require(t >= 0 && t < L, "step_slice: step " + std::to_string(t) + " out of range " + std::to_string(L));
  auto out = Tensor<T>::make_op({B, d}, {x}, [B, L, d, t](typename Tensor<T>::Node& self) {
    auto& p = *self.parents[0];
    if (!p.needs_grad) return;
    for (int b = 0; b < B; ++b) {
      T* gx = p.grad.data() + (static_cast<size_t>(b) * L + t) * d;
      const T* gy = self.grad.data() + static_cast<size_t>(b) * d;
      for (int j = 0; j < d; ++j) gx[j] += gy[j];
    }
  });
  auto& y = out.data();
  const auto& xd = x.data();
  for (int b = 0; b < B; ++b) {
    const T* row = xd.data() + (static_cast<size_t>(b) * L + t) * d;
    T* yr = y.data() + static_cast<size_t>(b) * d;
    for (int j = 0; j < d; ++j) yr[j] = row[j];
  }
  return out;
}

// out[b,:] = steps[pick[b]][b,:] — per-example gather across a step list
template <class T>
Tensor<T> select_steps(const std::vector<Tensor<T>>& steps, const std::vector<int>& pick) {
  detail::require(!steps.empty(), "select_steps: no steps");
  const int B = steps[0].dim(0), H = steps[0].dim(1);
  const int Tn = static_cast<int>(steps.size());
  detail::require(static_cast<int>(pick.size()) == B, "select_steps: pick size mismatch");
  for (const auto& s : steps) detail::require(s.rank() == 2 && s.dim(0) == B && s.dim(1) == H, "select_steps: inconsistent step shapes");
  for (int b = 0; b < B; ++b) detail::require(pick[b] >= 0 && pick[b] < Tn, "select_steps: pick out of range");

  auto out = Tensor<T>::make_op({B, H}, steps, [B, H, pick](typename Tensor<T>::Node& self) {
    for (int b = 0; b < B; ++b) {
      auto& p = *self.parents[static_cast<size_t>(pick[b])];
      if (!p.needs_grad) continue;
      T* gp = p.grad.data() + static_cast<size_t>(b) * H;
      const T* gy = self.grad.data() + static_cast<size_t>(b) * H;
      for (int j = 0; j < H; ++j) gp[j] += gy[j];
    }
  });
  auto& y = out.data();
  for (int b = 0; b < B; ++b) {
    const T* row = steps[static_cast<size_t>(pick[b])].data().data() + static_cast<size_t>(b) * H;
    T* yr = y.data() + static_cast<size_t>(b) * H;
    for (int j = 0; j < H; ++j) yr[j] = row[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// binary cross entropy, batch mean, with probability clamp at 1e-7
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> bce_mean(const Tensor<T>& p, const std::vector<int>& labels) {
  const int B = static_cast<int>(labels.size());
  detail::require(p.size() == B, "bce_mean: got " + std::to_string(p.size()) + " probabilities for " + std::to_string(B) + " labels");
  for (int y : labels) detail::require(y == 0 || y == 1, "bce_mean: labels must be 0/1");
  const T eps = T(1e-7);

  auto out = Tensor<T>::make_op({1}, {p}, [B, labels, eps](typename Tensor<T>::Node& self) {
    auto& pp = *self.parents[0];
    if (!pp.needs_grad) return;
    const T g = self.grad[0];
    for (int i = 0; i < B; ++i) {
      const T raw = pp.data[static_cast<size_t>(i)];
      if (raw < eps || raw > T(1) - eps) continue;  // clamp region has zero slope
      const T y = static_cast<T>(labels[static_cast<size_t>(i)]);
      pp.grad[static_cast<size_t>(i)] += g * (raw - y) / (raw * (T(1) - raw)) / static_cast<T>(B);
    }
  });
  const auto& pd = p.data();
  T acc = T(0);
  for (int i = 0; i < B; ++i) {
    const T ph = std::min(std::max(pd[static_cast<size_t>(i)], eps), T(1) - eps);
    const T y = static_cast<T>(labels[static_cast<size_t>(i)]);
    acc -= y * std::log(ph) + (T(1) - y) * std::log(T(1) - ph);
  }
  out.data()[0] = acc / static_cast<T>(B);
  return out;
}

}  // namespace sarc::nn
