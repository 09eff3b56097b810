#pragma once

// Serial reference kernels. Plain loops, one obvious statement per step; the
// OpenMP kernels in kernels_omp.cpp are checked against these. Templated so the
// gradient checks can run the whole model in double.

#include <cmath>
#include <cstdint>
#include <limits>

namespace numerologic::kernels {

// Stateless dropout decision shared by both backends: forward and backward
// regenerate the identical mask from (seed, tag, index).
inline double dropout_uniform(uint64_t seed, uint64_t tag, uint64_t index) {
  uint64_t x = seed ^ (tag * 0x9e3779b97f4a7c15ULL) ^ (index * 0xd1b54a32d192ed03ULL);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

namespace serial {

// y[M,N] = x[M,K] @ w[K,N] + b[N]; pass b == nullptr for no bias.
template <class F>
void linear_forward(const F* x, const F* w, const F* b, F* y, int M, int K, int N) {
  for (int m = 0; m < M; ++m) {
    F* yr = y + static_cast<long>(m) * N;
    for (int n = 0; n < N; ++n) yr[n] = b ? b[n] : F(0);
    const F* xr = x + static_cast<long>(m) * K;
    for (int k = 0; k < K; ++k) {
      const F a = xr[k];
      const F* wr = w + static_cast<long>(k) * N;
      for (int n = 0; n < N; ++n) yr[n] += a * wr[n];
    }
  }
}

// dx[M,K] = dy[M,N] @ w[K,N]^T
template <class F>
void linear_backward_input(const F* dy, const F* w, F* dx, int M, int K, int N) {
  for (int m = 0; m < M; ++m) {
    const F* dyr = dy + static_cast<long>(m) * N;
    F* dxr = dx + static_cast<long>(m) * K;
    for (int k = 0; k < K; ++k) {
      const F* wr = w + static_cast<long>(k) * N;
      F acc = 0;
      for (int n = 0; n < N; ++n) acc += dyr[n] * wr[n];
      dxr[k] = acc;
    }
  }
}

// dw[K,N] += x^T @ dy; db[N] += column sums of dy. Accumulating.
template <class F>
void linear_backward_params(const F* x, const F* dy, F* dw, F* db, int M, int K, int N) {
  for (int k = 0; k < K; ++k) {
    F* dwr = dw + static_cast<long>(k) * N;
    for (int m = 0; m < M; ++m) {
      const F a = x[static_cast<long>(m) * K + k];
      const F* dyr = dy + static_cast<long>(m) * N;
      for (int n = 0; n < N; ++n) dwr[n] += a * dyr[n];
    }
  }
  if (db) {
    for (int m = 0; m < M; ++m) {
      const F* dyr = dy + static_cast<long>(m) * N;
      for (int n = 0; n < N; ++n) db[n] += dyr[n];
    }
  }
}

template <class F>
void layernorm_forward(const F* x, const F* gain, const F* bias, F* y, F* mean, F* rstd,
                       int rows, int C) {
  const F eps = F(1e-5);
  for (int r = 0; r < rows; ++r) {
    const F* xr = x + static_cast<long>(r) * C;
    F* yr = y + static_cast<long>(r) * C;
    F mu = 0;
    for (int c = 0; c < C; ++c) mu += xr[c];
    mu /= F(C);
    F var = 0;
    for (int c = 0; c < C; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= F(C);
    F rs = F(1) / std::sqrt(var + eps);
    for (int c = 0; c < C; ++c) yr[c] = (xr[c] - mu) * rs * gain[c] + bias[c];
    mean[r] = mu;
    rstd[r] = rs;
  }
}

// dx is overwritten; dgain/dbias accumulate.
template <class F>
void layernorm_backward(const F* x, const F* gain, const F* mean, const F* rstd, const F* dy,
                        F* dx, F* dgain, F* dbias, int rows, int C) {
  for (int r = 0; r < rows; ++r) {
    const F* xr = x + static_cast<long>(r) * C;
    const F* dyr = dy + static_cast<long>(r) * C;
    F* dxr = dx + static_cast<long>(r) * C;
    const F mu = mean[r];
    const F rs = rstd[r];
    F sum_dxhat = 0;
    F sum_dxhat_xhat = 0;
    for (int c = 0; c < C; ++c) {
      const F xhat = (xr[c] - mu) * rs;
      const F dxhat = dyr[c] * gain[c];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
      dgain[c] += dyr[c] * xhat;
      dbias[c] += dyr[c];
    }
    const F inv_c = F(1) / F(C);
    for (int c = 0; c < C; ++c) {
      const F xhat = (xr[c] - mu) * rs;
      const F dxhat = dyr[c] * gain[c];
      dxr[c] = rs * (dxhat - inv_c * sum_dxhat - xhat * inv_c * sum_dxhat_xhat);
    }
  }
}

// tanh-approximation GELU, as in the GPT-2 family.
template <class F>
void gelu_forward(const F* x, F* y, long n) {
  const F s = std::sqrt(F(2) / F(M_PI));
  const F a = F(0.044715);
  for (long i = 0; i < n; ++i) {
    const F v = x[i];
    y[i] = F(0.5) * v * (F(1) + std::tanh(s * (v + a * v * v * v)));
  }
}

template <class F>
void gelu_backward(const F* x, const F* dy, F* dx, long n) {
  const F s = std::sqrt(F(2) / F(M_PI));
  const F a = F(0.044715);
  for (long i = 0; i < n; ++i) {
    const F v = x[i];
    const F t = std::tanh(s * (v + a * v * v * v));
    const F dtanh = (F(1) - t * t) * s * (F(1) + F(3) * a * v * v);
    dx[i] = dy[i] * (F(0.5) * (F(1) + t) + F(0.5) * v * dtanh);
  }
}

template <class F>
void add_inplace(F* y, const F* x, long n) {
  for (long i = 0; i < n; ++i) y[i] += x[i];
}

// y[m,:] = wte[tokens[m],:] + wpe[m % T,:]
template <class F>
void embedding_forward(const int* tokens, const F* wte, const F* wpe, F* y, int M, int T,
                       int C) {
  for (int m = 0; m < M; ++m) {
    const F* te = wte + static_cast<long>(tokens[m]) * C;
    const F* pe = wpe + static_cast<long>(m % T) * C;
    F* yr = y + static_cast<long>(m) * C;
    for (int c = 0; c < C; ++c) yr[c] = te[c] + pe[c];
  }
}

template <class F>
void embedding_backward(const int* tokens, const F* dy, F* dwte, F* dwpe, int M, int T,
                        int C) {
  for (int m = 0; m < M; ++m) {
    const F* dyr = dy + static_cast<long>(m) * C;
    F* te = dwte + static_cast<long>(tokens[m]) * C;
    F* pe = dwpe + static_cast<long>(m % T) * C;
    for (int c = 0; c < C; ++c) {
      te[c] += dyr[c];
      pe[c] += dyr[c];
    }
  }
}

// qkv rows are [q | k | v] of C each; head h owns columns [h*hs, (h+1)*hs).
// probs is [B,H,T,T], causally masked rows softmaxed over j <= i.
template <class F>
void attention_softmax_forward(const F* qkv, F* probs, int B, int T, int C, int H) {
  const int hs = C / H;
  const F scale = F(1) / std::sqrt(F(hs));
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < T; ++i) {
        const F* q = qkv + (static_cast<long>(b) * T + i) * 3 * C + h * hs;
        F* row = probs + ((static_cast<long>(b) * H + h) * T + i) * T;
        F maxv = -std::numeric_limits<F>::infinity();
        for (int j = 0; j <= i; ++j) {
          const F* k = qkv + (static_cast<long>(b) * T + j) * 3 * C + C + h * hs;
          F acc = 0;
          for (int c = 0; c < hs; ++c) acc += q[c] * k[c];
          row[j] = acc * scale;
          if (row[j] > maxv) maxv = row[j];
        }
        F denom = 0;
        for (int j = 0; j <= i; ++j) {
          row[j] = std::exp(row[j] - maxv);
          denom += row[j];
        }
        const F inv = F(1) / denom;
        for (int j = 0; j <= i; ++j) row[j] *= inv;
        for (int j = i + 1; j < T; ++j) row[j] = 0;
      }
    }
  }
}

// y[b,i,h*hs:...] = sum_j probs[b,h,i,j] * v[b,j,h]
template <class F>
void attention_apply_forward(const F* probs, const F* qkv, F* y, int B, int T, int C, int H) {
  const int hs = C / H;
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < T; ++i) {
        const F* row = probs + ((static_cast<long>(b) * H + h) * T + i) * T;
        F* yr = y + (static_cast<long>(b) * T + i) * C + h * hs;
        for (int c = 0; c < hs; ++c) yr[c] = 0;
        for (int j = 0; j <= i; ++j) {
          const F* v = qkv + (static_cast<long>(b) * T + j) * 3 * C + 2 * C + h * hs;
          const F p = row[j];
          for (int c = 0; c < hs; ++c) yr[c] += p * v[c];
        }
      }
    }
  }
}

// dprobs is overwritten; the dv third of dqkv accumulates.
template <class F>
void attention_apply_backward(const F* dy, const F* probs, const F* qkv, F* dprobs, F* dqkv,
                              int B, int T, int C, int H) {
  const int hs = C / H;
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < T; ++i) {
        const F* dyr = dy + (static_cast<long>(b) * T + i) * C + h * hs;
        const F* prow = probs + ((static_cast<long>(b) * H + h) * T + i) * T;
        F* dprow = dprobs + ((static_cast<long>(b) * H + h) * T + i) * T;
        for (int j = 0; j <= i; ++j) {
          const F* v = qkv + (static_cast<long>(b) * T + j) * 3 * C + 2 * C + h * hs;
          F* dv = dqkv + (static_cast<long>(b) * T + j) * 3 * C + 2 * C + h * hs;
          F acc = 0;
          for (int c = 0; c < hs; ++c) {
            acc += dyr[c] * v[c];
            dv[c] += prow[j] * dyr[c];
          }
          dprow[j] = acc;
        }
        for (int j = i + 1; j < T; ++j) dprow[j] = 0;
      }
    }
  }
}

// Backward through the causal softmax and the q/k dot products; the dq and dk
// thirds of dqkv accumulate.
template <class F>
void attention_softmax_backward(const F* dprobs, const F* probs, const F* qkv, F* dqkv, int B,
                                int T, int C, int H) {
  const int hs = C / H;
  const F scale = F(1) / std::sqrt(F(hs));
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < T; ++i) {
        const F* prow = probs + ((static_cast<long>(b) * H + h) * T + i) * T;
        const F* dprow = dprobs + ((static_cast<long>(b) * H + h) * T + i) * T;
        const F* q = qkv + (static_cast<long>(b) * T + i) * 3 * C + h * hs;
        F* dq = dqkv + (static_cast<long>(b) * T + i) * 3 * C + h * hs;
        F dot = 0;
        for (int j = 0; j <= i; ++j) dot += dprow[j] * prow[j];
        for (int j = 0; j <= i; ++j) {
          const F dscore = prow[j] * (dprow[j] - dot) * scale;
          const F* k = qkv + (static_cast<long>(b) * T + j) * 3 * C + C + h * hs;
          F* dk = dqkv + (static_cast<long>(b) * T + j) * 3 * C + C + h * hs;
          for (int c = 0; c < hs; ++c) {
            dq[c] += dscore * k[c];
            dk[c] += dscore * q[c];
          }
        }
      }
    }
  }
}

// Rows with target < 0 are padding: zero loss, zero probs row.
template <class F>
void cross_entropy_forward(const F* logits, const int* targets, F* probs, F* losses, int M,
                           int V) {
  for (int m = 0; m < M; ++m) {
    const F* lr = logits + static_cast<long>(m) * V;
    F* pr = probs + static_cast<long>(m) * V;
    if (targets[m] < 0) {
      for (int v = 0; v < V; ++v) pr[v] = 0;
      losses[m] = 0;
      continue;
    }
    F maxv = lr[0];
    for (int v = 1; v < V; ++v) maxv = std::max(maxv, lr[v]);
    F denom = 0;
    for (int v = 0; v < V; ++v) {
      pr[v] = std::exp(lr[v] - maxv);
      denom += pr[v];
    }
    const F inv = F(1) / denom;
    for (int v = 0; v < V; ++v) pr[v] *= inv;
    losses[m] = -std::log(pr[targets[m]]);
  }
}

template <class F>
void cross_entropy_backward(const F* probs, const int* targets, F* dlogits, int M, int V,
                            F scale) {
  for (int m = 0; m < M; ++m) {
    const F* pr = probs + static_cast<long>(m) * V;
    F* dr = dlogits + static_cast<long>(m) * V;
    if (targets[m] < 0) {
      for (int v = 0; v < V; ++v) dr[v] = 0;
      continue;
    }
    for (int v = 0; v < V; ++v) dr[v] = pr[v] * scale;
    dr[targets[m]] -= scale;
  }
}

template <class F>
void dropout_forward(const F* x, F* y, long n, float p, uint64_t seed, uint64_t tag) {
  if (p <= 0.0f) {
    for (long i = 0; i < n; ++i) y[i] = x[i];
    return;
  }
  const F keep_scale = F(1) / F(1.0f - p);
  for (long i = 0; i < n; ++i) {
    y[i] = dropout_uniform(seed, tag, static_cast<uint64_t>(i)) >= p ? x[i] * keep_scale : F(0);
  }
}

template <class F>
void dropout_backward(const F* dy, F* dx, long n, float p, uint64_t seed, uint64_t tag) {
  if (p <= 0.0f) {
    for (long i = 0; i < n; ++i) dx[i] = dy[i];
    return;
  }
  const F keep_scale = F(1) / F(1.0f - p);
  for (long i = 0; i < n; ++i) {
    dx[i] = dropout_uniform(seed, tag, static_cast<uint64_t>(i)) >= p ? dy[i] * keep_scale : F(0);
  }
}

// Decoupled weight decay; `step` is 1-based for bias correction.
template <class F>
void adamw_update(F* w, const F* g, F* m, F* v, long n, F lr, F beta1, F beta2, F eps,
                  F weight_decay, int step) {
  const F bc1 = F(1) - std::pow(beta1, F(step));
  const F bc2 = F(1) - std::pow(beta2, F(step));
  for (long i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (F(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (F(1) - beta2) * g[i] * g[i];
    const F mhat = m[i] / bc1;
    const F vhat = v[i] / bc2;
    w[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * w[i]);
  }
}

}  // namespace serial
}  // namespace numerologic::kernels
