#include "numerologic/kernels_omp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "numerologic/kernels_serial.hpp"

namespace numerologic::kernels::omp {

namespace {

// y[0..n) += a * x[0..n). Element-independent, so `omp simd` cannot change
// the result.
inline void axpy(float a, const float* x, float* y, int n) {
#pragma omp simd
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

// Lane-partitioned dot product: a fixed 16-way accumulator split that the
// vectorizer can map onto FMA lanes without reassociating anything.
inline float dot(const float* a, const float* b, int n) {
  constexpr int kLanes = 16;
  float acc[kLanes] = {};
  int i = 0;
  for (; i + kLanes <= n; i += kLanes) {
#pragma omp simd
    for (int l = 0; l < kLanes; ++l) acc[l] += a[i + l] * b[i + l];
  }
  float tail = 0.0f;
  for (; i < n; ++i) tail += a[i] * b[i];
  float sum = tail;
  for (int l = 0; l < kLanes; ++l) sum += acc[l];
  return sum;
}

inline float lane_sum(const float* x, int n) {
  constexpr int kLanes = 16;
  float acc[kLanes] = {};
  int i = 0;
  for (; i + kLanes <= n; i += kLanes) {
#pragma omp simd
    for (int l = 0; l < kLanes; ++l) acc[l] += x[i + l];
  }
  float sum = 0.0f;
  for (; i < n; ++i) sum += x[i];
  for (int l = 0; l < kLanes; ++l) sum += acc[l];
  return sum;
}

}  // namespace

void linear_forward(const float* x, const float* w, const float* b, float* y, int M, int K,
                    int N) {
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    float* yr = y + static_cast<long>(m) * N;
    if (b) {
      std::copy(b, b + N, yr);
    } else {
      std::fill(yr, yr + N, 0.0f);
    }
    const float* xr = x + static_cast<long>(m) * K;
    for (int k = 0; k < K; ++k) {
      axpy(xr[k], w + static_cast<long>(k) * N, yr, N);
    }
  }
}

void linear_backward_input(const float* dy, const float* w, float* dx, int M, int K, int N) {
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    const float* dyr = dy + static_cast<long>(m) * N;
    float* dxr = dx + static_cast<long>(m) * K;
    for (int k = 0; k < K; ++k) {
      dxr[k] = dot(dyr, w + static_cast<long>(k) * N, N);
    }
  }
}

void linear_backward_params(const float* x, const float* dy, float* dw, float* db, int M,
                            int K, int N) {
  // Each thread owns whole rows of dw, so accumulation is race-free.
#pragma omp parallel for schedule(static)
  for (int k = 0; k < K; ++k) {
    float* dwr = dw + static_cast<long>(k) * N;
    for (int m = 0; m < M; ++m) {
      axpy(x[static_cast<long>(m) * K + k], dy + static_cast<long>(m) * N, dwr, N);
    }
  }
  if (db) {
    for (int m = 0; m < M; ++m) {
      axpy(1.0f, dy + static_cast<long>(m) * N, db, N);
    }
  }
}

void layernorm_forward(const float* x, const float* gain, const float* bias, float* y,
                       float* mean, float* rstd, int rows, int C) {
  const float eps = 1e-5f;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + static_cast<long>(r) * C;
    float* yr = y + static_cast<long>(r) * C;
    const float mu = lane_sum(xr, C) / static_cast<float>(C);
    float var = 0.0f;
    {
      constexpr int kLanes = 16;
      float acc[kLanes] = {};
      int c = 0;
      for (; c + kLanes <= C; c += kLanes) {
#pragma omp simd
        for (int l = 0; l < kLanes; ++l) {
          const float d = xr[c + l] - mu;
          acc[l] += d * d;
        }
      }
      for (; c < C; ++c) var += (xr[c] - mu) * (xr[c] - mu);
      for (int l = 0; l < kLanes; ++l) var += acc[l];
    }
    var /= static_cast<float>(C);
    const float rs = 1.0f / std::sqrt(var + eps);
#pragma omp simd
    for (int c = 0; c < C; ++c) yr[c] = (xr[c] - mu) * rs * gain[c] + bias[c];
    mean[r] = mu;
    rstd[r] = rs;
  }
}

void layernorm_backward(const float* x, const float* gain, const float* mean,
                        const float* rstd, const float* dy, float* dx, float* dgain,
                        float* dbias, int rows, int C) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + static_cast<long>(r) * C;
    const float* dyr = dy + static_cast<long>(r) * C;
    float* dxr = dx + static_cast<long>(r) * C;
    const float mu = mean[r];
    const float rs = rstd[r];
    float sum_dxhat = 0.0f;
    float sum_dxhat_xhat = 0.0f;
    for (int c = 0; c < C; ++c) {
      const float xhat = (xr[c] - mu) * rs;
      const float dxhat = dyr[c] * gain[c];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * xhat;
    }
    const float inv_c = 1.0f / static_cast<float>(C);
#pragma omp simd
    for (int c = 0; c < C; ++c) {
      const float xhat = (xr[c] - mu) * rs;
      const float dxhat = dyr[c] * gain[c];
      dxr[c] = rs * (dxhat - inv_c * sum_dxhat - xhat * inv_c * sum_dxhat_xhat);
    }
  }
  // Column reductions owned per-column to stay deterministic. Rows accumulate
  // into a fixed 4-lane split keyed by r%4, so the summation grouping cannot
  // shift with the row count (and appended all-zero padding rows stay exact
  // no-ops even under compiler vectorization).
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    float dg[4] = {};
    float dbs[4] = {};
    for (int r = 0; r < rows; ++r) {
      const long idx = static_cast<long>(r) * C + c;
      dg[r & 3] += dy[idx] * (x[idx] - mean[r]) * rstd[r];
      dbs[r & 3] += dy[idx];
    }
    dgain[c] += ((dg[0] + dg[1]) + dg[2]) + dg[3];
    dbias[c] += ((dbs[0] + dbs[1]) + dbs[2]) + dbs[3];
  }
}

void gelu_forward(const float* x, float* y, long n) {
  const float s = std::sqrt(2.0f / static_cast<float>(M_PI));
  const float a = 0.044715f;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const float v = x[i];
    y[i] = 0.5f * v * (1.0f + std::tanh(s * (v + a * v * v * v)));
  }
}

void gelu_backward(const float* x, const float* dy, float* dx, long n) {
  const float s = std::sqrt(2.0f / static_cast<float>(M_PI));
  const float a = 0.044715f;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const float v = x[i];
    const float t = std::tanh(s * (v + a * v * v * v));
    const float dtanh = (1.0f - t * t) * s * (1.0f + 3.0f * a * v * v);
    dx[i] = dy[i] * (0.5f * (1.0f + t) + 0.5f * v * dtanh);
  }
}

void add_inplace(float* y, const float* x, long n) {
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) y[i] += x[i];
}

void embedding_forward(const int* tokens, const float* wte, const float* wpe, float* y, int M,
                       int T, int C) {
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    const float* te = wte + static_cast<long>(tokens[m]) * C;
    const float* pe = wpe + static_cast<long>(m % T) * C;
    float* yr = y + static_cast<long>(m) * C;
#pragma omp simd
    for (int c = 0; c < C; ++c) yr[c] = te[c] + pe[c];
  }
}

void embedding_backward(const int* tokens, const float* dy, float* dwte, float* dwpe, int M,
                        int T, int C) {
  // Scatter-add with column ownership: every thread walks all rows but only
  // touches its own columns, so duplicate token ids cannot race.
#pragma omp parallel for schedule(static)
  for (int c = 0; c < C; ++c) {
    for (int m = 0; m < M; ++m) {
      const float g = dy[static_cast<long>(m) * C + c];
      dwte[static_cast<long>(tokens[m]) * C + c] += g;
      dwpe[static_cast<long>(m % T) * C + c] += g;
    }
  }
}

void attention_softmax_forward(const float* qkv, float* probs, int B, int T, int C, int H) {
  const int hs = C / H;
  const float scale = 1.0f / std::sqrt(static_cast<float>(hs));
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < T; ++i) {
        const float* q = qkv + (static_cast<long>(b) * T + i) * 3 * C + h * hs;
        float* row = probs + ((static_cast<long>(b) * H + h) * T + i) * T;
        float maxv = -std::numeric_limits<float>::infinity();
        for (int j = 0; j <= i; ++j) {
          const float* k = qkv + (static_cast<long>(b) * T + j) * 3 * C + C + h * hs;
          row[j] = dot(q, k, hs) * scale;
          maxv = std::max(maxv, row[j]);
        }
        float denom = 0.0f;
        for (int j = 0; j <= i; ++j) {
          row[j] = std::exp(row[j] - maxv);
          denom += row[j];
        }
        const float inv = 1.0f / denom;
        for (int j = 0; j <= i; ++j) row[j] *= inv;
        for (int j = i + 1; j < T; ++j) row[j] = 0.0f;
      }
    }
  }
}

void attention_apply_forward(const float* probs, const float* qkv, float* y, int B, int T,
                             int C, int H) {
  const int hs = C / H;
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < T; ++i) {
        const float* row = probs + ((static_cast<long>(b) * H + h) * T + i) * T;
        float* yr = y + (static_cast<long>(b) * T + i) * C + h * hs;
        std::fill(yr, yr + hs, 0.0f);
        for (int j = 0; j <= i; ++j) {
          axpy(row[j], qkv + (static_cast<long>(b) * T + j) * 3 * C + 2 * C + h * hs, yr, hs);
        }
      }
    }
  }
}

void attention_apply_backward(const float* dy, const float* probs, const float* qkv,
                              float* dprobs, float* dqkv, int B, int T, int C, int H) {
  const int hs = C / H;
  // (b,h) pairs own disjoint column slices of dqkv, so collapse(2) is safe.
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < T; ++i) {
        const float* dyr = dy + (static_cast<long>(b) * T + i) * C + h * hs;
        const float* prow = probs + ((static_cast<long>(b) * H + h) * T + i) * T;
        float* dprow = dprobs + ((static_cast<long>(b) * H + h) * T + i) * T;
        for (int j = 0; j <= i; ++j) {
          const float* v = qkv + (static_cast<long>(b) * T + j) * 3 * C + 2 * C + h * hs;
          float* dv = dqkv + (static_cast<long>(b) * T + j) * 3 * C + 2 * C + h * hs;
          dprow[j] = dot(dyr, v, hs);
          axpy(prow[j], dyr, dv, hs);
        }
        for (int j = i + 1; j < T; ++j) dprow[j] = 0.0f;
      }
    }
  }
}

void attention_softmax_backward(const float* dprobs, const float* probs, const float* qkv,
                                float* dqkv, int B, int T, int C, int H) {
  const int hs = C / H;
  const float scale = 1.0f / std::sqrt(static_cast<float>(hs));
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < B; ++b) {
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < T; ++i) {
        const float* prow = probs + ((static_cast<long>(b) * H + h) * T + i) * T;
        const float* dprow = dprobs + ((static_cast<long>(b) * H + h) * T + i) * T;
        const float* q = qkv + (static_cast<long>(b) * T + i) * 3 * C + h * hs;
        float* dq = dqkv + (static_cast<long>(b) * T + i) * 3 * C + h * hs;
        float dotv = 0.0f;
        for (int j = 0; j <= i; ++j) dotv += dprow[j] * prow[j];
        for (int j = 0; j <= i; ++j) {
          const float dscore = prow[j] * (dprow[j] - dotv) * scale;
          const float* k = qkv + (static_cast<long>(b) * T + j) * 3 * C + C + h * hs;
          float* dk = dqkv + (static_cast<long>(b) * T + j) * 3 * C + C + h * hs;
          axpy(dscore, k, dq, hs);
          axpy(dscore, q, dk, hs);
        }
      }
    }
  }
}

void cross_entropy_forward(const float* logits, const int* targets, float* probs,
                           float* losses, int M, int V) {
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    serial::cross_entropy_forward(logits + static_cast<long>(m) * V, targets + m,
                                  probs + static_cast<long>(m) * V, losses + m, 1, V);
  }
}

void cross_entropy_backward(const float* probs, const int* targets, float* dlogits, int M,
                            int V, float scale) {
#pragma omp parallel for schedule(static)
  for (int m = 0; m < M; ++m) {
    serial::cross_entropy_backward(probs + static_cast<long>(m) * V, targets + m,
                                   dlogits + static_cast<long>(m) * V, 1, V, scale);
  }
}

void dropout_forward(const float* x, float* y, long n, float p, uint64_t seed, uint64_t tag) {
  if (p <= 0.0f) {
    std::copy(x, x + n, y);
    return;
  }
  const float keep_scale = 1.0f / (1.0f - p);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    y[i] = dropout_uniform(seed, tag, static_cast<uint64_t>(i)) >= p ? x[i] * keep_scale : 0.0f;
  }
}

void dropout_backward(const float* dy, float* dx, long n, float p, uint64_t seed,
                      uint64_t tag) {
  if (p <= 0.0f) {
    std::copy(dy, dy + n, dx);
    return;
  }
  const float keep_scale = 1.0f / (1.0f - p);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    dx[i] = dropout_uniform(seed, tag, static_cast<uint64_t>(i)) >= p ? dy[i] * keep_scale : 0.0f;
  }
}

void adamw_update(float* w, const float* g, float* m, float* v, long n, float lr, float beta1,
                  float beta2, float eps, float weight_decay, int step) {
  const float bc1 = 1.0f - std::pow(beta1, static_cast<float>(step));
  const float bc2 = 1.0f - std::pow(beta2, static_cast<float>(step));
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    const float mhat = m[i] / bc1;
    const float vhat = v[i] / bc2;
    w[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * w[i]);
  }
}

}  // namespace numerologic::kernels::omp
