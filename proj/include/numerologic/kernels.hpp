#pragma once

#include <cstdint>

#include "numerologic/kernels_serial.hpp"
#include "numerologic/kernels_omp.hpp"

namespace numerologic::kernels {

enum class Backend { serial, parallel };

void set_backend(Backend b);
Backend active_backend();

// Dispatch layer. The float overloads route to the OpenMP kernels unless the
// serial backend is forced; every other scalar type (double is used by the
// gradient checks) always runs the serial reference.

#define NL_DISPATCH(fn, ...)                  \
  do {                                        \
    if (active_backend() == Backend::parallel) \
      omp::fn(__VA_ARGS__);                   \
    else                                      \
      serial::fn(__VA_ARGS__);                \
  } while (0)

template <class F>
void linear_forward(const F* x, const F* w, const F* b, F* y, int M, int K, int N) {
  serial::linear_forward(x, w, b, y, M, K, N);
}
inline void linear_forward(const float* x, const float* w, const float* b, float* y, int M,
                           int K, int N) {
  NL_DISPATCH(linear_forward, x, w, b, y, M, K, N);
}

template <class F>
void linear_backward_input(const F* dy, const F* w, F* dx, int M, int K, int N) {
  serial::linear_backward_input(dy, w, dx, M, K, N);
}
inline void linear_backward_input(const float* dy, const float* w, float* dx, int M, int K,
                                  int N) {
  NL_DISPATCH(linear_backward_input, dy, w, dx, M, K, N);
}

template <class F>
void linear_backward_params(const F* x, const F* dy, F* dw, F* db, int M, int K, int N) {
  serial::linear_backward_params(x, dy, dw, db, M, K, N);
}
inline void linear_backward_params(const float* x, const float* dy, float* dw, float* db,
                                   int M, int K, int N) {
  NL_DISPATCH(linear_backward_params, x, dy, dw, db, M, K, N);
}

template <class F>
void layernorm_forward(const F* x, const F* gain, const F* bias, F* y, F* mean, F* rstd,
                       int rows, int C) {
  serial::layernorm_forward(x, gain, bias, y, mean, rstd, rows, C);
}
inline void layernorm_forward(const float* x, const float* gain, const float* bias, float* y,
                              float* mean, float* rstd, int rows, int C) {
  NL_DISPATCH(layernorm_forward, x, gain, bias, y, mean, rstd, rows, C);
}

template <class F>
void layernorm_backward(const F* x, const F* gain, const F* mean, const F* rstd, const F* dy,
                        F* dx, F* dgain, F* dbias, int rows, int C) {
  serial::layernorm_backward(x, gain, mean, rstd, dy, dx, dgain, dbias, rows, C);
}
inline void layernorm_backward(const float* x, const float* gain, const float* mean,
                               const float* rstd, const float* dy, float* dx, float* dgain,
                               float* dbias, int rows, int C) {
  NL_DISPATCH(layernorm_backward, x, gain, mean, rstd, dy, dx, dgain, dbias, rows, C);
}

template <class F>
void gelu_forward(const F* x, F* y, long n) {
  serial::gelu_forward(x, y, n);
}
inline void gelu_forward(const float* x, float* y, long n) { NL_DISPATCH(gelu_forward, x, y, n); }

template <class F>
void gelu_backward(const F* x, const F* dy, F* dx, long n) {
  serial::gelu_backward(x, dy, dx, n);
}
inline void gelu_backward(const float* x, const float* dy, float* dx, long n) {
  NL_DISPATCH(gelu_backward, x, dy, dx, n);
}

template <class F>
void add_inplace(F* y, const F* x, long n) {
  serial::add_inplace(y, x, n);
}
inline void add_inplace(float* y, const float* x, long n) { NL_DISPATCH(add_inplace, y, x, n); }

template <class F>
void embedding_forward(const int* tokens, const F* wte, const F* wpe, F* y, int M, int T,
                       int C) {
  serial::embedding_forward(tokens, wte, wpe, y, M, T, C);
}
inline void embedding_forward(const int* tokens, const float* wte, const float* wpe, float* y,
                              int M, int T, int C) {
  NL_DISPATCH(embedding_forward, tokens, wte, wpe, y, M, T, C);
}

template <class F>
void embedding_backward(const int* tokens, const F* dy, F* dwte, F* dwpe, int M, int T,
                        int C) {
  serial::embedding_backward(tokens, dy, dwte, dwpe, M, T, C);
}
inline void embedding_backward(const int* tokens, const float* dy, float* dwte, float* dwpe,
                               int M, int T, int C) {
  NL_DISPATCH(embedding_backward, tokens, dy, dwte, dwpe, M, T, C);
}

template <class F>
void attention_softmax_forward(const F* qkv, F* probs, int B, int T, int C, int H) {
  serial::attention_softmax_forward(qkv, probs, B, T, C, H);
}
inline void attention_softmax_forward(const float* qkv, float* probs, int B, int T, int C,
                                      int H) {
  NL_DISPATCH(attention_softmax_forward, qkv, probs, B, T, C, H);
}

template <class F>
void attention_apply_forward(const F* probs, const F* qkv, F* y, int B, int T, int C, int H) {
  serial::attention_apply_forward(probs, qkv, y, B, T, C, H);
}
inline void attention_apply_forward(const float* probs, const float* qkv, float* y, int B,
                                    int T, int C, int H) {
  NL_DISPATCH(attention_apply_forward, probs, qkv, y, B, T, C, H);
}

template <class F>
void attention_apply_backward(const F* dy, const F* probs, const F* qkv, F* dprobs, F* dqkv,
                              int B, int T, int C, int H) {
  serial::attention_apply_backward(dy, probs, qkv, dprobs, dqkv, B, T, C, H);
}
inline void attention_apply_backward(const float* dy, const float* probs, const float* qkv,
                                     float* dprobs, float* dqkv, int B, int T, int C, int H) {
  NL_DISPATCH(attention_apply_backward, dy, probs, qkv, dprobs, dqkv, B, T, C, H);
}

template <class F>
void attention_softmax_backward(const F* dprobs, const F* probs, const F* qkv, F* dqkv, int B,
                                int T, int C, int H) {
  serial::attention_softmax_backward(dprobs, probs, qkv, dqkv, B, T, C, H);
}
inline void attention_softmax_backward(const float* dprobs, const float* probs,
                                       const float* qkv, float* dqkv, int B, int T, int C,
                                       int H) {
  NL_DISPATCH(attention_softmax_backward, dprobs, probs, qkv, dqkv, B, T, C, H);
}

template <class F>
void cross_entropy_forward(const F* logits, const int* targets, F* probs, F* losses, int M,
                           int V) {
  serial::cross_entropy_forward(logits, targets, probs, losses, M, V);
}
inline void cross_entropy_forward(const float* logits, const int* targets, float* probs,
                                  float* losses, int M, int V) {
  NL_DISPATCH(cross_entropy_forward, logits, targets, probs, losses, M, V);
}

template <class F>
void cross_entropy_backward(const F* probs, const int* targets, F* dlogits, int M, int V,
                            F scale) {
  serial::cross_entropy_backward(probs, targets, dlogits, M, V, scale);
}
inline void cross_entropy_backward(const float* probs, const int* targets, float* dlogits,
                                   int M, int V, float scale) {
  NL_DISPATCH(cross_entropy_backward, probs, targets, dlogits, M, V, scale);
}

template <class F>
void dropout_forward(const F* x, F* y, long n, float p, uint64_t seed, uint64_t tag) {
  serial::dropout_forward(x, y, n, p, seed, tag);
}
inline void dropout_forward(const float* x, float* y, long n, float p, uint64_t seed,
                            uint64_t tag) {
  NL_DISPATCH(dropout_forward, x, y, n, p, seed, tag);
}

template <class F>
void dropout_backward(const F* dy, F* dx, long n, float p, uint64_t seed, uint64_t tag) {
  serial::dropout_backward(dy, dx, n, p, seed, tag);
}
inline void dropout_backward(const float* dy, float* dx, long n, float p, uint64_t seed,
                             uint64_t tag) {
  NL_DISPATCH(dropout_backward, dy, dx, n, p, seed, tag);
}

template <class F>
void adamw_update(F* w, const F* g, F* m, F* v, long n, F lr, F beta1, F beta2, F eps,
                  F weight_decay, int step) {
  serial::adamw_update(w, g, m, v, n, lr, beta1, beta2, eps, weight_decay, step);
}
inline void adamw_update(float* w, const float* g, float* m, float* v, long n, float lr,
                         float beta1, float beta2, float eps, float weight_decay, int step) {
  NL_DISPATCH(adamw_update, w, g, m, v, n, lr, beta1, beta2, eps, weight_decay, step);
}

#undef NL_DISPATCH

}  // namespace numerologic::kernels
