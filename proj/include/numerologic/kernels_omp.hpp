#pragma once

// OpenMP float kernels. Same contracts as kernels_serial.hpp. Every parallel
// loop gives each output element exactly one writer with a fixed inner
// summation order, so results are reproducible and independent of the thread
// count.

#include <cstdint>

namespace numerologic::kernels::omp {

void linear_forward(const float* x, const float* w, const float* b, float* y, int M, int K,
                    int N);
void linear_backward_input(const float* dy, const float* w, float* dx, int M, int K, int N);
void linear_backward_params(const float* x, const float* dy, float* dw, float* db, int M,
                            int K, int N);

void layernorm_forward(const float* x, const float* gain, const float* bias, float* y,
                       float* mean, float* rstd, int rows, int C);
void layernorm_backward(const float* x, const float* gain, const float* mean,
                        const float* rstd, const float* dy, float* dx, float* dgain,
                        float* dbias, int rows, int C);

void gelu_forward(const float* x, float* y, long n);
void gelu_backward(const float* x, const float* dy, float* dx, long n);
void add_inplace(float* y, const float* x, long n);

void embedding_forward(const int* tokens, const float* wte, const float* wpe, float* y, int M,
                       int T, int C);
void embedding_backward(const int* tokens, const float* dy, float* dwte, float* dwpe, int M,
                        int T, int C);

void attention_softmax_forward(const float* qkv, float* probs, int B, int T, int C, int H);
void attention_apply_forward(const float* probs, const float* qkv, float* y, int B, int T,
                             int C, int H);
void attention_apply_backward(const float* dy, const float* probs, const float* qkv,
                              float* dprobs, float* dqkv, int B, int T, int C, int H);
void attention_softmax_backward(const float* dprobs, const float* probs, const float* qkv,
                                float* dqkv, int B, int T, int C, int H);

void cross_entropy_forward(const float* logits, const int* targets, float* probs,
                           float* losses, int M, int V);
void cross_entropy_backward(const float* probs, const int* targets, float* dlogits, int M,
                            int V, float scale);

void dropout_forward(const float* x, float* y, long n, float p, uint64_t seed, uint64_t tag);
void dropout_backward(const float* dy, float* dx, long n, float p, uint64_t seed,
                      uint64_t tag);

void adamw_update(float* w, const float* g, float* m, float* v, long n, float lr, float beta1,
                  float beta2, float eps, float weight_decay, int step);

}  // namespace numerologic::kernels::omp
