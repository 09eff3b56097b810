#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "numerologic/vocab.hpp"

namespace numerologic {

struct ModelConfig {
  int n_layers = 4;
  int n_heads = 4;
  int d_model = 128;
  int context_length = 64;
  int vocab_size = 0;
  float dropout = 0.1f;

  void validate() const;  // throws ValidationError
};

struct TrainConfig {
  int steps = 1500;
  int batch_size = 64;
  float learning_rate = 1e-3f;
  float weight_decay = 0.01f;
  uint64_t seed = 1;
  int eval_interval = 100;
  int warmup_steps = 100;
  float grad_clip = 1.0f;
  float beta1 = 0.9f;
  float beta2 = 0.99f;
  // false: one line per row, newline-framed, tail masked (the default).
  // true: lines joined into one newline-separated stream, batches are
  // context-length windows on a fixed grid (the memorization regime).
  bool packed = false;

  void validate() const;
};

template <class F>
struct Param {
  std::string name;
  std::vector<int> shape;
  bool decay = false;        // weight decay applies to matrices only
  std::vector<F> w, g, m, v;  // value, grad, adam moments

  long size() const { return static_cast<long>(w.size()); }
};

// Decoder-only causal transformer over character tokens: learned token and
// position embeddings, pre-LN blocks (attention + GELU MLP), final LN, linear
// head. Sequences are rows of a [B,T] grid; targets < 0 are masked out of the
// loss. Templated so the finite-difference gradient check can run in double.
template <class F>
class Gpt {
 public:
  Gpt(const ModelConfig& cfg, uint64_t init_seed);

  const ModelConfig& config() const { return cfg_; }
  long num_parameters() const;
  std::vector<Param<F>>& params() { return params_; }
  const std::vector<Param<F>>& params() const { return params_; }

  // Runs the network over tokens[B*T]; keeps activations for backward().
  // With targets != nullptr returns the mean cross-entropy over unmasked
  // positions, otherwise 0 (logits only). Dropout is active only in
  // train_mode, keyed by dropout_seed.
  F forward(const int* tokens, const int* targets, int B, int T, bool train_mode,
            uint64_t dropout_seed);
  void backward();
  void zero_grads();

  const F* logits() const { return logits_.data(); }  // [B*T, vocab]
  int unmasked_count() const { return n_unmasked_; }

  // Global-norm clipping over all grads; returns the pre-clip norm.
  double clip_gradients(double max_norm);
  void adamw_step(F lr, F beta1, F beta2, F eps, F weight_decay, int step);

 private:
  struct LayerActs {
    std::vector<F> ln1_y, ln1_mean, ln1_rstd;
    std::vector<F> qkv;
    std::vector<F> att_probs, att_probs_drop;
    std::vector<F> att_y, att_proj;
    std::vector<F> res1;
    std::vector<F> ln2_y, ln2_mean, ln2_rstd;
    std::vector<F> fc1, gelu, fc2;
    std::vector<F> res2;
  };

  void ensure_workspace(int B, int T);
  const std::vector<F>& layer_input(int layer) const;

  ModelConfig cfg_;
  std::vector<Param<F>> params_;

  // parameter indices
  int p_wte_, p_wpe_, p_lnf_g_, p_lnf_b_, p_head_;
  struct LayerParams {
    int ln1_g, ln1_b, qkv_w, qkv_b, proj_w, proj_b, ln2_g, ln2_b, fc1_w, fc1_b, fc2_w, fc2_b;
  };
  std::vector<LayerParams> lp_;

  // activations from the last forward
  std::vector<int> tokens_, targets_;
  int B_ = 0, T_ = 0, n_unmasked_ = 0;
  bool train_mode_ = false;
  uint64_t drop_seed_ = 0;
  std::vector<F> emb_, emb_drop_;
  std::vector<LayerActs> acts_;
  std::vector<F> lnf_y_, lnf_mean_, lnf_rstd_;
  std::vector<F> logits_, probs_, losses_;

  // backward scratch
  std::vector<F> d_res_, d_branch_, d_mid_, d_fc_, d_qkv_, d_probs_, d_probs2_, d_att_y_,
      d_logits_;
};

extern template class Gpt<float>;
extern template class Gpt<double>;

// Incremental decoding with per-layer KV caches. Read-only on the model, so
// independent sessions can run on separate threads.
class GenSession {
 public:
  explicit GenSession(const Gpt<float>& model);
  void reset();
  // Feeds one token; returns the next-token logits [vocab].
  const float* step(int token);
  int position() const { return pos_; }

 private:
  const Gpt<float>& model_;
  int pos_ = 0;
  std::vector<std::vector<float>> kcache_, vcache_;  // per layer [ctx, C]
  std::vector<float> x_, ln_, qkv_, att_y_, proj_, fc_, gelu_, res_, scores_, logits_;
};

// Greedy completion: a newline is fed first (the corpus line separator the
// training batches use), then the prompt; decoding stops at newline or
// max_new. Returns the completion only, newline excluded.
std::string generate(const Gpt<float>& model, const Vocabulary& vocab, std::string_view prompt,
                     int max_new);

struct LossPoint {
  int step = 0;
  float loss = 0.0f;
};

struct TrainResult {
  std::vector<LossPoint> trace;  // mean train loss per eval interval
  float final_loss = 0.0f;
};

// From-scratch training on newline-free corpus lines. Each sample is one line
// framed by newlines; batches are trimmed to the longest line drawn and the
// tail positions are masked. Fully deterministic under cfg.seed.
TrainResult train_model(Gpt<float>& model, const std::vector<std::string>& lines,
                        const Vocabulary& vocab, const TrainConfig& cfg,
                        std::ostream* log = nullptr);

void write_loss_trace_csv(const TrainResult& result, const std::filesystem::path& path);

// Self-describing checkpoint: config, vocabulary, seed and raw fp32 tensors.
void save_checkpoint(const Gpt<float>& model, const Vocabulary& vocab, uint64_t seed,
                     const std::filesystem::path& path);

struct Checkpoint {
  ModelConfig config;
  Vocabulary vocab;
  uint64_t seed = 0;
  Gpt<float> model;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace numerologic
