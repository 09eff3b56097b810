#include "numerologic/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "numerologic/errors.hpp"
#include "numerologic/kernels.hpp"
#include "numerologic/rng.hpp"

namespace numerologic {

void ModelConfig::validate() const {
  if (n_layers <= 0 || n_heads <= 0 || d_model <= 0 || context_length <= 0) {
    throw ValidationError("model dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw ValidationError("d_model (" + std::to_string(d_model) + ") must be divisible by n_heads (" +
                          std::to_string(n_heads) + ")");
  }
  if (vocab_size < 2) throw ValidationError("vocab_size must be at least 2");
  if (dropout < 0.0f || dropout >= 1.0f) throw ValidationError("dropout must be in [0, 1)");
}

void TrainConfig::validate() const {
  if (steps <= 0 || batch_size <= 0 || eval_interval <= 0) {
    throw ValidationError("steps, batch_size and eval_interval must be positive");
  }
  if (learning_rate <= 0.0f || weight_decay <= 0.0f) {
    throw ValidationError("learning_rate and weight_decay must be positive");
  }
  if (seed == 0) throw ValidationError("seed must be positive");
  if (warmup_steps < 0 || warmup_steps > steps) {
    throw ValidationError("warmup_steps must lie in [0, steps]");
  }
  if (grad_clip <= 0.0f) throw ValidationError("grad_clip must be positive");
  if (beta1 <= 0.0f || beta1 >= 1.0f || beta2 <= 0.0f || beta2 >= 1.0f) {
    throw ValidationError("adam betas must lie in (0, 1)");
  }
}

namespace {

template <class F>
void ensure(std::vector<F>& v, size_t n) {
  if (v.size() < n) v.resize(n);
}

// Dropout site tags; each (layer, site) pair draws an independent mask stream.
constexpr uint64_t kTagEmb = 1;
uint64_t tag_probs(int l) { return 2 + 3 * static_cast<uint64_t>(l); }
uint64_t tag_attproj(int l) { return 3 + 3 * static_cast<uint64_t>(l); }
uint64_t tag_fc2(int l) { return 4 + 3 * static_cast<uint64_t>(l); }

}  // namespace

template <class F>
Gpt<F>::Gpt(const ModelConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  const int C = cfg_.d_model;
  const int V = cfg_.vocab_size;
  const int L = cfg_.n_layers;

  Rng rng(init_seed);
  const float std_base = 0.02f;
  const float std_proj = std_base / std::sqrt(2.0f * static_cast<float>(L));

  auto add_param = [&](const std::string& name, std::vector<int> shape, bool decay,
                       float init_std) {
    Param<F> p;
    p.name = name;
    p.shape = std::move(shape);
    p.decay = decay;
    long n = 1;
    for (int d : p.shape) n *= d;
    p.w.resize(static_cast<size_t>(n));
    p.g.assign(static_cast<size_t>(n), F(0));
    if (init_std == 0.0f) {
      std::fill(p.w.begin(), p.w.end(), F(0));
    } else if (init_std == -1.0f) {  // layernorm gain
      std::fill(p.w.begin(), p.w.end(), F(1));
    } else {
      for (auto& x : p.w) x = F(rng.normal(0.0f, init_std));
    }
    params_.push_back(std::move(p));
    return static_cast<int>(params_.size()) - 1;
  };

  p_wte_ = add_param("wte", {V, C}, true, std_base);
  p_wpe_ = add_param("wpe", {cfg_.context_length, C}, true, std_base);
  lp_.resize(static_cast<size_t>(L));
  for (int l = 0; l < L; ++l) {
    auto pref = "layer" + std::to_string(l) + ".";
    lp_[l].ln1_g = add_param(pref + "ln1.gain", {C}, false, -1.0f);
    lp_[l].ln1_b = add_param(pref + "ln1.bias", {C}, false, 0.0f);
    lp_[l].qkv_w = add_param(pref + "attn.qkv.w", {C, 3 * C}, true, std_base);
    lp_[l].qkv_b = add_param(pref + "attn.qkv.b", {3 * C}, false, 0.0f);
    lp_[l].proj_w = add_param(pref + "attn.proj.w", {C, C}, true, std_proj);
    lp_[l].proj_b = add_param(pref + "attn.proj.b", {C}, false, 0.0f);
    lp_[l].ln2_g = add_param(pref + "ln2.gain", {C}, false, -1.0f);
    lp_[l].ln2_b = add_param(pref + "ln2.bias", {C}, false, 0.0f);
    lp_[l].fc1_w = add_param(pref + "mlp.fc1.w", {C, 4 * C}, true, std_base);
    lp_[l].fc1_b = add_param(pref + "mlp.fc1.b", {4 * C}, false, 0.0f);
    lp_[l].fc2_w = add_param(pref + "mlp.fc2.w", {4 * C, C}, true, std_proj);
    lp_[l].fc2_b = add_param(pref + "mlp.fc2.b", {C}, false, 0.0f);
  }
  p_lnf_g_ = add_param("lnf.gain", {C}, false, -1.0f);
  p_lnf_b_ = add_param("lnf.bias", {C}, false, 0.0f);
  p_head_ = add_param("head.w", {C, V}, true, std_base);
}

template <class F>
long Gpt<F>::num_parameters() const {
  long n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <class F>
void Gpt<F>::ensure_workspace(int B, int T) {
  const long M = static_cast<long>(B) * T;
  const int C = cfg_.d_model;
  const int H = cfg_.n_heads;
  const int V = cfg_.vocab_size;
  ensure(emb_, M * C);
  ensure(emb_drop_, M * C);
  acts_.resize(static_cast<size_t>(cfg_.n_layers));
  for (auto& a : acts_) {
    ensure(a.ln1_y, M * C);
    ensure(a.ln1_mean, M);
    ensure(a.ln1_rstd, M);
    ensure(a.qkv, M * 3 * C);
    ensure(a.att_probs, static_cast<long>(B) * H * T * T);
    ensure(a.att_probs_drop, static_cast<long>(B) * H * T * T);
    ensure(a.att_y, M * C);
    ensure(a.att_proj, M * C);
    ensure(a.res1, M * C);
    ensure(a.ln2_y, M * C);
    ensure(a.ln2_mean, M);
    ensure(a.ln2_rstd, M);
    ensure(a.fc1, M * 4 * C);
    ensure(a.gelu, M * 4 * C);
    ensure(a.fc2, M * C);
    ensure(a.res2, M * C);
  }
  ensure(lnf_y_, M * C);
  ensure(lnf_mean_, M);
  ensure(lnf_rstd_, M);
  ensure(logits_, M * V);
  ensure(probs_, M * V);
  ensure(losses_, M);
  ensure(d_res_, M * C);
  ensure(d_branch_, M * C);
  ensure(d_mid_, M * std::max(3 * C, V));
  ensure(d_fc_, M * 4 * C);
  ensure(d_qkv_, M * 3 * C);
  ensure(d_probs_, static_cast<long>(B) * H * T * T);
  ensure(d_probs2_, static_cast<long>(B) * H * T * T);
  ensure(d_att_y_, M * C);
  ensure(d_logits_, M * V);
}

template <class F>
const std::vector<F>& Gpt<F>::layer_input(int layer) const {
  return layer == 0 ? emb_drop_ : acts_[static_cast<size_t>(layer) - 1].res2;
}

template <class F>
F Gpt<F>::forward(const int* tokens, const int* targets, int B, int T, bool train_mode,
                  uint64_t dropout_seed) {
  namespace k = kernels;
  if (T > cfg_.context_length) {
    throw ValidationError("sequence length " + std::to_string(T) + " exceeds context length " +
                          std::to_string(cfg_.context_length));
  }
  const int C = cfg_.d_model;
  const int H = cfg_.n_heads;
  const int V = cfg_.vocab_size;
  const long M = static_cast<long>(B) * T;
  ensure_workspace(B, T);

  B_ = B;
  T_ = T;
  train_mode_ = train_mode;
  drop_seed_ = dropout_seed;
  tokens_.assign(tokens, tokens + M);
  const float p = train_mode ? cfg_.dropout : 0.0f;

  k::embedding_forward(tokens_.data(), params_[p_wte_].w.data(), params_[p_wpe_].w.data(),
                       emb_.data(), static_cast<int>(M), T, C);
  k::dropout_forward(emb_.data(), emb_drop_.data(), M * C, p, drop_seed_, kTagEmb);

  for (int l = 0; l < cfg_.n_layers; ++l) {
    auto& a = acts_[static_cast<size_t>(l)];
    const auto& in = layer_input(l);
    k::layernorm_forward(in.data(), params_[lp_[l].ln1_g].w.data(), params_[lp_[l].ln1_b].w.data(),
                         a.ln1_y.data(), a.ln1_mean.data(), a.ln1_rstd.data(),
                         static_cast<int>(M), C);
    k::linear_forward(a.ln1_y.data(), params_[lp_[l].qkv_w].w.data(),
                      params_[lp_[l].qkv_b].w.data(), a.qkv.data(), static_cast<int>(M), C, 3 * C);
    k::attention_softmax_forward(a.qkv.data(), a.att_probs.data(), B, T, C, H);
    k::dropout_forward(a.att_probs.data(), a.att_probs_drop.data(),
                       static_cast<long>(B) * H * T * T, p, drop_seed_, tag_probs(l));
    k::attention_apply_forward(a.att_probs_drop.data(), a.qkv.data(), a.att_y.data(), B, T, C, H);
    k::linear_forward(a.att_y.data(), params_[lp_[l].proj_w].w.data(),
                      params_[lp_[l].proj_b].w.data(), a.att_proj.data(), static_cast<int>(M), C,
                      C);
    k::dropout_forward(a.att_proj.data(), a.res1.data(), M * C, p, drop_seed_, tag_attproj(l));
    k::add_inplace(a.res1.data(), in.data(), M * C);

    k::layernorm_forward(a.res1.data(), params_[lp_[l].ln2_g].w.data(),
                         params_[lp_[l].ln2_b].w.data(), a.ln2_y.data(), a.ln2_mean.data(),
                         a.ln2_rstd.data(), static_cast<int>(M), C);
    k::linear_forward(a.ln2_y.data(), params_[lp_[l].fc1_w].w.data(),
                      params_[lp_[l].fc1_b].w.data(), a.fc1.data(), static_cast<int>(M), C, 4 * C);
    k::gelu_forward(a.fc1.data(), a.gelu.data(), M * 4 * C);
    k::linear_forward(a.gelu.data(), params_[lp_[l].fc2_w].w.data(),
                      params_[lp_[l].fc2_b].w.data(), a.fc2.data(), static_cast<int>(M), 4 * C, C);
    k::dropout_forward(a.fc2.data(), a.res2.data(), M * C, p, drop_seed_, tag_fc2(l));
    k::add_inplace(a.res2.data(), a.res1.data(), M * C);
  }

  const auto& top = cfg_.n_layers == 0 ? emb_drop_ : acts_.back().res2;
  k::layernorm_forward(top.data(), params_[p_lnf_g_].w.data(), params_[p_lnf_b_].w.data(),
                       lnf_y_.data(), lnf_mean_.data(), lnf_rstd_.data(), static_cast<int>(M), C);
  k::linear_forward(lnf_y_.data(), params_[p_head_].w.data(), static_cast<const F*>(nullptr), logits_.data(),
                    static_cast<int>(M), C, V);

  if (!targets) {
    targets_.clear();
    n_unmasked_ = 0;
    return F(0);
  }
  targets_.assign(targets, targets + M);
  k::cross_entropy_forward(logits_.data(), targets_.data(), probs_.data(), losses_.data(),
                           static_cast<int>(M), V);
  n_unmasked_ = 0;
  double total = 0.0;
  for (long m = 0; m < M; ++m) {
    if (targets_[static_cast<size_t>(m)] >= 0) {
      ++n_unmasked_;
      total += static_cast<double>(losses_[static_cast<size_t>(m)]);
    }
  }
  if (n_unmasked_ == 0) throw ValidationError("batch contains no unmasked targets");
  return static_cast<F>(total / n_unmasked_);
}

template <class F>
void Gpt<F>::backward() {
  namespace k = kernels;
  if (targets_.empty()) throw ValidationError("backward() requires a forward pass with targets");
  const int B = B_, T = T_;
  const int C = cfg_.d_model;
  const int H = cfg_.n_heads;
  const int V = cfg_.vocab_size;
  const long M = static_cast<long>(B) * T;
  const float p = train_mode_ ? cfg_.dropout : 0.0f;

  k::cross_entropy_backward(probs_.data(), targets_.data(), d_logits_.data(),
                            static_cast<int>(M), V, F(1) / F(n_unmasked_));

  // head
  k::linear_backward_params(lnf_y_.data(), d_logits_.data(), params_[p_head_].g.data(), static_cast<F*>(nullptr),
                            static_cast<int>(M), C, V);
  k::linear_backward_input(d_logits_.data(), params_[p_head_].w.data(), d_mid_.data(),
                           static_cast<int>(M), C, V);

  // final layernorm
  const auto& top = cfg_.n_layers == 0 ? emb_drop_ : acts_.back().res2;
  k::layernorm_backward(top.data(), params_[p_lnf_g_].w.data(), lnf_mean_.data(),
                        lnf_rstd_.data(), d_mid_.data(), d_res_.data(),
                        params_[p_lnf_g_].g.data(), params_[p_lnf_b_].g.data(),
                        static_cast<int>(M), C);

  for (int l = cfg_.n_layers - 1; l >= 0; --l) {
    auto& a = acts_[static_cast<size_t>(l)];
    const auto& in = layer_input(l);

    // MLP branch: d_res_ holds d(res2)
    k::dropout_backward(d_res_.data(), d_branch_.data(), M * C, p, drop_seed_, tag_fc2(l));
    k::linear_backward_params(a.gelu.data(), d_branch_.data(), params_[lp_[l].fc2_w].g.data(),
                              params_[lp_[l].fc2_b].g.data(), static_cast<int>(M), 4 * C, C);
    k::linear_backward_input(d_branch_.data(), params_[lp_[l].fc2_w].w.data(), d_fc_.data(),
                             static_cast<int>(M), 4 * C, C);
    k::gelu_backward(a.fc1.data(), d_fc_.data(), d_fc_.data(), M * 4 * C);
    k::linear_backward_params(a.ln2_y.data(), d_fc_.data(), params_[lp_[l].fc1_w].g.data(),
                              params_[lp_[l].fc1_b].g.data(), static_cast<int>(M), C, 4 * C);
    k::linear_backward_input(d_fc_.data(), params_[lp_[l].fc1_w].w.data(), d_mid_.data(),
                             static_cast<int>(M), C, 4 * C);
    k::layernorm_backward(a.res1.data(), params_[lp_[l].ln2_g].w.data(), a.ln2_mean.data(),
                          a.ln2_rstd.data(), d_mid_.data(), d_branch_.data(),
                          params_[lp_[l].ln2_g].g.data(), params_[lp_[l].ln2_b].g.data(),
                          static_cast<int>(M), C);
    // total d(res1): LN2 path + residual carry
    k::add_inplace(d_branch_.data(), d_res_.data(), M * C);

    // attention branch
    k::dropout_backward(d_branch_.data(), d_mid_.data(), M * C, p, drop_seed_, tag_attproj(l));
    k::linear_backward_params(a.att_y.data(), d_mid_.data(), params_[lp_[l].proj_w].g.data(),
                              params_[lp_[l].proj_b].g.data(), static_cast<int>(M), C, C);
    k::linear_backward_input(d_mid_.data(), params_[lp_[l].proj_w].w.data(), d_att_y_.data(),
                             static_cast<int>(M), C, C);
    std::fill(d_qkv_.begin(), d_qkv_.begin() + M * 3 * C, F(0));
    k::attention_apply_backward(d_att_y_.data(), a.att_probs_drop.data(), a.qkv.data(),
                                d_probs_.data(), d_qkv_.data(), B, T, C, H);
    k::dropout_backward(d_probs_.data(), d_probs2_.data(), static_cast<long>(B) * H * T * T, p,
                        drop_seed_, tag_probs(l));
    k::attention_softmax_backward(d_probs2_.data(), a.att_probs.data(), a.qkv.data(),
                                  d_qkv_.data(), B, T, C, H);
    k::linear_backward_params(a.ln1_y.data(), d_qkv_.data(), params_[lp_[l].qkv_w].g.data(),
                              params_[lp_[l].qkv_b].g.data(), static_cast<int>(M), C, 3 * C);
    k::linear_backward_input(d_qkv_.data(), params_[lp_[l].qkv_w].w.data(), d_mid_.data(),
                             static_cast<int>(M), C, 3 * C);
    k::layernorm_backward(in.data(), params_[lp_[l].ln1_g].w.data(), a.ln1_mean.data(),
                          a.ln1_rstd.data(), d_mid_.data(), d_res_.data(),
                          params_[lp_[l].ln1_g].g.data(), params_[lp_[l].ln1_b].g.data(),
                          static_cast<int>(M), C);
    // d(input of layer l) = LN1 path + residual carry
    k::add_inplace(d_res_.data(), d_branch_.data(), M * C);
  }

  k::dropout_backward(d_res_.data(), d_branch_.data(), M * C, p, drop_seed_, kTagEmb);
  k::embedding_backward(tokens_.data(), d_branch_.data(), params_[p_wte_].g.data(),
                        params_[p_wpe_].g.data(), static_cast<int>(M), T, C);
}

template <class F>
void Gpt<F>::zero_grads() {
  for (auto& p : params_) std::fill(p.g.begin(), p.g.end(), F(0));
}

template <class F>
double Gpt<F>::clip_gradients(double max_norm) {
  double sumsq = 0.0;
  for (const auto& p : params_) {
    double s = 0.0;
    for (F g : p.g) s += static_cast<double>(g) * static_cast<double>(g);
    sumsq += s;
  }
  const double norm = std::sqrt(sumsq);
  if (norm > max_norm && norm > 0.0) {
    const F scale = static_cast<F>(max_norm / norm);
    for (auto& p : params_) {
      for (auto& g : p.g) g *= scale;
    }
  }
  return norm;
}

template <class F>
void Gpt<F>::adamw_step(F lr, F beta1, F beta2, F eps, F weight_decay, int step) {
  namespace k = kernels;
  for (auto& p : params_) {
    if (p.m.empty()) {
      p.m.assign(p.w.size(), F(0));
      p.v.assign(p.w.size(), F(0));
    }
    k::adamw_update(p.w.data(), p.g.data(), p.m.data(), p.v.data(), p.size(), lr, beta1, beta2,
                    eps, p.decay ? weight_decay : F(0), step);
  }
}

template class Gpt<float>;
template class Gpt<double>;

// ---------------------------------------------------------------------------
// Incremental decoding

GenSession::GenSession(const Gpt<float>& model) : model_(model) {
  const auto& cfg = model.config();
  const int C = cfg.d_model;
  kcache_.assign(static_cast<size_t>(cfg.n_layers),
                 std::vector<float>(static_cast<size_t>(cfg.context_length) * C));
  vcache_.assign(static_cast<size_t>(cfg.n_layers),
                 std::vector<float>(static_cast<size_t>(cfg.context_length) * C));
  x_.resize(static_cast<size_t>(C));
  ln_.resize(static_cast<size_t>(C));
  qkv_.resize(static_cast<size_t>(3 * C));
  att_y_.resize(static_cast<size_t>(C));
  proj_.resize(static_cast<size_t>(C));
  fc_.resize(static_cast<size_t>(4 * C));
  gelu_.resize(static_cast<size_t>(4 * C));
  res_.resize(static_cast<size_t>(C));
  scores_.resize(static_cast<size_t>(cfg.context_length));
  logits_.resize(static_cast<size_t>(cfg.vocab_size));
}

void GenSession::reset() { pos_ = 0; }

const float* GenSession::step(int token) {
  // Single-row forward with cached keys/values; always eval mode. Uses the
  // serial kernels directly: the per-token work is tiny and sessions are run
  // in parallel from the outside.
  namespace ks = kernels::serial;
  const auto& cfg = model_.config();
  const auto& params = model_.params();
  if (pos_ >= cfg.context_length) {
    throw ValidationError("generation exceeded context length");
  }
  if (token < 0 || token >= cfg.vocab_size) {
    throw ValidationError("token id out of range");
  }
  const int C = cfg.d_model;
  const int H = cfg.n_heads;
  const int hs = C / H;
  const float scale = 1.0f / std::sqrt(static_cast<float>(hs));

  // wte/wpe are the first two params by construction
  const float* wte = params[0].w.data();
  const float* wpe = params[1].w.data();
  for (int c = 0; c < C; ++c) {
    x_[static_cast<size_t>(c)] =
        wte[static_cast<long>(token) * C + c] + wpe[static_cast<long>(pos_) * C + c];
  }

  int pi = 2;  // parameter cursor, mirrors construction order
  std::vector<float> mean(1), rstd(1);
  for (int l = 0; l < cfg.n_layers; ++l) {
    const float* ln1_g = params[static_cast<size_t>(pi++)].w.data();
    const float* ln1_b = params[static_cast<size_t>(pi++)].w.data();
    const float* qkv_w = params[static_cast<size_t>(pi++)].w.data();
    const float* qkv_b = params[static_cast<size_t>(pi++)].w.data();
    const float* proj_w = params[static_cast<size_t>(pi++)].w.data();
    const float* proj_b = params[static_cast<size_t>(pi++)].w.data();
    const float* ln2_g = params[static_cast<size_t>(pi++)].w.data();
    const float* ln2_b = params[static_cast<size_t>(pi++)].w.data();
    const float* fc1_w = params[static_cast<size_t>(pi++)].w.data();
    const float* fc1_b = params[static_cast<size_t>(pi++)].w.data();
    const float* fc2_w = params[static_cast<size_t>(pi++)].w.data();
    const float* fc2_b = params[static_cast<size_t>(pi++)].w.data();

    ks::layernorm_forward(x_.data(), ln1_g, ln1_b, ln_.data(), mean.data(), rstd.data(), 1, C);
    ks::linear_forward(ln_.data(), qkv_w, qkv_b, qkv_.data(), 1, C, 3 * C);
    std::copy(qkv_.begin() + C, qkv_.begin() + 2 * C,
              kcache_[static_cast<size_t>(l)].begin() + static_cast<long>(pos_) * C);
    std::copy(qkv_.begin() + 2 * C, qkv_.end(),
              vcache_[static_cast<size_t>(l)].begin() + static_cast<long>(pos_) * C);

    for (int h = 0; h < H; ++h) {
      const float* q = qkv_.data() + h * hs;
      const float* kc = kcache_[static_cast<size_t>(l)].data() + h * hs;
      const float* vc = vcache_[static_cast<size_t>(l)].data() + h * hs;
      float maxv = -std::numeric_limits<float>::infinity();
      for (int j = 0; j <= pos_; ++j) {
        float acc = 0.0f;
        const float* kj = kc + static_cast<long>(j) * C;
        for (int c = 0; c < hs; ++c) acc += q[c] * kj[c];
        scores_[static_cast<size_t>(j)] = acc * scale;
        maxv = std::max(maxv, scores_[static_cast<size_t>(j)]);
      }
      float denom = 0.0f;
      for (int j = 0; j <= pos_; ++j) {
        scores_[static_cast<size_t>(j)] = std::exp(scores_[static_cast<size_t>(j)] - maxv);
        denom += scores_[static_cast<size_t>(j)];
      }
      const float inv = 1.0f / denom;
      float* yh = att_y_.data() + h * hs;
      std::fill(yh, yh + hs, 0.0f);
      for (int j = 0; j <= pos_; ++j) {
        const float pj = scores_[static_cast<size_t>(j)] * inv;
        const float* vj = vc + static_cast<long>(j) * C;
        for (int c = 0; c < hs; ++c) yh[c] += pj * vj[c];
      }
    }

    ks::linear_forward(att_y_.data(), proj_w, proj_b, proj_.data(), 1, C, C);
    for (int c = 0; c < C; ++c) res_[static_cast<size_t>(c)] = x_[static_cast<size_t>(c)] + proj_[static_cast<size_t>(c)];

    ks::layernorm_forward(res_.data(), ln2_g, ln2_b, ln_.data(), mean.data(), rstd.data(), 1, C);
    ks::linear_forward(ln_.data(), fc1_w, fc1_b, fc_.data(), 1, C, 4 * C);
    ks::gelu_forward(fc_.data(), gelu_.data(), 4 * C);
    ks::linear_forward(gelu_.data(), fc2_w, fc2_b, proj_.data(), 1, 4 * C, C);
    for (int c = 0; c < C; ++c) x_[static_cast<size_t>(c)] = res_[static_cast<size_t>(c)] + proj_[static_cast<size_t>(c)];
  }

  const float* lnf_g = params[static_cast<size_t>(pi++)].w.data();
  const float* lnf_b = params[static_cast<size_t>(pi++)].w.data();
  const float* head = params[static_cast<size_t>(pi++)].w.data();
  ks::layernorm_forward(x_.data(), lnf_g, lnf_b, ln_.data(), mean.data(), rstd.data(), 1, C);
  ks::linear_forward(ln_.data(), head, static_cast<const float*>(nullptr), logits_.data(), 1, C,
                     cfg.vocab_size);
  ++pos_;
  return logits_.data();
}

std::string generate(const Gpt<float>& model, const Vocabulary& vocab, std::string_view prompt,
                     int max_new) {
  const int nl = vocab.require_id('\n');
  std::vector<int> ids;
  ids.push_back(nl);
  for (char c : prompt) ids.push_back(vocab.require_id(c));
  if (static_cast<int>(ids.size()) > model.config().context_length) {
    throw ValidationError("prompt longer than context length");
  }

  GenSession session(model);
  const float* logits = nullptr;
  for (int id : ids) logits = session.step(id);

  std::string out;
  const int V = model.config().vocab_size;
  for (int i = 0; i < max_new && session.position() < model.config().context_length; ++i) {
    int best = 0;
    for (int v = 1; v < V; ++v) {
      if (logits[v] > logits[best]) best = v;
    }
    if (best == nl) break;
    out += vocab.symbol(best);
    if (i + 1 < max_new && session.position() < model.config().context_length) {
      logits = session.step(best);
    } else {
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

float lr_at(const TrainConfig& cfg, int step) {
  if (step < cfg.warmup_steps) {
    return cfg.learning_rate * static_cast<float>(step + 1) / static_cast<float>(cfg.warmup_steps);
  }
  const float min_lr = 0.1f * cfg.learning_rate;
  const int decay_span = std::max(1, cfg.steps - cfg.warmup_steps);
  const float progress = static_cast<float>(step - cfg.warmup_steps) / static_cast<float>(decay_span);
  return min_lr + 0.5f * (cfg.learning_rate - min_lr) * (1.0f + std::cos(static_cast<float>(M_PI) * progress));
}

}  // namespace

TrainResult train_model(Gpt<float>& model, const std::vector<std::string>& lines,
                        const Vocabulary& vocab, const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (lines.empty()) throw ValidationError("training corpus is empty");
  const int ctx = model.config().context_length;

  // Pre-encode all lines; OOV and over-long lines are hard errors up front.
  std::vector<std::vector<int>> encoded;
  encoded.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (!cfg.packed && static_cast<int>(line.size()) + 1 > ctx) {
      throw ValidationError("line " + std::to_string(i + 1) + " needs " +
                            std::to_string(line.size() + 1) + " positions but context length is " +
                            std::to_string(ctx));
    }
    try {
      encoded.push_back(vocab.encode(line));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(e.what()) + " (line " + std::to_string(i + 1) + ")");
    }
  }
  const int nl = vocab.require_id('\n');

  Rng batch_rng(derive_seed(cfg.seed, 0xba7c4));
  const int B = cfg.batch_size;
  std::vector<int> tokens, targets, picks(static_cast<size_t>(B));

  // Packed mode: one fixed newline-separated stream, windows on a ctx grid.
  std::vector<int> stream;
  int n_windows = 0;
  if (cfg.packed) {
    stream.push_back(nl);
    for (const auto& ids : encoded) {
      stream.insert(stream.end(), ids.begin(), ids.end());
      stream.push_back(nl);
    }
    n_windows = static_cast<int>((stream.size() - 2) / static_cast<size_t>(ctx)) + 1;
  }

  TrainResult result;
  double interval_sum = 0.0;
  int interval_n = 0;

  for (int step = 0; step < cfg.steps; ++step) {
    int T = 0;
    if (cfg.packed) {
      T = ctx;
      tokens.assign(static_cast<size_t>(B) * T, nl);
      targets.assign(static_cast<size_t>(B) * T, -1);
      for (int b = 0; b < B; ++b) {
        const long offset = static_cast<long>(batch_rng.uniform_u64(static_cast<uint64_t>(n_windows))) * ctx;
        int* tok = tokens.data() + static_cast<long>(b) * T;
        int* tgt = targets.data() + static_cast<long>(b) * T;
        for (int t = 0; t < T; ++t) {
          const size_t p = static_cast<size_t>(offset + t);
          if (p + 1 < stream.size()) {
            tok[t] = stream[p];
            tgt[t] = stream[p + 1];
          }
        }
      }
    } else {
      int max_len = 0;
      for (int b = 0; b < B; ++b) {
        picks[static_cast<size_t>(b)] =
            static_cast<int>(batch_rng.uniform_u64(encoded.size()));
        max_len = std::max(max_len, static_cast<int>(encoded[static_cast<size_t>(picks[static_cast<size_t>(b)])].size()));
      }
      T = max_len + 1;
      tokens.assign(static_cast<size_t>(B) * T, nl);
      targets.assign(static_cast<size_t>(B) * T, -1);
      for (int b = 0; b < B; ++b) {
        const auto& ids = encoded[static_cast<size_t>(picks[static_cast<size_t>(b)])];
        const int n = static_cast<int>(ids.size());
        int* tok = tokens.data() + static_cast<long>(b) * T;
        int* tgt = targets.data() + static_cast<long>(b) * T;
        // tok[0] is the newline separator; the line follows; the target tail
        // is the closing newline, every position past it is masked.
        for (int t = 0; t < n; ++t) tok[t + 1] = ids[static_cast<size_t>(t)];
        for (int t = 0; t < n; ++t) tgt[t] = ids[static_cast<size_t>(t)];
        tgt[n] = nl;
      }
    }

    model.zero_grads();
    const float loss = model.forward(tokens.data(), targets.data(), B, T, true,
                                     derive_seed(cfg.seed, 0xd404 + static_cast<uint64_t>(step)));
    model.backward();
    model.clip_gradients(cfg.grad_clip);
    model.adamw_step(lr_at(cfg, step), cfg.beta1, cfg.beta2, 1e-8f, cfg.weight_decay, step + 1);

    interval_sum += loss;
    ++interval_n;
    if ((step + 1) % cfg.eval_interval == 0 || step + 1 == cfg.steps) {
      const float mean = static_cast<float>(interval_sum / interval_n);
      result.trace.push_back({step + 1, mean});
      if (log) {
        (*log) << "step " << (step + 1) << "/" << cfg.steps << " | loss " << mean << " | lr "
               << lr_at(cfg, step) << "\n";
      }
      interval_sum = 0.0;
      interval_n = 0;
    }
  }
  result.final_loss = result.trace.empty() ? 0.0f : result.trace.back().loss;
  return result;
}

void write_loss_trace_csv(const TrainResult& result, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ExecutionError("cannot open " + path.string() + " for writing");
  f << "step,loss\n";
  for (const auto& p : result.trace) f << p.step << "," << p.loss << "\n";
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr char kMagic[8] = {'N', 'L', 'C', 'K', 'P', 'T', '0', '1'};
}

void save_checkpoint(const Gpt<float>& model, const Vocabulary& vocab, uint64_t seed,
                     const std::filesystem::path& path) {
  const auto& cfg = model.config();
  nlohmann::json header;
  header["config"] = {{"n_layers", cfg.n_layers},
                      {"n_heads", cfg.n_heads},
                      {"d_model", cfg.d_model},
                      {"context_length", cfg.context_length},
                      {"vocab_size", cfg.vocab_size},
                      {"dropout", cfg.dropout}};
  header["vocab"] = vocab.symbols();
  header["seed"] = seed;
  auto params_json = nlohmann::json::array();
  for (const auto& p : model.params()) {
    params_json.push_back({{"name", p.name}, {"shape", p.shape}});
  }
  header["params"] = params_json;
  const std::string header_str = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw ExecutionError("cannot open " + path.string() + " for writing");
  f.write(kMagic, sizeof(kMagic));
  const uint64_t hlen = header_str.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& p : model.params()) {
    f.write(reinterpret_cast<const char*>(p.w.data()),
            static_cast<std::streamsize>(p.w.size() * sizeof(float)));
  }
  if (!f) throw ExecutionError("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ExecutionError("cannot open checkpoint " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError(path.string() + " is not a numerologic checkpoint");
  }
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string header_str(hlen, '\0');
  f.read(header_str.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw ExecutionError("truncated checkpoint header: " + path.string());
  nlohmann::json header = nlohmann::json::parse(header_str);

  ModelConfig cfg;
  cfg.n_layers = header["config"]["n_layers"].get<int>();
  cfg.n_heads = header["config"]["n_heads"].get<int>();
  cfg.d_model = header["config"]["d_model"].get<int>();
  cfg.context_length = header["config"]["context_length"].get<int>();
  cfg.vocab_size = header["config"]["vocab_size"].get<int>();
  cfg.dropout = header["config"]["dropout"].get<float>();

  Checkpoint ckpt{cfg, Vocabulary::from_symbols(header["vocab"].get<std::string>()),
                  header["seed"].get<uint64_t>(), Gpt<float>(cfg, 0)};
  auto& params = ckpt.model.params();
  const auto& params_json = header["params"];
  if (params_json.size() != params.size()) {
    throw ValidationError("checkpoint parameter list does not match architecture");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& pj = params_json[i];
    if (pj["name"].get<std::string>() != params[i].name ||
        pj["shape"].get<std::vector<int>>() != params[i].shape) {
      throw ValidationError("checkpoint tensor " + params[i].name + " does not match architecture");
    }
    f.read(reinterpret_cast<char*>(params[i].w.data()),
           static_cast<std::streamsize>(params[i].w.size() * sizeof(float)));
  }
  if (!f) throw ExecutionError("truncated checkpoint tensors: " + path.string());
  return ckpt;
}

}  // namespace numerologic
