#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sarc/corpus.hpp"
#include "sarc/log.hpp"
#include "sarc/nn/lstm.hpp"
#include "sarc/nn/ops.hpp"
#include "sarc/nn/tensor.hpp"
#include "sarc/rng.hpp"

namespace sarc {

enum class Arch { series_cnn, parallel_cnn, lstm, bilstm, attn_bilstm };

inline std::string arch_to_string(Arch a) {
  switch (a) {
    case Arch::series_cnn: return "series_cnn";
    case Arch::parallel_cnn: return "parallel_cnn";
    case Arch::lstm: return "lstm";
    case Arch::bilstm: return "bilstm";
    case Arch::attn_bilstm: return "attn_bilstm";
  }
  throw std::logic_error("arch_to_string: bad enum value");
}

inline Arch arch_from_string(const std::string& tag) {
  for (Arch a : {Arch::series_cnn, Arch::parallel_cnn, Arch::lstm, Arch::bilstm, Arch::attn_bilstm})
    if (arch_to_string(a) == tag) return a;
  throw std::invalid_argument("unknown architecture '" + tag + "' (expected series_cnn, parallel_cnn, lstm, bilstm or attn_bilstm)");
}

inline std::vector<Arch> all_architectures() {
  return {Arch::series_cnn, Arch::parallel_cnn, Arch::lstm, Arch::bilstm, Arch::attn_bilstm};
}

inline bool is_recurrent(Arch a) { return a == Arch::lstm || a == Arch::bilstm || a == Arch::attn_bilstm; }

// Architecture plus hyperparameters. Defaults: 200 filters, kernel 7 for the
// series stack, kernels 3/6/9/12 in parallel, 150 LSTM units, dropout 0.5
// after global pooling, 0.2 input and recurrent dropout for the RNNs.
struct ModelSpec {
  Arch arch = Arch::attn_bilstm;
  int max_len = 64;
  int embed_dim = 300;
  bool trainable_embedding = false;

  std::vector<int> kernel_sizes;  // empty -> architecture default
  int filters = 200;
  int pool_size = 2;
  int pool_stride = 2;
  double dropout = 0.5;

  int lstm_units = 150;
  double input_dropout = 0.2;
  double recurrent_dropout = 0.2;

  std::vector<int> dense_widths;  // hidden widths before the 1-unit head; empty -> default

  void apply_defaults() {
    if (kernel_sizes.empty()) kernel_sizes = arch == Arch::parallel_cnn ? std::vector<int>{3, 6, 9, 12} : std::vector<int>{7, 7};
    if (arch == Arch::series_cnn && kernel_sizes.size() == 1) kernel_sizes.push_back(kernel_sizes[0]);
    if (dense_widths.empty()) dense_widths = is_recurrent(arch) ? std::vector<int>{64} : std::vector<int>{128, 64};
  }

  void validate() const {
    if (max_len < 1) throw std::invalid_argument("model spec: max_len must be >= 1");
    if (embed_dim < 1) throw std::invalid_argument("model spec: embed_dim must be >= 1");
    if (filters < 1) throw std::invalid_argument("model spec: filters must be >= 1");
    if (lstm_units < 1) throw std::invalid_argument("model spec: lstm_units must be >= 1");
    if (pool_size < 1 || pool_stride < 1) throw std::invalid_argument("model spec: pool size/stride must be >= 1");
    for (int w : dense_widths)
      if (w < 1) throw std::invalid_argument("model spec: dense widths must be >= 1");
    for (int k : kernel_sizes) {
      if (k < 1) throw std::invalid_argument("model spec: kernel sizes must be >= 1");
      if (k > max_len)
        throw std::invalid_argument("model spec: kernel size " + std::to_string(k) + " exceeds max_len " + std::to_string(max_len));
    }
    if (arch == Arch::series_cnn) {
      // the two conv+pool blocks must stay length-viable at max_len
      int L = max_len;
      for (size_t blk = 0; blk < 2; ++blk) {
        const int k = kernel_sizes[std::min(blk, kernel_sizes.size() - 1)];
        if (L < k)
          throw std::invalid_argument("model spec: series block " + std::to_string(blk + 1) + " kernel " + std::to_string(k) +
                                      " does not fit length " + std::to_string(L));
        L = L - k + 1;
        if (L < pool_size)
          throw std::invalid_argument("model spec: series block " + std::to_string(blk + 1) + " pool " + std::to_string(pool_size) +
                                      " does not fit length " + std::to_string(L));
        L = (L - pool_size) / pool_stride + 1;
      }
    }
  }
};

// A wired model: embedding table plus the layer parameters of one
// architecture, with a forward pass over encoded batches.
template <class T>
class BuiltModel {
 public:
  BuiltModel() = default;

  BuiltModel(ModelSpec spec, int vocab_size, const std::vector<float>& embedding_rows, uint64_t init_seed)
      : spec_(std::move(spec)) {
    spec_.apply_defaults();
    spec_.validate();
    if (embedding_rows.size() != static_cast<size_t>(vocab_size) * static_cast<size_t>(spec_.embed_dim))
      throw std::invalid_argument("build_model: embedding rows have " + std::to_string(embedding_rows.size()) +
                                  " values, expected " + std::to_string(vocab_size) + "x" + std::to_string(spec_.embed_dim));

    embedding_ = nn::Tensor<T>::zeros({vocab_size, spec_.embed_dim}, spec_.trainable_embedding);
    for (size_t i = 0; i < embedding_rows.size(); ++i) embedding_.data()[i] = static_cast<T>(embedding_rows[i]);
    named_.emplace_back("embedding.weight", embedding_);

    Rng rng(init_seed);
    if (is_recurrent(spec_.arch)) {
      fwd_ = init_cell(spec_.embed_dim, spec_.lstm_units, rng);
      for (auto& nv : fwd_.named("lstm_fwd")) named_.push_back(nv);
      if (spec_.arch != Arch::lstm) {
        bwd_ = init_cell(spec_.embed_dim, spec_.lstm_units, rng);
        for (auto& nv : bwd_.named("lstm_bwd")) named_.push_back(nv);
      }
      if (spec_.arch == Arch::attn_bilstm) {
        const int H = 2 * spec_.lstm_units;
        attn_w_ = glorot(rng, H, H);
        attn_b_ = nn::Tensor<T>::zeros({H}, true);
        attn_v_ = glorot(rng, H, 1);
        named_.emplace_back("attn.W", attn_w_);
        named_.emplace_back("attn.b", attn_b_);
        named_.emplace_back("attn.v", attn_v_);
      }
    } else {
      const auto& ks = spec_.kernel_sizes;
      const size_t n_convs = spec_.arch == Arch::series_cnn ? 2 : ks.size();
      for (size_t ci = 0; ci < n_convs; ++ci) {
        const int k = ks[std::min(ci, ks.size() - 1)];
        const int cin = spec_.arch == Arch::series_cnn && ci > 0 ? spec_.filters : spec_.embed_dim;
        Conv conv;
        conv.k = k;
        conv.kernels = glorot_conv(rng, k, cin, spec_.filters);
        conv.bias = nn::Tensor<T>::zeros({spec_.filters}, true);
        const std::string name = spec_.arch == Arch::series_cnn ? "conv" + std::to_string(ci + 1) : "conv_k" + std::to_string(k);
        named_.emplace_back(name + ".kernels", conv.kernels);
        named_.emplace_back(name + ".bias", conv.bias);
        convs_.push_back(std::move(conv));
      }
    }

    int width = feature_width();
    for (size_t di = 0; di < spec_.dense_widths.size(); ++di) {
      const int w = spec_.dense_widths[di];
      DenseLayer layer{glorot(rng, width, w), nn::Tensor<T>::zeros({w}, true)};
      const std::string name = "dense" + std::to_string(di + 1);
      named_.emplace_back(name + ".W", layer.w);
      named_.emplace_back(name + ".b", layer.b);
      dense_.push_back(std::move(layer));
      width = w;
    }
    out_ = DenseLayer{glorot(rng, width, 1), nn::Tensor<T>::zeros({1}, true)};
    named_.emplace_back("out.W", out_.w);
    named_.emplace_back("out.b", out_.b);
  }

  const ModelSpec& spec() const { return spec_; }
  int vocab_size() const { return embedding_.dim(0); }

  const std::vector<std::pair<std::string, nn::Tensor<T>>>& named_parameters() const { return named_; }

  nn::Tensor<T> parameter(const std::string& name) const {
    for (const auto& [n, t] : named_)
      if (n == name) return t;
    throw std::invalid_argument("model has no parameter '" + name + "'");
  }

  // everything adam updates; the embedding only when not frozen
  std::vector<nn::Tensor<T>> trainable_parameters() const {
    std::vector<nn::Tensor<T>> out;
    for (const auto& [n, t] : named_)
      if (t.needs_grad()) out.push_back(t);
    return out;
  }

  void zero_grads() const {
    for (const auto& [n, t] : named_) const_cast<nn::Tensor<T>&>(t).zero_grad();
  }

  int64_t parameter_count() const {
    int64_t c = 0;
    for (const auto& [n, t] : named_) c += t.size();
    return c;
  }

  // one probability per example
  nn::Tensor<T> forward(const std::vector<EncodedSequence>& batch, bool training, Rng& rng) const {
    if (batch.empty()) throw std::invalid_argument("forward: empty batch");
    const int B = static_cast<int>(batch.size());
    const int L = static_cast<int>(batch[0].indices.size());
    if (L < 1) throw std::invalid_argument("forward: empty sequences");

    std::vector<int> ids;
    ids.reserve(static_cast<size_t>(B) * L);
    std::vector<int> lengths(static_cast<size_t>(B));
    bool warned = false;
    for (int b = 0; b < B; ++b) {
      if (static_cast<int>(batch[static_cast<size_t>(b)].indices.size()) != L)
        throw std::invalid_argument("forward: ragged batch (sequence lengths differ)");
      ids.insert(ids.end(), batch[static_cast<size_t>(b)].indices.begin(), batch[static_cast<size_t>(b)].indices.end());
      int len = batch[static_cast<size_t>(b)].true_length;
      if (len <= 0) {
        if (!warned) warn("forward: all-PAD example in batch; treating its first position as valid");
        warned = true;
        len = 1;
      }
      lengths[static_cast<size_t>(b)] = std::min(len, L);
    }

    nn::Tensor<T> emb = nn::embedding_lookup(embedding_, ids, B, L);
    nn::Tensor<T> features = is_recurrent(spec_.arch) ? recurrent_features(emb, lengths, training, rng)
                                                      : conv_features(emb, lengths, training, rng);
    return head(features);
  }

  // forward that also surfaces the attention weights (attn_bilstm only)
  nn::Tensor<T> forward_with_attention(const std::vector<EncodedSequence>& batch, bool training, Rng& rng,
                                       nn::Tensor<T>* attention_out) const {
    attention_capture_ = attention_out;
    auto out = forward(batch, training, rng);
    attention_capture_ = nullptr;
    return out;
  }

 private:
  struct Conv {
    int k = 0;
    nn::Tensor<T> kernels, bias;
  };
  struct DenseLayer {
    nn::Tensor<T> w, b;
  };

  nn::Tensor<T> glorot(Rng& rng, int fan_in, int fan_out) {
    auto t = nn::Tensor<T>::zeros({fan_in, fan_out}, true);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    return t;
  }

  nn::Tensor<T> glorot_conv(Rng& rng, int k, int cin, int cout) {
    auto t = nn::Tensor<T>::zeros({k, cin, cout}, true);
    const double limit = std::sqrt(6.0 / (k * cin + cout));
    for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-limit, limit));
    return t;
  }

  nn::LstmParams<T> init_cell(int dim_in, int units, Rng& rng) {
    auto p = nn::LstmParams<T>::zeros(dim_in, units, true);
    const double lim_x = std::sqrt(6.0 / (dim_in + units));
    const double lim_h = std::sqrt(6.0 / (units + units));
    for (auto* w : {&p.W_xi, &p.W_xf, &p.W_xc, &p.W_xo})
      for (auto& v : w->data()) v = static_cast<T>(rng.uniform(-lim_x, lim_x));
    for (auto* w : {&p.W_hi, &p.W_hf, &p.W_hc, &p.W_ho})
      for (auto& v : w->data()) v = static_cast<T>(rng.uniform(-lim_h, lim_h));
    for (auto& v : p.b_f.data()) v = T(1);  // open forget gates at the start
    return p;
  }

  int feature_width() const {
    switch (spec_.arch) {
      case Arch::series_cnn: return spec_.filters;
      case Arch::parallel_cnn: return spec_.filters * static_cast<int>(spec_.kernel_sizes.size());
      case Arch::lstm: return spec_.lstm_units;
      case Arch::bilstm: return 2 * spec_.lstm_units;
      case Arch::attn_bilstm: return 4 * spec_.lstm_units;  // [context; →h_T; ←h_1]
    }
    throw std::logic_error("feature_width: bad arch");
  }

  nn::Tensor<T> conv_features(const nn::Tensor<T>& emb, const std::vector<int>& lengths, bool training, Rng& rng) const {
    const int B = emb.dim(0);
    nn::Tensor<T> pooled;
    if (spec_.arch == Arch::series_cnn) {
      nn::Tensor<T> x = emb;
      std::vector<int> valid = lengths;
      for (const auto& conv : convs_) {
        x = nn::relu(nn::conv1d(x, conv.kernels, conv.bias));
        for (auto& v : valid) v = std::max(1, v - conv.k + 1);
        x = nn::maxpool1d(x, spec_.pool_size, spec_.pool_stride);
        for (auto& v : valid) v = v >= spec_.pool_size ? (v - spec_.pool_size) / spec_.pool_stride + 1 : 1;
        const int L_now = x.dim(1);
        for (auto& v : valid) v = std::min(v, L_now);
      }
      pooled = nn::global_maxpool_masked(x, valid);
    } else {
      std::vector<nn::Tensor<T>> branches;
      for (const auto& conv : convs_) {
        nn::Tensor<T> fm = nn::relu(nn::conv1d(emb, conv.kernels, conv.bias));
        std::vector<int> valid(static_cast<size_t>(B));
        for (int b = 0; b < B; ++b) valid[static_cast<size_t>(b)] = std::min(std::max(1, lengths[static_cast<size_t>(b)] - conv.k + 1), fm.dim(1));
        branches.push_back(nn::global_maxpool_masked(fm, valid));
      }
      pooled = nn::concat_cols(branches);
    }
    return nn::dropout(pooled, spec_.dropout, training, rng);
  }

  nn::Tensor<T> recurrent_features(const nn::Tensor<T>& emb, const std::vector<int>& lengths, bool training, Rng& rng) const {
    const int B = emb.dim(0);
    const int L = emb.dim(1);
    nn::Tensor<T> x = nn::dropout(emb, spec_.input_dropout, training, rng);
    std::vector<nn::Tensor<T>> steps;
    steps.reserve(static_cast<size_t>(L));
    for (int t = 0; t < L; ++t) steps.push_back(nn::step_slice(x, t));

    const bool rec_drop = training && spec_.recurrent_dropout > 0.0;
    nn::Tensor<T> fwd_mask, bwd_mask;
    if (rec_drop) {
      fwd_mask = nn::dropout_mask<T>({B, spec_.lstm_units}, spec_.recurrent_dropout, rng);
      if (spec_.arch != Arch::lstm) bwd_mask = nn::dropout_mask<T>({B, spec_.lstm_units}, spec_.recurrent_dropout, rng);
    }

    if (spec_.arch == Arch::lstm) {
      auto states = nn::rnn_unroll(steps, fwd_, lengths, rec_drop ? &fwd_mask : nullptr);
      return states.final_h;
    }

    auto bi = nn::bilstm(steps, fwd_, bwd_, lengths, rec_drop ? &fwd_mask : nullptr, rec_drop ? &bwd_mask : nullptr);
    if (spec_.arch == Arch::bilstm) return nn::concat_cols<T>({bi.forward_last, bi.backward_first});

    std::vector<nn::Tensor<T>> merged;
    merged.reserve(static_cast<size_t>(L));
    for (int t = 0; t < L; ++t)
      merged.push_back(nn::concat_cols<T>({bi.forward[static_cast<size_t>(t)], bi.backward[static_cast<size_t>(t)]}));
    auto att = nn::attention_pool(merged, lengths, attn_w_, attn_b_, attn_v_);
    if (attention_capture_) *attention_capture_ = att.weights;
    return nn::concat_cols<T>({att.context, bi.forward_last, bi.backward_first});
  }

  nn::Tensor<T> head(nn::Tensor<T> x) const {
    for (const auto& layer : dense_) x = nn::relu(nn::dense(x, layer.w, layer.b));
    return nn::sigmoid(nn::dense(x, out_.w, out_.b));
  }

  ModelSpec spec_;
  nn::Tensor<T> embedding_;
  std::vector<Conv> convs_;
  nn::LstmParams<T> fwd_, bwd_;
  nn::Tensor<T> attn_w_, attn_b_, attn_v_;
  std::vector<DenseLayer> dense_;
  DenseLayer out_;
  std::vector<std::pair<std::string, nn::Tensor<T>>> named_;
  mutable nn::Tensor<T>* attention_capture_ = nullptr;
};

template <class T>
BuiltModel<T> build_model(const ModelSpec& spec, int vocab_size, const std::vector<float>& embedding_rows, uint64_t init_seed) {
  return BuiltModel<T>(spec, vocab_size, embedding_rows, init_seed);
}

}  // namespace sarc
