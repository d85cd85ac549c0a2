#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sarc/nn/ops.hpp"
#include "sarc/nn/tensor.hpp"

namespace sarc::nn {

// Gate parameters of one LSTM cell with diagonal peephole connections.
template <class T>
struct LstmParams {
  int dim_in = 0;
  int units = 0;

  Tensor<T> W_xi, W_xf, W_xc, W_xo;  // [dim_in, units]
  Tensor<T> W_hi, W_hf, W_hc, W_ho;  // [units, units]
  Tensor<T> w_ci, w_cf, w_co;        // [units] peepholes
  Tensor<T> b_i, b_f, b_c, b_o;      // [units]

  static LstmParams zeros(int dim_in, int units, bool needs_grad = true) {
    LstmParams p;
    p.dim_in = dim_in;
    p.units = units;
    for (auto* w : {&p.W_xi, &p.W_xf, &p.W_xc, &p.W_xo}) *w = Tensor<T>::zeros({dim_in, units}, needs_grad);
    for (auto* w : {&p.W_hi, &p.W_hf, &p.W_hc, &p.W_ho}) *w = Tensor<T>::zeros({units, units}, needs_grad);
    for (auto* v : {&p.w_ci, &p.w_cf, &p.w_co, &p.b_i, &p.b_f, &p.b_c, &p.b_o}) *v = Tensor<T>::zeros({units}, needs_grad);
    return p;
  }

  // 4*(dim_in*units + units*units + units) + 3*units
  static int64_t parameter_count(int dim_in, int units) {
    return 4ll * (static_cast<int64_t>(dim_in) * units + static_cast<int64_t>(units) * units + units) + 3ll * units;
  }

  std::vector<std::pair<std::string, Tensor<T>>> named(const std::string& prefix) const {
    return {{prefix + ".W_xi", W_xi}, {prefix + ".W_xf", W_xf}, {prefix + ".W_xc", W_xc}, {prefix + ".W_xo", W_xo},
            {prefix + ".W_hi", W_hi}, {prefix + ".W_hf", W_hf}, {prefix + ".W_hc", W_hc}, {prefix + ".W_ho", W_ho},
            {prefix + ".w_ci", w_ci}, {prefix + ".w_cf", w_cf}, {prefix + ".w_co", w_co},
            {prefix + ".b_i", b_i},   {prefix + ".b_f", b_f},   {prefix + ".b_c", b_c},   {prefix + ".b_o", b_o}};
  }
};

// One step:
//   i = σ(x W_xi + h' W_hi + c' ⊙ w_ci + b_i)
//   f = σ(x W_xf + h' W_hf + c' ⊙ w_cf + b_f)
//   c = f ⊙ c' + i ⊙ tanh(x W_xc + h' W_hc + b_c)
//   o = σ(x W_xo + h' W_ho + c ⊙ w_co + b_o)      — o reads the NEW cell state
//   h = o ⊙ tanh(c)
// h_gate lets recurrent dropout feed a masked copy of h' into the gates while
// the undropped h' carries to the next step.
template <class T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                                          const LstmParams<T>& p, const Tensor<T>* h_gate = nullptr) {
  detail::require(x.rank() == 2 && x.dim(1) == p.dim_in,
                  "lstm_cell: input shape " + shape_string(x.shape()) + " does not match dim_in " + std::to_string(p.dim_in));
  detail::require(h_prev.rank() == 2 && h_prev.dim(1) == p.units && c_prev.shape() == h_prev.shape(),
                  "lstm_cell: state shape " + shape_string(h_prev.shape()) + " does not match units " + std::to_string(p.units));
  const Tensor<T>& hg = h_gate ? *h_gate : h_prev;

  Tensor<T> i = sigmoid(add_row(add(add(matmul(x, p.W_xi), matmul(hg, p.W_hi)), mul_row(c_prev, p.w_ci)), p.b_i));
  Tensor<T> f = sigmoid(add_row(add(add(matmul(x, p.W_xf), matmul(hg, p.W_hf)), mul_row(c_prev, p.w_cf)), p.b_f));
  Tensor<T> g = tanh(add_row(add(matmul(x, p.W_xc), matmul(hg, p.W_hc)), p.b_c));
  Tensor<T> c = add(mul(f, c_prev), mul(i, g));
  Tensor<T> o = sigmoid(add_row(add(add(matmul(x, p.W_xo), matmul(hg, p.W_ho)), mul_row(c, p.w_co)), p.b_o));
  Tensor<T> h = mul(o, tanh(c));
  return {h, c};
}

template <class T>
struct RnnStates {
  std::vector<Tensor<T>> h;  // one [B,units] per step
  Tensor<T> final_h;         // carried state after the last step
  Tensor<T> final_c;
};

namespace detail {

// step masks as {B,1} constants: 1 while t < length, else 0
template <class T>
std::pair<Tensor<T>, Tensor<T>> step_masks(const std::vector<int>& lengths, int t) {
  const int B = static_cast<int>(lengths.size());
  Tensor<T> on = Tensor<T>::zeros({B, 1});
  Tensor<T> off = Tensor<T>::zeros({B, 1});
  for (int b = 0; b < B; ++b) {
    const bool live = t < lengths[b];
    on.data()[static_cast<size_t>(b)] = live ? T(1) : T(0);
    off.data()[static_cast<size_t>(b)] = live ? T(0) : T(1);
  }
  return {on, off};
}

}  // namespace detail

// Unrolls the cell over steps[0..T). Positions at or beyond an example's
// length carry h and c through unchanged, so the carried final state equals
// the state at true_length-1 and extra padding never alters it.
template <class T>
RnnStates<T> rnn_unroll(const std::vector<Tensor<T>>& steps, const LstmParams<T>& p, const std::vector<int>& lengths,
                        const Tensor<T>* recurrent_mask = nullptr) {
  detail::require(!steps.empty(), "rnn_unroll: empty sequence");
  const int B = steps[0].dim(0);
  detail::require(static_cast<int>(lengths.size()) == B, "rnn_unroll: lengths size mismatch");

  RnnStates<T> out;
  Tensor<T> h = Tensor<T>::zeros({B, p.units});
  Tensor<T> c = Tensor<T>::zeros({B, p.units});
  for (size_t t = 0; t < steps.size(); ++t) {
    Tensor<T> h_gate;
    if (recurrent_mask) h_gate = mul(h, *recurrent_mask);
    auto [h_new, c_new] = lstm_cell(steps[t], h, c, p, recurrent_mask ? &h_gate : nullptr);
    auto [on, off] = detail::step_masks<T>(lengths, static_cast<int>(t));
    h = add(mul_col(h_new, on), mul_col(h, off));
    c = add(mul_col(c_new, on), mul_col(c, off));
    out.h.push_back(h);
  }
  out.final_h = h;
  out.final_c = c;
  return out;
}

template <class T>
struct BiRnnStates {
  std::vector<Tensor<T>> forward;    // →h_t, time-aligned
  std::vector<Tensor<T>> backward;   // ←h_t, time-aligned (re-reversed)
  Tensor<T> forward_last;            // →h_T
  Tensor<T> backward_first;          // ←h_1
};

// Runs one cell left-to-right and another over each example's reversed valid
// prefix, then re-aligns the reversed states to the original time axis.
template <class T>
BiRnnStates<T> bilstm(const std::vector<Tensor<T>>& steps, const LstmParams<T>& fwd, const LstmParams<T>& bwd,
                      const std::vector<int>& lengths, const Tensor<T>* fwd_recurrent_mask = nullptr,
                      const Tensor<T>* bwd_recurrent_mask = nullptr) {
  const int Tn = static_cast<int>(steps.size());
  const int B = steps[0].dim(0);

  // reversed input: position j holds step length-1-j of each example
  std::vector<Tensor<T>> rev_steps;
  rev_steps.reserve(static_cast<size_t>(Tn));
  for (int j = 0; j < Tn; ++j) {
    std::vector<int> pick(static_cast<size_t>(B));
    for (int b = 0; b < B; ++b) {
      const int src = lengths[b] - 1 - j;
      pick[static_cast<size_t>(b)] = src >= 0 ? src : 0;  // dead rows are masked out of the state
    }
    rev_steps.push_back(select_steps(steps, pick));
  }

  RnnStates<T> f = rnn_unroll(steps, fwd, lengths, fwd_recurrent_mask);
  RnnStates<T> r = rnn_unroll(rev_steps, bwd, lengths, bwd_recurrent_mask);

  BiRnnStates<T> out;
  out.forward = f.h;
  out.forward_last = f.final_h;
  out.backward_first = r.final_h;  // state after consuming the whole reversed prefix
  out.backward.reserve(static_cast<size_t>(Tn));
  for (int t = 0; t < Tn; ++t) {
    std::vector<int> pick(static_cast<size_t>(B));
    for (int b = 0; b < B; ++b) {
      const int src = lengths[b] - 1 - t;
      pick[static_cast<size_t>(b)] = src >= 0 ? src : 0;
    }
    out.backward.push_back(select_steps(r.h, pick));
  }
  return out;
}

template <class T>
struct AttentionResult {
  Tensor<T> context;  // [B,H]
  Tensor<T> weights;  // [B,T], zero over padding
};

// Additive attention: e_t = v^T tanh(W s_t + b), α = softmax over the valid
// prefix, context = Σ α_t s_t.
template <class T>
AttentionResult<T> attention_pool(const std::vector<Tensor<T>>& states, const std::vector<int>& lengths,
                                  const Tensor<T>& W, const Tensor<T>& b, const Tensor<T>& v) {
  detail::require(!states.empty(), "attention_pool: empty state sequence");
  const int Tn = static_cast<int>(states.size());
  const int B = states[0].dim(0);
  detail::require(static_cast<int>(lengths.size()) == B, "attention_pool: lengths size mismatch");
  for (int b2 = 0; b2 < B; ++b2)
    detail::require(lengths[b2] >= 1, "attention_pool: true_length must be >= 1, got " + std::to_string(lengths[b2]) +
                                          " for example " + std::to_string(b2));

  std::vector<Tensor<T>> scores;
  scores.reserve(static_cast<size_t>(Tn));
  for (const auto& s : states) scores.push_back(matmul(tanh(add_row(matmul(s, W), b)), v));  // [B,1]

  AttentionResult<T> out;
  out.weights = softmax_masked(concat_cols(scores), lengths);  // [B,T]
  Tensor<T> ctx;
  for (int t = 0; t < Tn; ++t) {
    Tensor<T> term = mul_col(states[static_cast<size_t>(t)], slice_cols(out.weights, t, t + 1));
    ctx = t == 0 ? term : add(ctx, term);
  }
  out.context = ctx;
  return out;
}

}  // namespace sarc::nn
