#pragma once

// Double-precision gradient verification of the layer primitives and the five
// assembled architectures, shared by the gradcheck CLI command and the
// acceptance suite. Layer checks gate at 1e-6, whole models at 1e-4.

#include <string>
#include <vector>

#include "sarc/models.hpp"
#include "sarc/nn/gradcheck.hpp"
#include "sarc/nn/lstm.hpp"
#include "sarc/rng.hpp"

namespace sarc {

struct GradCheckLine {
  std::string name;
  double max_rel_err = 0;
  double tolerance = 0;
  bool pass = false;
};

namespace detail_gradcheck {

inline nn::Tensor<double> rand_tensor(std::vector<int> shape, Rng& rng, bool needs_grad, double lo = -0.8, double hi = 0.8) {
  auto t = nn::Tensor<double>::zeros(std::move(shape), needs_grad);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline GradCheckLine check_layer(const std::string& name, const std::function<nn::Tensor<double>()>& loss_fn,
                                 const std::vector<std::pair<std::string, nn::Tensor<double>>>& params) {
  auto report = nn::check_gradients(loss_fn, params);
  return {name, report.max_rel_err, 1e-6, report.max_rel_err < 1e-6};
}

}  // namespace detail_gradcheck

inline std::vector<GradCheckLine> run_layer_gradchecks() {
  using nn::Tensor;
  using detail_gradcheck::rand_tensor;
  std::vector<GradCheckLine> lines;
  Rng rng(0xC0FFEE);

  {  // dense
    auto x = rand_tensor({3, 5}, rng, false);
    auto w = rand_tensor({5, 4}, rng, true);
    auto b = rand_tensor({4}, rng, true);
    auto head = rand_tensor({4, 1}, rng, false);
    std::vector<int> labels = {1, 0, 1};
    lines.push_back(detail_gradcheck::check_layer(
        "dense", [&] { return nn::bce_mean(nn::sigmoid(nn::matmul(nn::dense(x, w, b), head)), labels); },
        {{"W", w}, {"b", b}}));
  }
  {  // conv1d
    auto x = rand_tensor({2, 7, 3}, rng, false);
    auto k = rand_tensor({3, 3, 4}, rng, true);
    auto b = rand_tensor({4}, rng, true);
    auto head = rand_tensor({4, 1}, rng, false);
    std::vector<int> labels = {0, 1};
    lines.push_back(detail_gradcheck::check_layer(
        "conv1d",
        [&] { return nn::bce_mean(nn::sigmoid(nn::matmul(nn::global_maxpool(nn::conv1d(x, k, b)), head)), labels); },
        {{"kernels", k}, {"bias", b}}));
  }
  {  // lstm cell unrolled over 4 steps
    auto p = nn::LstmParams<double>::zeros(3, 4, true);
    for (auto& [name, t] : p.named("cell"))
      for (auto& v : const_cast<std::vector<double>&>(t.data())) v = rng.uniform(-0.6, 0.6);
    std::vector<Tensor<double>> steps;
    for (int t = 0; t < 4; ++t) steps.push_back(rand_tensor({2, 3}, rng, false));
    auto head = rand_tensor({4, 1}, rng, false);
    std::vector<int> labels = {1, 0};
    std::vector<int> lengths = {4, 3};
    lines.push_back(detail_gradcheck::check_layer(
        "lstm_cell_bptt4",
        [&] { return nn::bce_mean(nn::sigmoid(nn::matmul(nn::rnn_unroll(steps, p, lengths).final_h, head)), labels); },
        p.named("cell")));
  }
  {  // attention pooling
    const int H = 4;
    std::vector<Tensor<double>> states;
    for (int t = 0; t < 3; ++t) states.push_back(rand_tensor({2, H}, rng, false));
    auto W = rand_tensor({H, H}, rng, true);
    auto b = rand_tensor({H}, rng, true);
    auto v = rand_tensor({H, 1}, rng, true);
    auto head = rand_tensor({H, 1}, rng, false);
    std::vector<int> labels = {1, 0};
    std::vector<int> lengths = {3, 2};
    lines.push_back(detail_gradcheck::check_layer(
        "attention_pool",
        [&] {
          return nn::bce_mean(nn::sigmoid(nn::matmul(nn::attention_pool(states, lengths, W, b, v).context, head)), labels);
        },
        {{"W", W}, {"b", b}, {"v", v}}));
  }
  return lines;
}

// scaled-down whole-model checks: max_len 8, units 8, filters 8, 2 examples
inline std::vector<GradCheckLine> run_model_gradchecks(const std::string& arch_filter = "all") {
  std::vector<GradCheckLine> lines;
  for (Arch arch : all_architectures()) {
    if (arch_filter != "all" && arch_to_string(arch) != arch_filter) continue;

    ModelSpec spec;
    spec.arch = arch;
    spec.max_len = 8;
    spec.embed_dim = 8;
    spec.filters = 8;
    spec.lstm_units = 8;
    spec.dense_widths = {8};
    spec.kernel_sizes = arch == Arch::parallel_cnn ? std::vector<int>{2, 3} : std::vector<int>{2, 2};

    Rng erng(501);
    std::vector<float> rows(12 * 8);
    for (auto& v : rows) v = static_cast<float>(erng.uniform(-0.5, 0.5));
    auto model = build_model<double>(spec, 12, rows, 733);

    // evaluate at a generic point; zero biases would sit on the relu kink
    Rng jitter(57);
    for (const auto& [name, t] : model.named_parameters())
      if (t.needs_grad())
        for (auto& v : const_cast<nn::Tensor<double>&>(t).data()) v += jitter.uniform(-0.05, 0.05);

    std::vector<EncodedSequence> batch = {{{2, 5, 7, 3, 0, 0, 0, 0}, 4}, {{4, 4, 9, 10, 11, 6, 0, 0}, 6}};
    std::vector<int> labels = {1, 0};
    Rng unused(1);
    auto loss_fn = [&] { return nn::bce_mean(model.forward(batch, /*training=*/false, unused), labels); };

    std::vector<std::pair<std::string, nn::Tensor<double>>> params;
    for (const auto& [name, t] : model.named_parameters())
      if (t.needs_grad()) params.emplace_back(name, t);

    auto report = nn::check_gradients(loss_fn, params);
    lines.push_back({arch_to_string(arch), report.max_rel_err, 1e-4, report.max_rel_err < 1e-4});
  }
  if (lines.empty()) throw std::invalid_argument("gradcheck: unknown architecture '" + arch_filter + "'");
  return lines;
}

}  // namespace sarc
