#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sarc/checkpoint.hpp"
#include "sarc/corpus.hpp"
#include "sarc/report.hpp"
#include "sarc/trainer.hpp"

using namespace sarc;

namespace {

// tiny keyword task: "wah" marks the positive class, filler is shared
struct ToyTask {
  Vocabulary vocab;
  std::vector<LabeledSequence> data;
  std::vector<float> embedding_rows;
  int max_len = 8;
  int dim = 8;
};

ToyTask make_toy(int n_examples, uint64_t seed) {
  ToyTask t;
  std::vector<std::vector<std::string>> texts;
  Rng rng(seed);
  const std::vector<std::string> filler = {"acha", "scene", "yaar", "kal", "match", "chai"};
  std::vector<int> labels;
  for (int i = 0; i < n_examples; ++i) {
    const int label = i % 2;
    std::vector<std::string> toks;
    const int len = 3 + static_cast<int>(rng.next_below(5));
    for (int j = 0; j < len; ++j) toks.push_back(filler[rng.next_below(filler.size())]);
    if (label == 1) toks[rng.next_below(toks.size())] = "wah";
    texts.push_back(toks);
    labels.push_back(label);
  }
  t.vocab = build_vocabulary(texts, 1);
  for (size_t i = 0; i < texts.size(); ++i)
    t.data.push_back({encode(texts[i], t.vocab, t.max_len), labels[static_cast<size_t>(i)]});

  Rng erng(seed + 1);
  t.embedding_rows.assign(static_cast<size_t>(t.vocab.size()) * t.dim, 0.0f);
  for (size_t i = static_cast<size_t>(2) * t.dim; i < t.embedding_rows.size(); ++i)
    t.embedding_rows[i] = static_cast<float>(erng.uniform(-0.5, 0.5));
  return t;
}

ModelSpec toy_spec(Arch arch, const ToyTask& t) {
  ModelSpec s;
  s.arch = arch;
  s.max_len = t.max_len;
  s.embed_dim = t.dim;
  s.filters = 8;
  s.lstm_units = 8;
  s.dense_widths = {8};
  s.kernel_sizes = arch == Arch::parallel_cnn ? std::vector<int>{2, 3} : std::vector<int>{2, 2};
  s.dropout = 0.1;
  s.input_dropout = 0.1;
  s.recurrent_dropout = 0.1;
  return s;
}

LabeledSequence seq_with_prob_label(std::vector<int> ids, int len, int label) {
  return {{std::move(ids), len}, label};
}

}  // namespace

TEST_CASE("evaluate counts a hand-computed confusion matrix") {
  // model-free check through a zero-weight head: every prediction is 0.5 -> class 1
  ToyTask t = make_toy(12, 5);
  auto m = build_model<float>(toy_spec(Arch::lstm, t), t.vocab.size(), t.embedding_rows, 3);
  auto w = m.parameter("out.W");
  std::fill(w.data().begin(), w.data().end(), 0.0f);
  auto b = m.parameter("out.b");
  std::fill(b.data().begin(), b.data().end(), 0.0f);

  // balanced set: constant-0.5 predictor scores exactly 0.5 via the >=0.5 rule
  EvalResult r = evaluate(m, t.data);
  CHECK(r.total == 12);
  CHECK(r.accuracy == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.true_positive == 6);
  CHECK(r.false_positive == 6);
  CHECK(r.true_negative == 0);
  CHECK(r.false_negative == 0);
  CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-5));

  // force confident predictions: bias +20 -> always class 1
  b.data()[0] = 20.0f;
  EvalResult all_pos = evaluate(m, t.data);
  CHECK(all_pos.accuracy == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(all_pos.true_positive == 6);
  CHECK(all_pos.false_positive == 6);

  // 4-example confusion matrix computed by hand: labels 1,1,0,0 with
  // predictions 1,0,1,0 -> tp=1 fn=1 fp=1 tn=1, accuracy 0.5
  EvalResult hand;
  {
    ToyTask t4 = make_toy(4, 7);
    auto m4 = build_model<float>(toy_spec(Arch::lstm, t4), t4.vocab.size(), t4.embedding_rows, 3);
    // craft labels so the fixed 0.5-threshold decision is right half the time
    std::vector<LabeledSequence> set = {
        seq_with_prob_label(t4.data[0].seq.indices, t4.data[0].seq.true_length, 1),
        seq_with_prob_label(t4.data[1].seq.indices, t4.data[1].seq.true_length, 0),
    };
    auto wz = m4.parameter("out.W");
    std::fill(wz.data().begin(), wz.data().end(), 0.0f);
    auto bz = m4.parameter("out.b");
    std::fill(bz.data().begin(), bz.data().end(), 0.0f);
    hand = evaluate(m4, set);  // constant 0.5 -> both predicted 1
    CHECK(hand.true_positive == 1);
    CHECK(hand.false_positive == 1);
    CHECK(hand.accuracy == doctest::Approx(0.5));
  }

  // all predictions correct -> accuracy 1.0 (empty negative buckets)
  std::vector<LabeledSequence> all_ones;
  for (const auto& ex : t.data)
    if (ex.label == 1) all_ones.push_back(ex);
  b.data()[0] = 20.0f;
  EvalResult perfect = evaluate(m, all_ones);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.false_negative == 0);
}

TEST_CASE("training runs are bit-reproducible under a fixed seed") {
  ToyTask t = make_toy(32, 11);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 21;
  cfg.lr = 0.01;

  History h1, h2;
  for (History* h : {&h1, &h2}) {
    auto m = build_model<float>(toy_spec(Arch::lstm, t), t.vocab.size(), t.embedding_rows, 5);
    auto r = train(m, t.data, t.data, cfg, t.vocab, {});
    *h = r.history;
  }
  REQUIRE(h1.epochs.size() == h2.epochs.size());
  for (size_t i = 0; i < h1.epochs.size(); ++i) {
    CHECK(h1.epochs[i].train_loss == h2.epochs[i].train_loss);
    CHECK(h1.epochs[i].train_acc == h2.epochs[i].train_acc);
    CHECK(h1.epochs[i].val_loss == h2.epochs[i].val_loss);
    CHECK(h1.epochs[i].val_acc == h2.epochs[i].val_acc);
  }
}

TEST_CASE("one epoch with full-batch size takes exactly one optimizer step") {
  ToyTask t = make_toy(16, 13);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  cfg.seed = 2;
  auto m = build_model<float>(toy_spec(Arch::parallel_cnn, t), t.vocab.size(), t.embedding_rows, 5);
  auto r = train(m, t.data, t.data, cfg, t.vocab, {});
  CHECK(r.optimizer_steps == 1);
  CHECK(r.history.epochs.size() == 1);
}

TEST_CASE("loss decreases over the first epoch of the overfitting task across seeds") {
  ToyTask t = make_toy(64, 17);
  for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 16;
    cfg.seed = seed;
    cfg.lr = 0.01;
    auto m = build_model<float>(toy_spec(Arch::lstm, t), t.vocab.size(), t.embedding_rows, seed);
    auto r = train(m, t.data, t.data, cfg, t.vocab, {});
    CHECK(r.history.epochs[1].train_loss < r.history.epochs[0].train_loss);
  }
}

TEST_CASE("an lstm overfits the 64-example toy set with early stopping") {
  ToyTask t = make_toy(64, 19);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 16;
  cfg.seed = 3;
  cfg.lr = 0.01;
  cfg.stop_at_train_accuracy = 1.0;
  auto m = build_model<float>(toy_spec(Arch::lstm, t), t.vocab.size(), t.embedding_rows, 7);
  auto r = train(m, t.data, t.data, cfg, t.vocab, {});
  CHECK(r.history.epochs.back().train_acc == 1.0);
  CHECK(r.history.epochs.size() < 200);  // early stop kicked in
}

TEST_CASE("training aborts with diagnostics on non-finite loss") {
  ToyTask t = make_toy(16, 23);
  auto m = build_model<float>(toy_spec(Arch::lstm, t), t.vocab.size(), t.embedding_rows, 5);
  auto w = m.parameter("out.W");
  w.data()[0] = std::numeric_limits<float>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 16;
  CHECK_THROWS_WITH_AS(train(m, t.data, t.data, cfg, t.vocab, {}), doctest::Contains("non-finite loss"), std::runtime_error);
}

TEST_CASE("best epoch selection prefers the highest validation accuracy, earliest on ties") {
  History h;
  h.epochs = {{1, 0.9, 0.6, 0.9, 0.70}, {2, 0.8, 0.7, 0.8, 0.85}, {3, 0.7, 0.8, 0.7, 0.85}, {4, 0.6, 0.9, 0.9, 0.80}};
  CHECK(best_epoch_index(h) == 1);  // epoch 2 wins the tie against epoch 3

  History empty;
  CHECK(best_epoch_index(empty) == 0);
}

TEST_CASE("checkpoints roundtrip bit-exactly and prune to the best") {
  const std::string dir = "./trainer_ckpt_test";
  std::filesystem::remove_all(dir);

  ToyTask t = make_toy(24, 29);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  cfg.seed = 5;
  cfg.checkpoint_dir = dir;
  auto m = build_model<float>(toy_spec(Arch::attn_bilstm, t), t.vocab.size(), t.embedding_rows, 9);
  auto r = train(m, t.data, t.data, cfg, t.vocab, {"sarcasm"});
  REQUIRE(r.checkpoint_files.size() == 3);
  CHECK(std::filesystem::exists(r.best_checkpoint));
  CHECK(std::filesystem::exists(std::filesystem::path(dir) / "history.jsonl"));

  // the saved model reproduces the live model's outputs bit-exactly
  LoadedCheckpoint ck = load_checkpoint(r.checkpoint_files.back());
  CHECK(ck.meta.epoch == 3);
  CHECK(ck.search_tags == std::vector<std::string>{"sarcasm"});
  CHECK(ck.vocab.size() == t.vocab.size());
  Rng rng(1);
  std::vector<EncodedSequence> batch;
  for (int i = 0; i < 6; ++i) batch.push_back(t.data[static_cast<size_t>(i)].seq);
  auto live = m.forward(batch, false, rng);
  auto loaded = ck.model.forward(batch, false, rng);
  CHECK(live.data() == loaded.data());

  // keep_best leaves exactly one file behind
  std::filesystem::remove_all(dir);
  TrainConfig pruned = cfg;
  pruned.keep_best = true;
  auto m2 = build_model<float>(toy_spec(Arch::lstm, t), t.vocab.size(), t.embedding_rows, 9);
  auto r2 = train(m2, t.data, t.data, pruned, t.vocab, {});
  CHECK(r2.checkpoint_files.size() == 1);
  int ckpt_count = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".ckpt") ++ckpt_count;
  CHECK(ckpt_count == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint loader rejects corrupted input") {
  const std::string dir = "./trainer_ckpt_bad";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/model.ckpt";

  ToyTask t = make_toy(12, 31);
  auto m = build_model<float>(toy_spec(Arch::lstm, t), t.vocab.size(), t.embedding_rows, 9);
  save_checkpoint(path, m, t.vocab, {}, CheckpointMeta{1, 0.5, 0.5, 0.5, 0.5, 42});

  // unknown magic
  {
    std::ofstream f(dir + "/bad1.ckpt", std::ios::binary);
    f << "NOTACKPTxxxxxxxxxxxx";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(dir + "/bad1.ckpt"), doctest::Contains("not a checkpoint"), std::runtime_error);

  // corrupt the manifest: change a tensor shape
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string needle = "\"name\":\"out.W\",\"shape\":[8,1]";
    const std::string replacement = "\"name\":\"out.W\",\"shape\":[9,1]";
    auto pos = bytes.find(needle);
    REQUIRE(pos != std::string::npos);
    bytes.replace(pos, needle.size(), replacement);
    std::ofstream out(dir + "/bad2.ckpt", std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(dir + "/bad2.ckpt"), doctest::Contains("out.W"), std::runtime_error);

  // truncate the payload
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() - 64);
    std::ofstream out(dir + "/bad3.ckpt", std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(dir + "/bad3.ckpt"), doctest::Contains("truncated payload"), std::runtime_error);

  // bump the version field
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string needle = "\"version\":1";
    auto pos = bytes.find(needle);
    REQUIRE(pos != std::string::npos);
    bytes.replace(pos, needle.size(), "\"version\":9");
    std::ofstream out(dir + "/bad4.ckpt", std::ios::binary);
    out << bytes;
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(dir + "/bad4.ckpt"), doctest::Contains("version"), std::runtime_error);

  std::filesystem::remove_all(dir);
}

TEST_CASE("a trainable embedding receives updates while a frozen one stays put") {
  ToyTask t = make_toy(16, 43);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  cfg.seed = 4;

  ModelSpec frozen_spec = toy_spec(Arch::lstm, t);
  auto frozen = build_model<float>(frozen_spec, t.vocab.size(), t.embedding_rows, 5);
  train(frozen, t.data, t.data, cfg, t.vocab, {});
  CHECK(frozen.parameter("embedding.weight").data() == std::vector<float>(t.embedding_rows));

  ModelSpec tuned_spec = frozen_spec;
  tuned_spec.trainable_embedding = true;
  auto tuned = build_model<float>(tuned_spec, t.vocab.size(), t.embedding_rows, 5);
  CHECK(tuned.trainable_parameters().size() == frozen.trainable_parameters().size() + 1);
  train(tuned, t.data, t.data, cfg, t.vocab, {});
  CHECK(tuned.parameter("embedding.weight").data() != std::vector<float>(t.embedding_rows));
}

TEST_CASE("evaluating the same model twice yields identical numbers") {
  ToyTask t = make_toy(20, 37);
  auto m = build_model<float>(toy_spec(Arch::bilstm, t), t.vocab.size(), t.embedding_rows, 9);
  EvalResult a = evaluate(m, t.data);
  EvalResult b = evaluate(m, t.data);
  CHECK(a.accuracy == b.accuracy);
  CHECK(a.loss == b.loss);
}

TEST_CASE("predict is invariant to hash placement and deterministic") {
  ToyTask t = make_toy(16, 41);
  auto m = build_model<float>(toy_spec(Arch::lstm, t), t.vocab.size(), t.embedding_rows, 9);

  const double p1 = predict(m, "wah kya scene hai", t.vocab, t.max_len);
  const double p2 = predict(m, "wah kya scene hai", t.vocab, t.max_len);
  CHECK(p1 == p2);

  // '#' placement never changes the cleaned token stream
  const double with_hash = predict(m, "#wah kya #scene hai", t.vocab, t.max_len);
  CHECK(with_hash == p1);

  // zero-weight head predicts exactly one half
  auto w = m.parameter("out.W");
  std::fill(w.data().begin(), w.data().end(), 0.0f);
  auto b = m.parameter("out.b");
  std::fill(b.data().begin(), b.data().end(), 0.0f);
  CHECK(predict(m, "kal match hai", t.vocab, t.max_len) == 0.5);
}

TEST_CASE("report grid renders the full accuracy table") {
  std::vector<GridCell> cells = {
      {"series_cnn", "hinglish", "word2vec", 72.86},   {"series_cnn", "hinglish", "fasttext", 72.65},
      {"series_cnn", "hinglish_english", "word2vec", 74.09},   {"series_cnn", "hinglish_english", "fasttext", 73.51},
      {"parallel_cnn", "hinglish", "word2vec", 74.28}, {"parallel_cnn", "hinglish", "fasttext", 73.41},
      {"parallel_cnn", "hinglish_english", "word2vec", 75.00}, {"parallel_cnn", "hinglish_english", "fasttext", 74.32},
      {"lstm", "hinglish", "word2vec", 76.19},         {"lstm", "hinglish", "fasttext", 75.25},
      {"lstm", "hinglish_english", "word2vec", 77.24},         {"lstm", "hinglish_english", "fasttext", 75.55},
      {"bilstm", "hinglish", "word2vec", 77.12},       {"bilstm", "hinglish", "fasttext", 76.25},
      {"bilstm", "hinglish_english", "word2vec", 78.28},       {"bilstm", "hinglish_english", "fasttext", 77.12},
      {"attn_bilstm", "hinglish", "word2vec", 78.19},  {"attn_bilstm", "hinglish", "fasttext", 77.11},
      {"attn_bilstm", "hinglish_english", "word2vec", 78.40},  {"attn_bilstm", "hinglish_english", "fasttext", 78.06},
  };
  const std::string grid = format_grid(cells);

  // the attn_bilstm / hinglish+english / word2vec cell reads 78.40
  auto row_at = grid.find("attn_bilstm");
  REQUIRE(row_at != std::string::npos);
  const std::string row = grid.substr(row_at, grid.find('\n', row_at) - row_at);
  CHECK(row.find("78.40") != std::string::npos);
  CHECK(row.find("78.19") != std::string::npos);
  CHECK(grid.find("—") == std::string::npos);  // full grid has no dashes

  const std::string csv = format_grid_csv(cells);
  CHECK(csv.find("attn_bilstm,78.19,77.11,78.40,78.06") != std::string::npos);

  // empty input renders a header-only grid of dashes
  const std::string empty = format_grid({});
  size_t dashes = 0;
  for (size_t pos = empty.find("—"); pos != std::string::npos; pos = empty.find("—", pos + 1)) ++dashes;
  CHECK(dashes == 20);

  // a single cell leaves 19 dashes
  const std::string one = format_grid({{"lstm", "hinglish", "word2vec", 76.19}});
  size_t dashes_one = 0;
  for (size_t pos = one.find("—"); pos != std::string::npos; pos = one.find("—", pos + 1)) ++dashes_one;
  CHECK(dashes_one == 19);

  CHECK_THROWS_AS(format_grid({{"bad_arch", "hinglish", "word2vec", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(format_grid({{"lstm", "hinglish", "glove", 1.0}}), std::invalid_argument);
}

TEST_CASE("history jsonl file has one epoch per line") {
  History h;
  h.epochs = {{1, 0.69, 0.5, 0.68, 0.55}, {2, 0.5, 0.8, 0.52, 0.75}};
  const std::string path = "./history_test.jsonl";
  write_history_jsonl(path, h);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    CHECK(line.find("\"epoch\":" + std::to_string(lines)) != std::string::npos);
    CHECK(line.find("train_loss") != std::string::npos);
  }
  CHECK(lines == 2);
  std::remove(path.c_str());
}
