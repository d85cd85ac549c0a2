#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "sarc/corpus.hpp"
#include "sarc/embed.hpp"
#include "sarc/rng.hpp"

using namespace sarc;

namespace {

Vocabulary vocab_with_counts(const std::vector<std::pair<std::string, int>>& spec) {
  std::vector<std::vector<std::string>> lists;
  for (const auto& [tok, cnt] : spec)
    for (int i = 0; i < cnt; ++i) lists.push_back({tok});
  return build_vocabulary(lists, 1);
}

// Synthetic corpus of disjoint topic clusters: every sentence draws all its
// words from one cluster, so co-occurrence forces intra-cluster geometry.
struct ClusterCorpus {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> cluster_a, cluster_b;
};

ClusterCorpus make_cluster_corpus(uint64_t seed, int words_per_cluster = 12, int n_sentences = 1200) {
  ClusterCorpus c;
  for (int i = 0; i < words_per_cluster; ++i) {
    c.cluster_a.push_back("alpha" + std::to_string(i));
    c.cluster_b.push_back("beta" + std::to_string(i));
  }
  Rng rng(seed);
  for (int s = 0; s < n_sentences; ++s) {
    const auto& pool = (s % 2 == 0) ? c.cluster_a : c.cluster_b;
    std::vector<std::string> sent;
    for (int w = 0; w < 8; ++w) sent.push_back(pool[rng.next_below(pool.size())]);
    c.sentences.push_back(std::move(sent));
  }
  return c;
}

double same_cluster_top1_fraction(const EmbeddingMatrix& m, const ClusterCorpus& c) {
  int same = 0, total = 0;
  for (const auto* pool : {&c.cluster_a, &c.cluster_b}) {
    const bool is_a = pool == &c.cluster_a;
    for (const auto& w : *pool) {
      auto nn = nearest_neighbors(w, 1, m);
      REQUIRE(!nn.empty());
      const bool neighbor_is_a = nn[0].first.rfind("alpha", 0) == 0;
      same += (neighbor_is_a == is_a) ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(same) / total;
}

}  // namespace

TEST_CASE("sampling table matches the closed form") {
  Vocabulary v = vocab_with_counts({{"a", 3}, {"b", 1}});
  NegativeSamplingTable t(v, 0.75);
  const double za = std::pow(3.0, 0.75), zb = 1.0;
  CHECK(t.probability(v.index_of("a")) == doctest::Approx(za / (za + zb)).epsilon(1e-9));
  CHECK(t.probability(v.index_of("b")) == doctest::Approx(zb / (za + zb)).epsilon(1e-9));
  CHECK(t.probability(v.index_of("a")) == doctest::Approx(0.6951).epsilon(1e-3));
  CHECK(t.probability(v.index_of("b")) == doctest::Approx(0.3049).epsilon(1e-3));
}

TEST_CASE("sampling table with power zero is uniform, single token is certain") {
  Vocabulary v = vocab_with_counts({{"a", 50}, {"b", 3}, {"c", 1}});
  NegativeSamplingTable t(v, 0.0);
  for (const char* w : {"a", "b", "c"}) CHECK(t.probability(v.index_of(w)) == doctest::Approx(1.0 / 3).epsilon(1e-9));

  Vocabulary single = vocab_with_counts({{"solo", 7}});
  NegativeSamplingTable ts(single, 0.75);
  CHECK(ts.probability(single.index_of("solo")) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(NegativeSamplingTable(Vocabulary{}, 0.75), std::invalid_argument);
}

TEST_CASE("sampling table probabilities sum to one and the cumulative array is monotone") {
  Vocabulary v = vocab_with_counts({{"a", 17}, {"b", 9}, {"c", 4}, {"d", 4}, {"e", 1}});
  NegativeSamplingTable t(v, 0.75);
  double sum = 0.0;
  for (int i = 2; i < v.size(); ++i) sum += t.probability(i);
  CHECK(std::abs(sum - 1.0) < 1e-9);
  double prev = 0.0;
  for (double c : t.cumulative()) {
    CHECK(c >= prev);
    prev = c;
  }
  CHECK(t.cumulative().back() == 1.0);
}

TEST_CASE("sampling table empirical frequencies track probabilities within 1 percent") {
  Vocabulary v = vocab_with_counts({{"a", 40}, {"b", 10}, {"c", 5}, {"d", 1}});
  NegativeSamplingTable t(v, 0.75);
  Rng rng(99);
  const int draws = 1000000;
  std::vector<int> hits(static_cast<size_t>(v.size()), 0);
  for (int i = 0; i < draws; ++i) ++hits[static_cast<size_t>(t.sample(rng))];
  for (int i = 2; i < v.size(); ++i) {
    const double freq = static_cast<double>(hits[static_cast<size_t>(i)]) / draws;
    CHECK(std::abs(freq - t.probability(i)) < 0.01);
  }
}

TEST_CASE("sgns loss matches the symmetric closed form") {
  std::vector<double> center = {0.0, 0.0, 0.0};
  std::vector<double> context = {1.0, -1.0, 0.5};
  std::vector<std::vector<double>> negs = {{0.3, 0.3, 0.3}};
  SgnsGrads g;
  // all dot products are zero: loss = -log σ(0) - log σ(0) = 2 ln 2
  CHECK(sgns_loss_and_grads(center, context, negs, g) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("sgns loss saturates to zero for a confident positive with no negatives") {
  std::vector<double> center = {30.0, 0.0};
  std::vector<double> context = {30.0, 0.0};
  SgnsGrads g;
  CHECK(sgns_loss_and_grads(center, context, {}, g) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("sgns gradients match central finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 5;
    auto rand_vec = [&] {
      std::vector<double> v(dim);
      for (auto& x : v) x = rng.uniform(-1.5, 1.5);
      return v;
    };
    std::vector<double> center = rand_vec(), context = rand_vec();
    std::vector<std::vector<double>> negs = {rand_vec(), rand_vec(), rand_vec()};

    SgnsGrads g;
    sgns_loss_and_grads(center, context, negs, g);

    const double h = 1e-6;
    auto loss_now = [&] {
      SgnsGrads scratch;
      return sgns_loss_and_grads(center, context, negs, scratch);
    };
    auto check_param = [&](std::vector<double>& theta, const std::vector<double>& grad) {
      for (size_t i = 0; i < theta.size(); ++i) {
        const double saved = theta[i];
        theta[i] = saved + h;
        const double up = loss_now();
        theta[i] = saved - h;
        const double down = loss_now();
        theta[i] = saved;
        const double numeric = (up - down) / (2 * h);
        CHECK(std::abs(grad[i] - numeric) / std::max({std::abs(grad[i]), std::abs(numeric), 1e-8}) < 1e-6);
      }
    };
    check_param(center, g.center);
    check_param(context, g.context);
    for (size_t n = 0; n < negs.size(); ++n) check_param(negs[n], g.negatives[n]);
  }
}

TEST_CASE("train_word2vec with zero epochs returns the untouched initialization") {
  auto corpus = make_cluster_corpus(3);
  Vocabulary v = build_vocabulary(corpus.sentences, 1);
  EmbedConfig cfg;
  cfg.dim = 8;
  cfg.window = 3;
  cfg.epochs = 0;
  cfg.seed = 5;
  EmbeddingMatrix m = train_word2vec(corpus.sentences, v, cfg);

  Rng init(5);
  const double bound = 0.5 / cfg.dim;
  for (size_t i = 0; i < m.input.size(); ++i) CHECK(m.input[i] == static_cast<float>(init.uniform(-bound, bound)));
  for (float o : m.output) CHECK(o == 0.0f);
}

TEST_CASE("train_word2vec is bit-deterministic for a fixed seed in single-worker mode") {
  auto corpus = make_cluster_corpus(4, 6, 120);
  Vocabulary v = build_vocabulary(corpus.sentences, 1);
  EmbedConfig cfg;
  cfg.dim = 12;
  cfg.window = 4;
  cfg.epochs = 2;
  cfg.seed = 42;
  EmbeddingMatrix a = train_word2vec(corpus.sentences, v, cfg);
  EmbeddingMatrix b = train_word2vec(corpus.sentences, v, cfg);
  CHECK(a.input == b.input);
  CHECK(a.output == b.output);
}

TEST_CASE("multi-worker training completes with finite vectors") {
  // racy hogwild mode: no determinism contract, but it must run and converge
  auto corpus = make_cluster_corpus(5, 8, 300);
  Vocabulary v = build_vocabulary(corpus.sentences, 1);
  EmbedConfig cfg;
  cfg.dim = 8;
  cfg.window = 3;
  cfg.epochs = 2;
  cfg.seed = 11;
  cfg.workers = 3;
  EmbedTrainStats stats;
  EmbeddingMatrix m = train_word2vec(corpus.sentences, v, cfg, &stats);
  for (float x : m.input) CHECK(std::isfinite(x));
  CHECK(stats.pairs > 0);
}

TEST_CASE("train_word2vec rejects invalid configs before touching data") {
  EmbedConfig bad;
  bad.dim = 0;
  CHECK_THROWS_AS(train_word2vec({}, Vocabulary{}, bad), std::invalid_argument);
  EmbedConfig bad2;
  bad2.negatives = 0;
  CHECK_THROWS_AS(train_word2vec({}, Vocabulary{}, bad2), std::invalid_argument);
}

TEST_CASE("word2vec separates disjoint topic clusters") {
  auto corpus = make_cluster_corpus(11);
  Vocabulary v = build_vocabulary(corpus.sentences, 1);
  EmbedConfig cfg;
  cfg.dim = 16;
  cfg.window = 4;
  cfg.epochs = 5;
  cfg.initial_lr = 0.05;
  cfg.seed = 1;
  EmbeddingMatrix m = train_word2vec(corpus.sentences, v, cfg);
  CHECK(same_cluster_top1_fraction(m, corpus) >= 0.9);
}

TEST_CASE("word2vec epoch losses decrease over the first three epochs") {
  // slow-convergence setup so the loss is still descending at epoch 3
  auto corpus = make_cluster_corpus(21, /*words_per_cluster=*/20, /*n_sentences=*/400);
  Vocabulary v = build_vocabulary(corpus.sentences, 1);
  for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    EmbedConfig cfg;
    cfg.dim = 16;
    cfg.window = 4;
    cfg.epochs = 3;
    cfg.initial_lr = 0.01;
    cfg.seed = seed;
    EmbedTrainStats stats;
    train_word2vec(corpus.sentences, v, cfg, &stats);
    REQUIRE(stats.epoch_mean_loss.size() == 3);
    CHECK(stats.epoch_mean_loss[1] < stats.epoch_mean_loss[0]);
    CHECK(stats.epoch_mean_loss[2] < stats.epoch_mean_loss[1]);
  }
}

TEST_CASE("fasttext composition rules") {
  auto corpus = make_cluster_corpus(31, 8, 400);
  Vocabulary v = build_vocabulary(corpus.sentences, 1);
  EmbedConfig cfg;
  cfg.dim = 10;
  cfg.window = 3;
  cfg.epochs = 1;
  cfg.bucket_count = 1 << 15;
  cfg.seed = 9;
  EmbeddingMatrix m = train_fasttext(corpus.sentences, v, cfg);
  REQUIRE(m.subword);

  // in-vocabulary query equals the mean of the word row and its n-gram rows
  const std::string w = "alpha3";
  auto grams = ngram_buckets(w, m.ngram_min, m.ngram_max, m.bucket_count);
  std::vector<float> want(static_cast<size_t>(m.dim), 0.0f);
  const float* row = m.input_row(v.index_of(w));
  for (int j = 0; j < m.dim; ++j) want[static_cast<size_t>(j)] += row[j];
  for (int64_t g : grams)
    for (int j = 0; j < m.dim; ++j) want[static_cast<size_t>(j)] += m.buckets[static_cast<size_t>(g) * m.dim + static_cast<size_t>(j)];
  for (auto& x : want) x /= 1.0f + static_cast<float>(grams.size());
  auto got = word_vector(w, m);
  for (int j = 0; j < m.dim; ++j) CHECK(got[static_cast<size_t>(j)] == doctest::Approx(want[static_cast<size_t>(j)]).epsilon(1e-6));

  // an OOV word whose n-gram buckets are all zero composes to the zero vector
  EmbeddingMatrix zeroed = m;
  std::fill(zeroed.buckets.begin(), zeroed.buckets.end(), 0.0f);
  auto z = word_vector("zzzzq", zeroed);
  for (float x : z) CHECK(x == 0.0f);

  // a query differing only in casing resolves to the identical vector
  auto lower = word_vector("alpha3", m);
  auto cased = word_vector("Alpha3", m);
  CHECK(lower == cased);

  // n-gram-only composition stays finite and lookup never fails
  auto ngram_only = subword_vector(w, m);
  for (float x : ngram_only) CHECK(std::isfinite(x));
}

TEST_CASE("fasttext vectors for unseen words use n-grams alone") {
  auto corpus = make_cluster_corpus(32, 6, 200);
  Vocabulary v = build_vocabulary(corpus.sentences, 1);
  EmbedConfig cfg;
  cfg.dim = 8;
  cfg.window = 3;
  cfg.epochs = 1;
  cfg.bucket_count = 1 << 14;
  cfg.seed = 2;
  EmbeddingMatrix m = train_fasttext(corpus.sentences, v, cfg);

  auto oov = word_vector("alphax7", m);
  auto expected = subword_vector("alphax7", m);
  CHECK(oov == expected);

  // empty word has no extractable n-grams -> zero vector (with a warning)
  auto none = word_vector("", m);
  for (float x : none) CHECK(x == 0.0f);
}

TEST_CASE("nearest_neighbors ranks twins and orthogonal vectors correctly") {
  Vocabulary v = vocab_with_counts({{"one", 5}, {"two", 4}, {"three", 3}});
  EmbeddingMatrix m;
  m.dim = 3;
  m.vocab = v;
  m.input.assign(static_cast<size_t>(v.size()) * 3, 0.0f);
  auto set_row = [&](const std::string& w, std::vector<float> vals) {
    std::copy(vals.begin(), vals.end(), m.input_row(v.index_of(w)));
  };
  set_row("one", {1.0f, 0.0f, 0.0f});
  set_row("two", {1.0f, 0.0f, 0.0f});  // duplicate of "one"
  set_row("three", {0.0f, 1.0f, 0.0f});

  auto nn = nearest_neighbors("one", 2, m);
  REQUIRE(nn.size() == 2);
  CHECK(nn[0].first == "two");
  CHECK(nn[0].second == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(nn[1].first == "three");
  CHECK(nn[1].second == doctest::Approx(0.0).epsilon(1e-9));

  // zero-norm query fails loudly
  set_row("three", {0.0f, 0.0f, 0.0f});
  CHECK_THROWS_AS(nearest_neighbors("three", 1, m), std::runtime_error);
  CHECK_THROWS_AS(nearest_neighbors("one", 0, m), std::invalid_argument);
}

TEST_CASE("embedding file roundtrip is exact") {
  auto corpus = make_cluster_corpus(41, 5, 100);
  Vocabulary v = build_vocabulary(corpus.sentences, 1);
  EmbedConfig cfg;
  cfg.dim = 7;
  cfg.window = 3;
  cfg.epochs = 1;
  cfg.seed = 77;
  EmbeddingMatrix m = train_word2vec(corpus.sentences, v, cfg);

  const std::string p1 = "./embed_roundtrip_1.vec";
  const std::string p2 = "./embed_roundtrip_2.vec";
  save_embeddings(p1, m);
  EmbeddingMatrix loaded = load_embeddings(p1);
  CHECK(loaded.dim == m.dim);
  CHECK(loaded.vocab.size() == m.vocab.size());
  for (int i = 0; i < m.vocab.size(); ++i) CHECK(loaded.vocab.token_at(i) == m.vocab.token_at(i));
  CHECK(loaded.input == m.input);  // word2vec save writes the raw input rows

  // file -> matrix -> file reproduces the bytes
  save_embeddings(p2, loaded);
  std::ifstream f1(p1), f2(p2);
  std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("load_embeddings rejects malformed input with line numbers") {
  const std::string path = "./embed_bad.vec";
  {
    std::ofstream f(path);
    f << "not a header\n";
  }
  CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains("line 1"), std::runtime_error);

  {
    std::ofstream f(path);
    f << "2 3\n";
    f << "word 0.1 0.2 0.3\n";  // header promises two rows
  }
  CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains("2 rows"), std::runtime_error);

  {
    std::ofstream f(path);
    f << "1 3\n";
    f << "word 0.1 nan 0.3\n";
  }
  CHECK_THROWS_WITH_AS(load_embeddings(path), doctest::Contains("line 2"), std::runtime_error);

  {
    std::ofstream f(path);
    f << "1 2\n";
    f << "word 0.1 0.2 0.3\n";  // too many values
  }
  CHECK_THROWS_AS(load_embeddings(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("build_lookup_rows maps classifier tokens through the embedding") {
  auto corpus = make_cluster_corpus(52, 5, 100);
  Vocabulary embed_vocab = build_vocabulary(corpus.sentences, 1);
  EmbedConfig cfg;
  cfg.dim = 6;
  cfg.window = 2;
  cfg.epochs = 1;
  cfg.seed = 3;
  EmbeddingMatrix m = train_word2vec(corpus.sentences, embed_vocab, cfg);

  Vocabulary clf = build_vocabulary({{"alpha0", "alpha1", "unseenword"}}, 1);
  auto rows = build_lookup_rows(m, clf);
  REQUIRE(rows.size() == static_cast<size_t>(clf.size()) * 6);

  // PAD and OOV rows are zero
  for (int j = 0; j < 12; ++j) CHECK(rows[static_cast<size_t>(j)] == 0.0f);
  // known token row equals its word vector
  auto wv = word_vector("alpha0", m);
  const int idx = clf.index_of("alpha0");
  for (int j = 0; j < 6; ++j) CHECK(rows[static_cast<size_t>(idx * 6 + j)] == wv[static_cast<size_t>(j)]);
  // token missing from the embedding vocabulary falls back to the OOV row
  auto fallback = word_vector("unseenword", m);
  const int fx = clf.index_of("unseenword");
  for (int j = 0; j < 6; ++j) CHECK(rows[static_cast<size_t>(fx * 6 + j)] == fallback[static_cast<size_t>(j)]);
}
