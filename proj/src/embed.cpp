#include "sarc/embed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "sarc/log.hpp"

namespace sarc {

void EmbedConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("embed config: dim must be >= 1");
  if (window < 1) throw std::invalid_argument("embed config: window must be >= 1");
  if (negatives < 1) throw std::invalid_argument("embed config: negatives must be >= 1");
  if (epochs < 0) throw std::invalid_argument("embed config: epochs must be >= 0");
  if (ngram_min > ngram_max) throw std::invalid_argument("embed config: ngram_min must be <= ngram_max");
  if (ngram_min < 1) throw std::invalid_argument("embed config: ngram_min must be >= 1");
  if (bucket_count < 1) throw std::invalid_argument("embed config: bucket_count must be >= 1");
  if (initial_lr <= 0 || min_lr <= 0) throw std::invalid_argument("embed config: learning rates must be positive");
  if (workers < 1) throw std::invalid_argument("embed config: workers must be >= 1");
}

NegativeSamplingTable::NegativeSamplingTable(const Vocabulary& vocab, double power) {
  if (vocab.size() <= 2) throw std::invalid_argument("sampling table: vocabulary has no retained tokens");
  double z = 0.0;
  for (int i = 2; i < vocab.size(); ++i) z += std::pow(static_cast<double>(vocab.count_at(i)), power);
  if (z <= 0.0) throw std::invalid_argument("sampling table: zero total mass");

  double acc = 0.0;
  indices_.reserve(static_cast<size_t>(vocab.size() - 2));
  cum_.reserve(static_cast<size_t>(vocab.size() - 2));
  for (int i = 2; i < vocab.size(); ++i) {
    acc += std::pow(static_cast<double>(vocab.count_at(i)), power) / z;
    indices_.push_back(i);
    cum_.push_back(acc);
  }
  cum_.back() = 1.0;  // guard against accumulated rounding
}

int NegativeSamplingTable::sample(Rng& rng) const {
  const double u = rng.next_double();
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
  const size_t pos = std::min(static_cast<size_t>(it - cum_.begin()), cum_.size() - 1);
  return indices_[pos];
}

double NegativeSamplingTable::probability(int vocab_index) const {
  for (size_t i = 0; i < indices_.size(); ++i)
    if (indices_[i] == vocab_index) return cum_[i] - (i ? cum_[i - 1] : 0.0);
  return 0.0;
}

namespace {

// shared SGNS kernel: returns the pair loss and writes exact gradients
template <class T>
T sgns_pair(const T* center, const T* context, const T* const* negs, int n_negs, int dim, T* g_center,
            T* g_context, T* const* g_negs) {
  auto dot = [dim](const T* a, const T* b) {
    T acc = T(0);
    for (int j = 0; j < dim; ++j) acc += a[j] * b[j];
    return acc;
  };
  auto sigmoid = [](T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
  };

  std::fill(g_center, g_center + dim, T(0));

  const T s_pos = sigmoid(dot(center, context));
  T loss = -std::log(std::max(s_pos, T(1e-12)));
  const T d_pos = s_pos - T(1);  // d loss / d (context·center)
  for (int j = 0; j < dim; ++j) {
    g_center[j] += d_pos * context[j];
    g_context[j] = d_pos * center[j];
  }

  for (int n = 0; n < n_negs; ++n) {
    const T s_neg = sigmoid(dot(center, negs[n]));
    loss -= std::log(std::max(T(1) - s_neg, T(1e-12)));
    for (int j = 0; j < dim; ++j) {
      g_center[j] += s_neg * negs[n][j];
      g_negs[n][j] = s_neg * center[j];
    }
  }
  return loss;
}

uint64_t fnv1a64(const char* data, size_t len) {
  uint64_t h = 14695981039346656037ull;
  for (size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

double sgns_loss_and_grads(const std::vector<double>& center, const std::vector<double>& context,
                           const std::vector<std::vector<double>>& negatives, SgnsGrads& grads) {
  const int dim = static_cast<int>(center.size());
  if (context.size() != center.size()) throw std::invalid_argument("sgns: context dimension mismatch");
  for (const auto& n : negatives)
    if (n.size() != center.size()) throw std::invalid_argument("sgns: negative dimension mismatch");

  grads.center.assign(center.size(), 0.0);
  grads.context.assign(center.size(), 0.0);
  grads.negatives.assign(negatives.size(), std::vector<double>(center.size(), 0.0));

  std::vector<const double*> negp;
  std::vector<double*> gnegp;
  for (size_t i = 0; i < negatives.size(); ++i) {
    negp.push_back(negatives[i].data());
    gnegp.push_back(grads.negatives[i].data());
  }
  return sgns_pair(center.data(), context.data(), negp.data(), static_cast<int>(negp.size()), dim,
                   grads.center.data(), grads.context.data(), gnegp.data());
}

std::vector<int64_t> ngram_buckets(const std::string& word, int ngram_min, int ngram_max, int64_t bucket_count) {
  std::vector<int64_t> out;
  const std::string marked = "<" + word + ">";
  const int n = static_cast<int>(marked.size());
  for (int len = ngram_min; len <= ngram_max; ++len)
    for (int start = 0; start + len <= n; ++start)
      out.push_back(static_cast<int64_t>(fnv1a64(marked.data() + start, static_cast<size_t>(len)) %
                                         static_cast<uint64_t>(bucket_count)));
  return out;
}

namespace {

struct TrainContext {
  const EmbedConfig* cfg;
  const Vocabulary* vocab;
  const NegativeSamplingTable* table;
  EmbeddingMatrix* matrix;
  // sentences as vocabulary indices, unknown tokens dropped
  std::vector<std::vector<int>> sentences;
  int64_t corpus_words = 0;
  // per-word n-gram bucket lists (subword variant)
  std::vector<std::vector<int64_t>> word_ngrams;
  bool subword = false;
};

// one worker shard for one epoch; returns (loss sum, pair count)
std::pair<double, int64_t> run_shard(TrainContext& ctx, size_t sent_begin, size_t sent_end, Rng& rng,
                                     std::atomic<int64_t>& words_done) {
  const EmbedConfig& cfg = *ctx.cfg;
  EmbeddingMatrix& m = *ctx.matrix;
  const int dim = cfg.dim;
  const int64_t total_words = std::max<int64_t>(1, ctx.corpus_words * std::max(1, cfg.epochs));

  std::vector<float> composed(static_cast<size_t>(dim));
  std::vector<float> g_center(static_cast<size_t>(dim));
  std::vector<float> g_context(static_cast<size_t>(dim));
  std::vector<std::vector<float>> g_negs(static_cast<size_t>(cfg.negatives), std::vector<float>(static_cast<size_t>(dim)));
  std::vector<const float*> neg_rows(static_cast<size_t>(cfg.negatives));
  std::vector<float*> g_neg_ptrs(static_cast<size_t>(cfg.negatives));
  std::vector<int> neg_ids(static_cast<size_t>(cfg.negatives));
  for (size_t i = 0; i < g_negs.size(); ++i) g_neg_ptrs[i] = g_negs[i].data();

  double loss_sum = 0.0;
  int64_t pair_count = 0;
  double alpha = cfg.initial_lr;

  for (size_t si = sent_begin; si < sent_end; ++si) {
    const auto& sent = ctx.sentences[si];
    const int slen = static_cast<int>(sent.size());
    if (slen == 0) continue;

    const int64_t done = words_done.fetch_add(slen, std::memory_order_relaxed);
    alpha = std::max(cfg.min_lr, cfg.initial_lr * (1.0 - static_cast<double>(done) / static_cast<double>(total_words)));

    for (int pos = 0; pos < slen; ++pos) {
      const int center = sent[static_cast<size_t>(pos)];
      const int radius = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(cfg.window)));

      // center word's input vector (composed for the subword variant)
      const float* center_row;
      const std::vector<int64_t>* grams = nullptr;
      float inv_k = 1.0f;
      if (ctx.subword) {
        grams = &ctx.word_ngrams[static_cast<size_t>(center)];
        const float k = 1.0f + static_cast<float>(grams->size());
        inv_k = 1.0f / k;
        std::memcpy(composed.data(), m.input_row(center), sizeof(float) * static_cast<size_t>(dim));
        for (int64_t g : *grams) {
          const float* br = m.buckets.data() + static_cast<size_t>(g) * dim;
          for (int j = 0; j < dim; ++j) composed[static_cast<size_t>(j)] += br[j];
        }
        for (int j = 0; j < dim; ++j) composed[static_cast<size_t>(j)] *= inv_k;
        center_row = composed.data();
      } else {
        center_row = m.input_row(center);
      }

      for (int off = -radius; off <= radius; ++off) {
        const int cpos = pos + off;
        if (off == 0 || cpos < 0 || cpos >= slen) continue;
        const int context = sent[static_cast<size_t>(cpos)];

        // negatives: draws colliding with the positive are skipped
        int n_negs = 0;
        for (int d = 0; d < cfg.negatives; ++d) {
          const int neg = ctx.table->sample(rng);
          if (neg == context) continue;
          neg_ids[static_cast<size_t>(n_negs)] = neg;
          neg_rows[static_cast<size_t>(n_negs)] = m.output.data() + static_cast<size_t>(neg) * dim;
          ++n_negs;
        }

        float* ctx_row = m.output.data() + static_cast<size_t>(context) * dim;
        loss_sum += sgns_pair(center_row, ctx_row, neg_rows.data(), n_negs, dim, g_center.data(), g_context.data(),
                              g_neg_ptrs.data());
        ++pair_count;

        const float lr = static_cast<float>(alpha);
        for (int j = 0; j < dim; ++j) ctx_row[j] -= lr * g_context[static_cast<size_t>(j)];
        for (int n = 0; n < n_negs; ++n) {
          float* nr = m.output.data() + static_cast<size_t>(neg_ids[static_cast<size_t>(n)]) * dim;
          for (int j = 0; j < dim; ++j) nr[j] -= lr * g_negs[static_cast<size_t>(n)][static_cast<size_t>(j)];
        }
        if (ctx.subword) {
          // distribute the composed-input gradient equally to all constituents
          float* wr = m.input_row(center);
          for (int j = 0; j < dim; ++j) wr[j] -= lr * inv_k * g_center[static_cast<size_t>(j)];
          for (int64_t g : *grams) {
            float* br = m.buckets.data() + static_cast<size_t>(g) * dim;
            for (int j = 0; j < dim; ++j) br[j] -= lr * inv_k * g_center[static_cast<size_t>(j)];
          }
        } else {
          float* wr = m.input_row(center);
          for (int j = 0; j < dim; ++j) wr[j] -= lr * g_center[static_cast<size_t>(j)];
        }
      }
    }
  }
  return {loss_sum, pair_count};
}

EmbeddingMatrix train_sgns(const std::vector<std::vector<std::string>>& token_lists, const Vocabulary& vocab,
                           const EmbedConfig& cfg, bool subword, EmbedTrainStats* stats) {
  cfg.validate();

  TrainContext ctx;
  ctx.cfg = &cfg;
  ctx.vocab = &vocab;
  ctx.subword = subword;

  NegativeSamplingTable table(vocab, cfg.unigram_power);
  ctx.table = &table;

  // sentences as index streams; unknown tokens are dropped from the stream
  for (const auto& toks : token_lists) {
    std::vector<int> sent;
    sent.reserve(toks.size());
    for (const auto& t : toks) {
      const int id = vocab.index_of(t);
      if (id >= 2) sent.push_back(id);
    }
    ctx.corpus_words += static_cast<int64_t>(sent.size());
    ctx.sentences.push_back(std::move(sent));
  }

  EmbeddingMatrix m;
  m.dim = cfg.dim;
  m.vocab = vocab;
  m.subword = subword;
  m.ngram_min = cfg.ngram_min;
  m.ngram_max = cfg.ngram_max;

  Rng init_rng(cfg.seed);
  const double bound = 0.5 / cfg.dim;
  m.input.resize(static_cast<size_t>(vocab.size()) * cfg.dim);
  for (auto& v : m.input) v = static_cast<float>(init_rng.uniform(-bound, bound));
  m.output.assign(m.input.size(), 0.0f);
  if (subword) {
    m.bucket_count = cfg.bucket_count;
    m.buckets.resize(static_cast<size_t>(cfg.bucket_count) * cfg.dim);
    for (auto& v : m.buckets) v = static_cast<float>(init_rng.uniform(-bound, bound));
    ctx.word_ngrams.resize(static_cast<size_t>(vocab.size()));
    for (int i = 2; i < vocab.size(); ++i)
      ctx.word_ngrams[static_cast<size_t>(i)] = ngram_buckets(vocab.token_at(i), cfg.ngram_min, cfg.ngram_max, cfg.bucket_count);
  }
  ctx.matrix = &m;

  if (stats) {
    stats->epoch_mean_loss.clear();
    stats->pairs = 0;
  }

  std::atomic<int64_t> words_done{0};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    int64_t epoch_pairs = 0;
    if (cfg.workers == 1) {
      Rng rng(cfg.seed + 0x5851f42d4c957f2dull * static_cast<uint64_t>(epoch + 1));
      auto [l, p] = run_shard(ctx, 0, ctx.sentences.size(), rng, words_done);
      epoch_loss = l;
      epoch_pairs = p;
    } else {
      // hogwild shards: concurrent unsynchronized updates trade bit-level
      // determinism for throughput
      std::vector<std::thread> threads;
      std::vector<std::pair<double, int64_t>> results(static_cast<size_t>(cfg.workers));
      const size_t per = (ctx.sentences.size() + static_cast<size_t>(cfg.workers) - 1) / static_cast<size_t>(cfg.workers);
      for (int w = 0; w < cfg.workers; ++w) {
        const size_t lo = std::min(ctx.sentences.size(), static_cast<size_t>(w) * per);
        const size_t hi = std::min(ctx.sentences.size(), lo + per);
        threads.emplace_back([&, w, lo, hi] {
          Rng rng(cfg.seed + 0x5851f42d4c957f2dull * static_cast<uint64_t>(epoch + 1) + 977ull * static_cast<uint64_t>(w + 1));
          results[static_cast<size_t>(w)] = run_shard(ctx, lo, hi, rng, words_done);
        });
      }
      for (auto& t : threads) t.join();
      for (auto& [l, p] : results) {
        epoch_loss += l;
        epoch_pairs += p;
      }
    }
    if (stats) {
      stats->epoch_mean_loss.push_back(epoch_pairs ? epoch_loss / static_cast<double>(epoch_pairs) : 0.0);
      stats->pairs += epoch_pairs;
    }
  }

  for (float v : m.input)
    if (!std::isfinite(v)) throw std::runtime_error("embedding training produced non-finite values");
  return m;
}

}  // namespace

EmbeddingMatrix train_word2vec(const std::vector<std::vector<std::string>>& token_lists, const Vocabulary& vocab,
                               const EmbedConfig& config, EmbedTrainStats* stats) {
  return train_sgns(token_lists, vocab, config, /*subword=*/false, stats);
}

EmbeddingMatrix train_fasttext(const std::vector<std::vector<std::string>>& token_lists, const Vocabulary& vocab,
                               const EmbedConfig& config, EmbedTrainStats* stats) {
  return train_sgns(token_lists, vocab, config, /*subword=*/true, stats);
}

std::vector<float> subword_vector(const std::string& word, const EmbeddingMatrix& matrix) {
  if (!matrix.subword) throw std::logic_error("subword_vector: matrix has no n-gram table");
  std::vector<float> out(static_cast<size_t>(matrix.dim), 0.0f);
  const auto grams = ngram_buckets(ascii_lower(word), matrix.ngram_min, matrix.ngram_max, matrix.bucket_count);
  if (grams.empty()) {
    warn("word_vector: no extractable n-grams for '" + word + "'; returning a zero vector");
    return out;
  }
  for (int64_t g : grams) {
    const float* br = matrix.buckets.data() + static_cast<size_t>(g) * matrix.dim;
    for (int j = 0; j < matrix.dim; ++j) out[static_cast<size_t>(j)] += br[j];
  }
  const float inv = 1.0f / static_cast<float>(grams.size());
  for (auto& v : out) v *= inv;
  return out;
}

std::vector<float> word_vector(const std::string& word, const EmbeddingMatrix& matrix) {
  const std::string key = ascii_lower(word);
  const bool known = matrix.vocab.contains(key);
  const int index = matrix.vocab.index_of(key);

  if (!matrix.subword) {
    const float* row = matrix.input_row(known ? index : Vocabulary::kOov);
    return std::vector<float>(row, row + matrix.dim);
  }

  const auto grams = ngram_buckets(key, matrix.ngram_min, matrix.ngram_max, matrix.bucket_count);
  std::vector<float> out(static_cast<size_t>(matrix.dim), 0.0f);
  size_t constituents = grams.size() + (known ? 1 : 0);
  if (constituents == 0) {
    warn("word_vector: no extractable n-grams for OOV word '" + word + "'; returning a zero vector");
    return out;
  }
  if (known) {
    const float* row = matrix.input_row(index);
    for (int j = 0; j < matrix.dim; ++j) out[static_cast<size_t>(j)] += row[j];
  }
  for (int64_t g : grams) {
    const float* br = matrix.buckets.data() + static_cast<size_t>(g) * matrix.dim;
    for (int j = 0; j < matrix.dim; ++j) out[static_cast<size_t>(j)] += br[j];
  }
  const float inv = 1.0f / static_cast<float>(constituents);
  for (auto& v : out) v *= inv;
  return out;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(const std::string& word, int k,
                                                              const EmbeddingMatrix& matrix) {
  if (k < 1) throw std::invalid_argument("nearest_neighbors: k must be >= 1");
  const std::vector<float> q = word_vector(word, matrix);
  double qnorm = 0.0;
  for (float v : q) qnorm += static_cast<double>(v) * v;
  qnorm = std::sqrt(qnorm);
  if (qnorm == 0.0) throw std::runtime_error("nearest_neighbors: query vector for '" + word + "' has zero norm");

  const int self = matrix.vocab.contains(ascii_lower(word)) ? matrix.vocab.index_of(ascii_lower(word)) : -1;
  std::vector<std::pair<double, int>> scored;  // (cosine, index)
  for (int i = 2; i < matrix.vocab.size(); ++i) {
    if (i == self) continue;
    const float* row = matrix.input_row(i);
    double dot = 0.0, norm = 0.0;
    for (int j = 0; j < matrix.dim; ++j) {
      dot += static_cast<double>(row[j]) * q[static_cast<size_t>(j)];
      norm += static_cast<double>(row[j]) * row[j];
    }
    const double cosine = norm > 0.0 ? dot / (std::sqrt(norm) * qnorm) : 0.0;
    scored.emplace_back(cosine, i);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  std::vector<std::pair<std::string, double>> out;
  for (size_t i = 0; i < scored.size() && static_cast<int>(i) < k; ++i)
    out.emplace_back(matrix.vocab.token_at(scored[i].second), scored[i].first);
  return out;
}

void save_embeddings(const std::string& path, const EmbeddingMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_embeddings: cannot open " + path);
  out << matrix.vocab.size() << ' ' << matrix.dim << '\n';
  char buf[64];
  for (int i = 0; i < matrix.vocab.size(); ++i) {
    out << matrix.vocab.token_at(i);
    // indices >= 2 use the composed query vector; PAD/OOV keep their raw rows
    std::vector<float> row;
    if (i >= 2)
      row = word_vector(matrix.vocab.token_at(i), matrix);
    else
      row.assign(matrix.input_row(i), matrix.input_row(i) + matrix.dim);
    for (int j = 0; j < matrix.dim; ++j) {
      std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(row[static_cast<size_t>(j)]));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_embeddings: write failed for " + path);
}

EmbeddingMatrix load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_embeddings: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_embeddings: " + path + ": line 1: empty file");
  long long rows = 0;
  int dim = 0;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> rows >> dim) || rows < 1 || dim < 1 || (hs >> extra))
      throw std::runtime_error("load_embeddings: " + path + ": line 1: malformed header, expected 'V dim'");
  }

  std::vector<std::string> words;
  std::vector<float> vectors;
  vectors.reserve(static_cast<size_t>(rows) * static_cast<size_t>(dim));
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) throw std::runtime_error("load_embeddings: " + path + ": line " + std::to_string(line_no) + ": missing word");
    words.push_back(word);
    for (int j = 0; j < dim; ++j) {
      double v;
      if (!(ls >> v) || !std::isfinite(v))
        throw std::runtime_error("load_embeddings: " + path + ": line " + std::to_string(line_no) + ": bad value in column " +
                                 std::to_string(j + 2));
      vectors.push_back(static_cast<float>(v));
    }
    double extra;
    if (ls >> extra)
      throw std::runtime_error("load_embeddings: " + path + ": line " + std::to_string(line_no) + ": more than " +
                               std::to_string(dim) + " values");
  }
  if (static_cast<long long>(words.size()) != rows)
    throw std::runtime_error("load_embeddings: " + path + ": header promises " + std::to_string(rows) + " rows, file has " +
                             std::to_string(words.size()));

  // Rebuild the vocabulary: PAD/OOV come first whether or not the file stored
  // them, so row indices always line up with vocabulary indices.
  EmbeddingMatrix m;
  m.dim = dim;
  const bool has_specials = words.size() >= 2 && words[0] == Vocabulary::pad_token() && words[1] == Vocabulary::oov_token();
  std::vector<std::pair<std::string, int64_t>> retained;
  for (size_t i = has_specials ? 2 : 0; i < words.size(); ++i) retained.emplace_back(words[i], 0);
  m.vocab = Vocabulary(std::move(retained), 1);

  m.input.assign(static_cast<size_t>(m.vocab.size()) * dim, 0.0f);
  const size_t offset = has_specials ? 0 : 2;  // shift rows when specials were absent
  for (size_t i = 0; i < words.size(); ++i)
    std::copy(vectors.begin() + static_cast<long>(i) * dim, vectors.begin() + static_cast<long>(i + 1) * dim,
              m.input.begin() + static_cast<long>(i + offset) * dim);
  return m;
}

std::vector<float> build_lookup_rows(const EmbeddingMatrix& matrix, const Vocabulary& classifier_vocab) {
  std::vector<float> rows(static_cast<size_t>(classifier_vocab.size()) * matrix.dim, 0.0f);
  for (int i = 2; i < classifier_vocab.size(); ++i) {
    const std::vector<float> v = word_vector(classifier_vocab.token_at(i), matrix);
    std::copy(v.begin(), v.end(), rows.begin() + static_cast<long>(i) * matrix.dim);
  }
  return rows;
}

}  // namespace sarc
