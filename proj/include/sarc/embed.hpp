#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sarc/corpus.hpp"
#include "sarc/rng.hpp"

namespace sarc {

struct EmbedConfig {
  int dim = 300;
  int window = 10;
  int negatives = 5;
  int epochs = 5;
  double initial_lr = 0.025;
  double min_lr = 1e-4;          // linear decay floor
  int ngram_min = 3;             // subword variant only
  int ngram_max = 6;
  int64_t bucket_count = 1ll << 21;
  double unigram_power = 0.75;
  uint64_t seed = 1;
  int workers = 1;               // >1 enables lock-free racy updates

  void validate() const;  // throws std::invalid_argument
};

// Cumulative unigram distribution P(w) ∝ freq(w)^power over retained tokens.
class NegativeSamplingTable {
 public:
  NegativeSamplingTable(const Vocabulary& vocab, double power);

  // vocabulary index drawn with probability P
  int sample(Rng& rng) const;
  double probability(int vocab_index) const;
  const std::vector<double>& cumulative() const { return cum_; }
  int support_size() const { return static_cast<int>(indices_.size()); }

 private:
  std::vector<int> indices_;  // position -> vocabulary index
  std::vector<double> cum_;   // monotone, ends at 1
};

// Input and context vectors per vocabulary row; the subword variant adds a
// hashed character-n-gram bucket table and composes word vectors as the mean
// of the word row and its n-gram rows.
struct EmbeddingMatrix {
  int dim = 0;
  Vocabulary vocab;
  std::vector<float> input;    // V x dim
  std::vector<float> output;   // V x dim; empty on matrices loaded from file

  bool subword = false;
  int ngram_min = 3;
  int ngram_max = 6;
  int64_t bucket_count = 0;
  std::vector<float> buckets;  // bucket_count x dim

  const float* input_row(int index) const { return input.data() + static_cast<size_t>(index) * dim; }
  float* input_row(int index) { return input.data() + static_cast<size_t>(index) * dim; }
};

struct EmbedTrainStats {
  std::vector<double> epoch_mean_loss;
  int64_t pairs = 0;
};

// Loss and exact gradients of one skip-gram negative-sampling instance:
//   L = -log σ(context·center) - Σ_n log σ(-neg_n·center)
struct SgnsGrads {
  std::vector<double> center;
  std::vector<double> context;
  std::vector<std::vector<double>> negatives;
};
double sgns_loss_and_grads(const std::vector<double>& center, const std::vector<double>& context,
                           const std::vector<std::vector<double>>& negatives, SgnsGrads& grads);

// Skip-gram negative sampling over plain word vectors. Windows are clipped at
// tweet boundaries; the radius of each window is drawn uniformly from
// [1, window]. Single-worker runs are bit-reproducible under a fixed seed.
EmbeddingMatrix train_word2vec(const std::vector<std::vector<std::string>>& token_lists, const Vocabulary& vocab,
                               const EmbedConfig& config, EmbedTrainStats* stats = nullptr);

// Same schedule with subword composition: a word's input vector is the mean
// of its own row and its hashed n-gram bucket rows, and the gradient is
// split equally among the constituents.
EmbeddingMatrix train_fasttext(const std::vector<std::vector<std::string>>& token_lists, const Vocabulary& vocab,
                               const EmbedConfig& config, EmbedTrainStats* stats = nullptr);

// Character n-grams of "<word>" with lengths in [ngram_min, ngram_max], as
// bucket indices (FNV-1a mod bucket_count).
std::vector<int64_t> ngram_buckets(const std::string& word, int ngram_min, int ngram_max, int64_t bucket_count);

// Query vector for a word (the query is lowercased the same way tokenize
// lowercases corpus text). Plain matrices: vocabulary row, or the OOV row for
// unknown words. Subword matrices: mean composition; unknown words compose
// from n-grams alone, and a word with no extractable n-grams yields a zero
// vector with a warning.
std::vector<float> word_vector(const std::string& word, const EmbeddingMatrix& matrix);

// n-gram-only mean, ignoring the word's own row even when in vocabulary
std::vector<float> subword_vector(const std::string& word, const EmbeddingMatrix& matrix);

// top-k cosine neighbours over input vectors, query excluded, ties by index
std::vector<std::pair<std::string, double>> nearest_neighbors(const std::string& word, int k,
                                                              const EmbeddingMatrix& matrix);

// Text format: header "V dim", then one "word v1 .. vdim" line per row.
// Values are printed with 9 significant digits so a float roundtrips exactly;
// subword matrices are saved as composed per-word vectors.
void save_embeddings(const std::string& path, const EmbeddingMatrix& matrix);
EmbeddingMatrix load_embeddings(const std::string& path);

// Rows for a classifier vocabulary pulled out of an embedding matrix via
// word_vector; PAD and OOV rows are zero.
std::vector<float> build_lookup_rows(const EmbeddingMatrix& matrix, const Vocabulary& classifier_vocab);

}  // namespace sarc
