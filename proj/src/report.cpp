#include "sarc/report.hpp"

#include <cstdio>
#include <map>
#include <stdexcept>

#include "sarc/models.hpp"

namespace sarc {

namespace {

const std::vector<std::string>& row_order() {
  static const std::vector<std::string> rows = {"series_cnn", "parallel_cnn", "lstm", "bilstm", "attn_bilstm"};
  return rows;
}

struct ColumnKey {
  const char* corpus;
  const char* embed;
};

constexpr ColumnKey kColumns[] = {{"hinglish", "word2vec"},
                                  {"hinglish", "fasttext"},
                                  {"hinglish_english", "word2vec"},
                                  {"hinglish_english", "fasttext"}};

std::map<std::pair<std::string, std::string>, std::map<std::string, double>> index_cells(const std::vector<GridCell>& cells) {
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> by_col;
  for (const auto& c : cells) {
    arch_from_string(c.arch);  // validates the tag
    bool known_col = false;
    for (const auto& col : kColumns)
      known_col = known_col || (c.corpus_variant == col.corpus && c.embed_variant == col.embed);
    if (!known_col)
      throw std::invalid_argument("report: unknown grid column '" + c.corpus_variant + "/" + c.embed_variant + "'");
    by_col[{c.corpus_variant, c.embed_variant}][c.arch] = c.accuracy;  // duplicates: last wins
  }
  return by_col;
}

}  // namespace

std::string format_grid(const std::vector<GridCell>& cells) {
  auto by_col = index_cells(cells);
  std::string out;
  char buf[160];

  std::snprintf(buf, sizeof buf, "%-14s %-19s %s\n", "model", "hinglish", "hinglish+english");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-14s %9s %9s %9s %9s\n", "", "word2vec", "fasttext", "word2vec", "fasttext");
  out += buf;

  for (const auto& arch : row_order()) {
    std::snprintf(buf, sizeof buf, "%-14s", arch.c_str());
    out += buf;
    for (const auto& col : kColumns) {
      const auto it = by_col.find({col.corpus, col.embed});
      if (it != by_col.end() && it->second.count(arch)) {
        std::snprintf(buf, sizeof buf, " %9.2f", it->second.at(arch));
        out += buf;
      } else {
        out += "         —";  // pad by display width, not byte width
      }
    }
    out += '\n';
  }
  return out;
}

std::string format_grid_csv(const std::vector<GridCell>& cells) {
  auto by_col = index_cells(cells);
  std::string out = "model,hinglish/word2vec,hinglish/fasttext,hinglish_english/word2vec,hinglish_english/fasttext\n";
  char buf[64];
  for (const auto& arch : row_order()) {
    out += arch;
    for (const auto& col : kColumns) {
      out += ',';
      const auto it = by_col.find({col.corpus, col.embed});
      if (it != by_col.end() && it->second.count(arch)) {
        std::snprintf(buf, sizeof buf, "%.2f", it->second.at(arch));
        out += buf;
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace sarc
