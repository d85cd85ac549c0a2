#pragma once

#include <string>
#include <vector>

namespace sarc {

// one accuracy cell of the results grid
struct GridCell {
  std::string arch;            // series_cnn | parallel_cnn | lstm | bilstm | attn_bilstm
  std::string corpus_variant;  // hinglish | hinglish_english
  std::string embed_variant;   // word2vec | fasttext
  double accuracy = 0;         // percent
};

// Fixed 5x4 grid: architecture rows, {hinglish, hinglish_english} x
// {word2vec, fasttext} columns; missing cells render as an em dash.
std::string format_grid(const std::vector<GridCell>& cells);

// same layout as CSV; missing cells are empty
std::string format_grid_csv(const std::vector<GridCell>& cells);

}  // namespace sarc
