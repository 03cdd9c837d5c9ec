#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace synrec {

// Row-major n x dim embedding table for one modality.
struct ModalityTable {
  std::size_t dim = 0;
  std::vector<double> rows;
  std::size_t count() const { return dim ? rows.size() / dim : 0; }
  const double* row(std::size_t i) const { return rows.data() + i * dim; }
};

struct DatasetMeta {
  std::size_t item_count = 0;
  std::size_t user_count = 0;
  std::size_t interaction_count = 0;
  double avg_len = 0.0;
  double sparsity = 0.0;  // 1 - interactions / (users * items)
};

// Items with per-modality content embeddings plus user interaction
// sequences kept in the given chronological order.
struct Dataset {
  std::vector<std::string> item_ids;
  ModalityTable text;
  ModalityTable vision;
  std::vector<std::string> user_ids;
  std::vector<std::vector<std::int32_t>> interactions;  // item indices
  DatasetMeta meta() const;
};

// On disk a dataset is three files in one directory:
//   embeddings.sgt   tensor blob with "text" and "vision" tables
//   items.txt        one item id per line, row order of the tables
//   interactions.tsv user_id <TAB> item_id,item_id,...
void save_dataset(const std::string& dir, const Dataset& data);
Dataset load_dataset(const std::string& dir);

}  // namespace synrec
