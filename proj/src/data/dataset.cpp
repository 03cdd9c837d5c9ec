#include "synrec/data/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "synrec/tensor/serialize.hpp"
#include "synrec/tensor/tensor.hpp"

namespace synrec {

namespace fs = std::filesystem;

DatasetMeta Dataset::meta() const {
  DatasetMeta m;
  m.item_count = item_ids.size();
  m.user_count = user_ids.size();
  for (const auto& seq : interactions) m.interaction_count += seq.size();
  if (m.user_count)
    m.avg_len = static_cast<double>(m.interaction_count) /
                static_cast<double>(m.user_count);
  if (m.user_count && m.item_count)
    m.sparsity = 1.0 - static_cast<double>(m.interaction_count) /
                           (static_cast<double>(m.user_count) *
                            static_cast<double>(m.item_count));
  return m;
}

void save_dataset(const std::string& dir, const Dataset& data) {
  if (data.text.count() != data.item_ids.size() ||
      data.vision.count() != data.item_ids.size())
    throw std::invalid_argument(
        "dataset: embedding row counts do not match the item list");
  if (data.user_ids.size() != data.interactions.size())
    throw std::invalid_argument(
        "dataset: user id and interaction counts differ");
  fs::create_directories(dir);

  const std::size_t n = data.item_ids.size();
  Tensor text = Tensor::from_data({n, data.text.dim}, data.text.rows);
  Tensor vision = Tensor::from_data({n, data.vision.dim}, data.vision.rows);
  write_tensor_blob((fs::path(dir) / "embeddings.sgt").string(),
                    {{"text", text}, {"vision", vision}});

  std::ofstream items(fs::path(dir) / "items.txt", std::ios::binary);
  if (!items) throw std::runtime_error("dataset: cannot write items.txt");
  for (const auto& id : data.item_ids) items << id << "\n";
  items.close();

  std::ofstream inter(fs::path(dir) / "interactions.tsv", std::ios::binary);
  if (!inter) throw std::runtime_error("dataset: cannot write interactions.tsv");
  for (std::size_t u = 0; u < data.user_ids.size(); ++u) {
    inter << data.user_ids[u] << "\t";
    const auto& seq = data.interactions[u];
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i) inter << ",";
      inter << data.item_ids.at(seq[i]);
    }
    inter << "\n";
  }
}

namespace {

ModalityTable table_from_tensor(const Tensor& t, const char* name,
                                std::size_t items) {
  if (t.shape().size() != 2)
    throw std::runtime_error(std::string("dataset: table '") + name +
                             "' is not a matrix");
  if (t.shape()[0] != items)
    throw std::runtime_error(std::string("dataset: table '") + name + "' has " +
                             std::to_string(t.shape()[0]) + " rows for " +
                             std::to_string(items) + " items");
  ModalityTable out;
  out.dim = t.shape()[1];
  out.rows.assign(t.data(), t.data() + t.numel());
  return out;
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
  const fs::path emb_path = fs::path(dir) / "embeddings.sgt";
  {
    std::ifstream probe(emb_path, std::ios::binary);
    if (!probe)
      throw std::runtime_error("dataset: cannot open " + emb_path.string());
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    if (probe.gcount() != 4 || std::string_view(magic, 4) != "SGT1")
      throw std::runtime_error("dataset: bad magic at offset 0 in " +
                               emb_path.string());
  }

  Dataset data;
  std::ifstream items(fs::path(dir) / "items.txt");
  if (!items)
    throw std::runtime_error("dataset: cannot open items.txt in " + dir);
  std::string line;
  std::unordered_map<std::string, std::int32_t> index;
  while (std::getline(items, line)) {
    if (line.empty()) continue;
    if (!index.emplace(line, static_cast<std::int32_t>(data.item_ids.size()))
             .second)
      throw std::runtime_error("dataset: duplicate item id '" + line + "'");
    data.item_ids.push_back(line);
  }
  if (data.item_ids.empty())
    throw std::runtime_error("dataset: items.txt lists no items");

  auto tensors = read_tensor_blob(emb_path.string());
  bool have_text = false, have_vision = false;
  for (auto& [name, t] : tensors) {
    if (name == "text") {
      data.text = table_from_tensor(t, "text", data.item_ids.size());
      have_text = true;
    } else if (name == "vision") {
      data.vision = table_from_tensor(t, "vision", data.item_ids.size());
      have_vision = true;
    }
  }
  if (!have_text || !have_vision)
    throw std::runtime_error(
        "dataset: embeddings.sgt must hold 'text' and 'vision' tables");

  std::ifstream inter(fs::path(dir) / "interactions.tsv");
  if (!inter)
    throw std::runtime_error("dataset: cannot open interactions.tsv in " + dir);
  std::vector<std::string> dangling;
  while (std::getline(inter, line)) {
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("dataset: interactions line without a tab: '" +
                               line + "'");
    data.user_ids.push_back(line.substr(0, tab));
    std::vector<std::int32_t> seq;
    std::stringstream rest(line.substr(tab + 1));
    std::string tok;
    while (std::getline(rest, tok, ',')) {
      if (tok.empty()) continue;
      auto it = index.find(tok);
      if (it == index.end()) {
        dangling.push_back(tok);
        continue;
      }
      seq.push_back(it->second);
    }
    data.interactions.push_back(std::move(seq));
  }
  if (!dangling.empty()) {
    std::string msg = "dataset: interactions reference unknown items:";
    for (const auto& id : dangling) msg += " " + id;
    throw std::runtime_error(msg);
  }
  return data;
}

}  // namespace synrec
