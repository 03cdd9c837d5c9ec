#include "synrec/train/split.hpp"

namespace synrec {

SplitResult split_leave_one_out(
    const std::vector<std::vector<std::int32_t>>& sequences) {
  SplitResult out;
  for (std::size_t u = 0; u < sequences.size(); ++u) {
    const auto& seq = sequences[u];
    if (seq.size() < 3) {
      ++out.dropped;
      continue;
    }
    const std::size_t n = seq.size();
    for (std::size_t k = 0; k + 2 < n; ++k) {
      EvalPair p;
      p.user = u;
      p.history.assign(seq.begin(), seq.begin() + k);
      p.target = seq[k];
      out.train.push_back(std::move(p));
    }
    EvalPair v;
    v.user = u;
    v.history.assign(seq.begin(), seq.end() - 2);
    v.target = seq[n - 2];
    out.valid.push_back(std::move(v));
    EvalPair t;
    t.user = u;
    t.history.assign(seq.begin(), seq.end() - 1);
    t.target = seq[n - 1];
    out.test.push_back(std::move(t));
  }
  return out;
}

}  // namespace synrec
