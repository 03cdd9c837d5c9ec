#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace synrec {

// One supervised example: the items seen so far and the item that follows.
struct EvalPair {
  std::size_t user = 0;  // index into the sequence list passed to the split
  std::vector<std::int32_t> history;
  std::int32_t target = -1;
};

// Leave-one-out protocol: last item is the test target, second-to-last the
// validation target, and every earlier position is a training target with
// its own prefix history (the first item trains against an empty history).
struct SplitResult {
  std::vector<EvalPair> train;
  std::vector<EvalPair> valid;  // one per kept user
  std::vector<EvalPair> test;   // one per kept user
  std::size_t dropped = 0;      // sequences shorter than 3
};

SplitResult split_leave_one_out(
    const std::vector<std::vector<std::int32_t>>& sequences);

}  // namespace synrec
