#pragma once

#include <set>
#include <vector>

#include "gwl/inference.hpp"

namespace gwl {

struct ActiveSetConfig {
  int T = 40;          // max size of the working family plus candidates
  int D = 20;          // non-singleton groups discarded per round
  int max_rounds = 5;
  void validate(int num_vars) const;
};

/// Indices into family.groups(), most relevant (smallest f/|A|) first.
/// Ties: smaller |A|, then lexicographic. Irrelevant groups come last.
std::vector<std::size_t> rank_groups(const GroupFamily& family);

/// Pairwise unions A1 u A2, A1 u A3, ..., A2 u A3, ... of the ranked groups,
/// skipping anything in `history` (or already produced), stopping once
/// ranked.size() + result.size() reaches T.
std::vector<Group> propose_candidates(const std::vector<Group>& ranked, int T,
                                      const std::set<Group>& history);

struct ActiveSetRound {
  GroupFamily family;  // learned f on the round's family
  double objective = 0.0;
  int sweeps = 0;
  std::vector<Group> discarded;
};

struct ActiveSetResult {
  FitResult fit;
  std::vector<ActiveSetRound> rounds;
};

ActiveSetResult active_set_fit(const Dataset& data, const PriorConfig& prior, const HyperParams& hp,
                               const FitConfig& fit_cfg, const ActiveSetConfig& as_cfg);

}  // namespace gwl
