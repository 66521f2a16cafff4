#include "gwl/active_set.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace gwl {

void ActiveSetConfig::validate(int num_vars) const {
  if (T < num_vars) throw std::invalid_argument("T must be at least the number of variables");
  if (D < 1) throw std::invalid_argument("D must be >= 1");
  if (max_rounds < 0) throw std::invalid_argument("max_rounds must be >= 0");
}

std::vector<std::size_t> rank_groups(const GroupFamily& family) {
  std::vector<std::size_t> idx(family.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    const double fi = family.weight(i), fj = family.weight(j);
    const bool inf_i = is_irrelevant(fi), inf_j = is_irrelevant(fj);
    if (inf_i != inf_j) return inf_j;
    if (!inf_i) {
      const double ri = fi / family.card(i), rj = fj / family.card(j);
      if (ri != rj) return ri < rj;
    }
    if (family.card(i) != family.card(j)) return family.card(i) < family.card(j);
    return family.group(i) < family.group(j);
  });
  return idx;
}

std::vector<Group> propose_candidates(const std::vector<Group>& ranked, int T,
                                      const std::set<Group>& history) {
  std::vector<Group> out;
  std::set<Group> seen(ranked.begin(), ranked.end());
  const long room = static_cast<long>(T) - static_cast<long>(ranked.size());
  if (room <= 0) return out;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    for (std::size_t j = i + 1; j < ranked.size(); ++j) {
      Group u;
      std::set_union(ranked[i].begin(), ranked[i].end(), ranked[j].begin(), ranked[j].end(),
                     std::back_inserter(u));
      if (history.count(u) || !seen.insert(u).second) continue;
      out.push_back(std::move(u));
      if (static_cast<long>(out.size()) >= room) return out;
    }
  }
  return out;
}

namespace {

std::vector<Group> ranked_groups(const GroupFamily& family) {
  std::vector<Group> out;
  for (std::size_t i : rank_groups(family)) out.push_back(family.group(i));
  return out;
}

}  // namespace

ActiveSetResult active_set_fit(const Dataset& data, const PriorConfig& prior, const HyperParams& hp,
                               const FitConfig& fit_cfg, const ActiveSetConfig& as_cfg) {
  if (data.empty()) throw StructuralError("no tasks to fit");
  const int P = data.front().num_vars();
  as_cfg.validate(P);

  ActiveSetResult res;
  FitConfig cfg = fit_cfg;
  cfg.warm_start = false;
  GroupFamily singles = GroupFamily::singletons(P);
  res.fit = fit(data, singles, prior, hp, cfg);
  res.rounds.push_back({res.fit.family, res.fit.objective_trace.back(), res.fit.sweeps, {}});

  // Working family A with its learned f, and the discard set D.
  GroupFamily current = res.fit.family;
  std::set<Group> history(current.groups().begin(), current.groups().end());

  std::vector<Group> ranked = ranked_groups(current);
  std::vector<Group> cand = propose_candidates(ranked, as_cfg.T, history);

  for (int round = 0; round < as_cfg.max_rounds && !cand.empty(); ++round) {
    history.insert(cand.begin(), cand.end());

    std::vector<Group> groups = current.groups();
    groups.insert(groups.end(), cand.begin(), cand.end());
    GroupFamily joint(P, groups);
    const double f0 = default_initial_weights(data, joint, prior).front();
    std::vector<double> init(joint.size(), f0);
    for (std::size_t a = 0; a < current.size(); ++a)
      if (!is_irrelevant(current.weight(a))) init[a] = current.weight(a);
    joint.set_weights(std::move(init));

    FitConfig round_cfg = fit_cfg;
    round_cfg.warm_start = true;
    res.fit = fit(data, joint, prior, hp, round_cfg);
    const GroupFamily& learned = res.fit.family;

    // Discard the D least relevant non-singletons.
    std::vector<std::size_t> order = rank_groups(learned);
    std::vector<char> drop(learned.size(), 0);
    std::vector<Group> discarded;
    for (auto it = order.rbegin(); it != order.rend() && static_cast<int>(discarded.size()) < as_cfg.D;
         ++it) {
      if (learned.card(*it) == 1) continue;
      drop[*it] = 1;
      discarded.push_back(learned.group(*it));
    }
    res.rounds.push_back({learned, res.fit.objective_trace.back(), res.fit.sweeps, discarded});

    std::vector<Group> kept;
    std::vector<double> kept_f;
    for (std::size_t a = 0; a < learned.size(); ++a) {
      if (drop[a]) continue;
      kept.push_back(learned.group(a));
      kept_f.push_back(learned.weight(a));
    }
    current = GroupFamily(P, std::move(kept), std::move(kept_f));
    ranked = ranked_groups(current);
    cand = propose_candidates(ranked, as_cfg.T, history);
  }
  return res;
}

}  // namespace gwl
