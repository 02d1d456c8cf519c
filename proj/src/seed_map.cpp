#include "treexai/seed_map.hpp"

#include <stdexcept>

namespace treexai {

SeedMap::SeedMap(std::size_t n) : n_(n) {}

void SeedMap::block_supersets(std::span<const std::size_t> members) {
  Clause c{{}, false};
  for (const std::size_t v : members) {
    if (v >= n_) throw std::out_of_range("SeedMap: element out of range");
    c.vars.push_back(static_cast<std::uint32_t>(v));
  }
  if (c.vars.empty()) empty_clause_ = true;
  clauses_.push_back(std::move(c));
}

void SeedMap::block_subsets(std::span<const std::size_t> members) {
  std::vector<bool> in(n_, false);
  for (const std::size_t v : members) {
    if (v >= n_) throw std::out_of_range("SeedMap: element out of range");
    in[v] = true;
  }
  Clause c{{}, true};
  for (std::size_t v = 0; v < n_; ++v) {
    if (!in[v]) c.vars.push_back(static_cast<std::uint32_t>(v));
  }
  if (c.vars.empty()) empty_clause_ = true;
  clauses_.push_back(std::move(c));
}

bool SeedMap::propagate(std::vector<std::int8_t>& assign, std::vector<std::uint32_t>& trail) const {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Clause& c : clauses_) {
      const std::int8_t want = c.positive ? kTrue : kFalse;
      std::size_t unset = 0;
      std::uint32_t last_unset = 0;
      bool satisfied = false;
      for (const std::uint32_t v : c.vars) {
        if (assign[v] == want) {
          satisfied = true;
          break;
        }
        if (assign[v] == kUnset) {
          ++unset;
          last_unset = v;
        }
      }
      if (satisfied) continue;
      if (unset == 0) return false;
      if (unset == 1) {
        assign[last_unset] = want;
        trail.push_back(last_unset);
        changed = true;
      }
    }
  }
  return true;
}

void SeedMap::grow(std::vector<std::int8_t>& assign) const {
  for (std::size_t v = 0; v < n_; ++v) {
    if (assign[v] == kTrue) continue;
    assign[v] = kTrue;
    for (const Clause& c : clauses_) {
      if (c.positive) continue;
      bool all_set = true;
      for (const std::uint32_t u : c.vars) {
        if (assign[u] != kTrue) {
          all_set = false;
          break;
        }
      }
      if (all_set) {
        assign[v] = kFalse;
        break;
      }
    }
  }
}

SeedMap::Status SeedMap::next_seed(std::vector<bool>& out, Clock::time_point deadline) {
  if (empty_clause_) return Status::exhausted;

  struct Decision {
    std::size_t trail_pos;
    std::uint32_t var;
    bool flipped;
  };
  std::vector<std::int8_t> assign(n_, kUnset);
  std::vector<std::uint32_t> trail;
  std::vector<Decision> decisions;
  std::size_t steps = 0;

  for (;;) {
    if ((++steps & 0xff) == 0 && Clock::now() >= deadline) return Status::timed_out;
    if (!propagate(assign, trail)) {
      while (!decisions.empty() && decisions.back().flipped) decisions.pop_back();
      if (decisions.empty()) {
        // The constraints alone are unsatisfiable; remember it.
        empty_clause_ = true;
        return Status::exhausted;
      }
      Decision& d = decisions.back();
      while (trail.size() > d.trail_pos) {
        assign[trail.back()] = kUnset;
        trail.pop_back();
      }
      d.flipped = true;
      assign[d.var] = kFalse;
      trail.push_back(d.var);
      continue;
    }
    std::size_t v = 0;
    while (v < n_ && assign[v] != kUnset) ++v;
    if (v == n_) break;
    decisions.push_back({trail.size(), static_cast<std::uint32_t>(v), false});
    assign[v] = kTrue;
    trail.push_back(static_cast<std::uint32_t>(v));
  }

  grow(assign);
  out.assign(n_, false);
  for (std::size_t v = 0; v < n_; ++v) out[v] = assign[v] == kTrue;
  return Status::seed;
}

}  // namespace treexai
