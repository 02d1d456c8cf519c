#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace treexai {

// Tracks which subsets of {0..n-1} are still unexplored during enumeration of
// minimal sets of a monotone predicate. Blocking constraints are monotone
// clauses; seeds are found with a small DPLL search that prefers including
// elements, and are then grown to a maximal unexplored set.
class SeedMap {
 public:
  using Clock = std::chrono::steady_clock;

  enum class Status { seed, exhausted, timed_out };

  explicit SeedMap(std::size_t n);

  std::size_t size() const noexcept { return n_; }

  // No future seed may contain all of `members`.
  void block_supersets(std::span<const std::size_t> members);
  // No future seed may be contained in `members`.
  void block_subsets(std::span<const std::size_t> members);

  // Finds a maximal unexplored subset. On `seed`, the set is left in `out`.
  Status next_seed(std::vector<bool>& out, Clock::time_point deadline);

 private:
  struct Clause {
    std::vector<std::uint32_t> vars;
    bool positive;  // true: at least one var set; false: at least one var clear
  };

  enum : std::int8_t { kUnset = -1, kFalse = 0, kTrue = 1 };

  bool propagate(std::vector<std::int8_t>& assign, std::vector<std::uint32_t>& trail) const;
  void grow(std::vector<std::int8_t>& assign) const;

  std::size_t n_;
  std::vector<Clause> clauses_;
  bool empty_clause_ = false;
};

}  // namespace treexai
