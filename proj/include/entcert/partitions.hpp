#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace entcert {

/// A set partition of parties {0..n-1}. Stored canonically: every part sorted
/// ascending, parts ordered by their smallest element. Printed with 1-based
/// labels, e.g. "123|4".
class Partition {
 public:
  Partition() = default;
  /// Canonicalizes; throws std::invalid_argument unless `parts` is a disjoint cover of {0..n-1}.
  Partition(int n, std::vector<std::vector<int>> parts);

  static Partition finest(int n);
  static Partition trivial(int n);

  int parties() const { return n_; }
  int size() const { return static_cast<int>(parts_.size()); }
  const std::vector<std::vector<int>>& parts() const { return parts_; }
  const std::vector<int>& part(int i) const { return parts_.at(i); }
  std::vector<int> part_sizes() const;  // descending
  int largest_part_size() const;

  /// Part sizes sorted descending joined by "|", e.g. "3|1".
  std::string type_string() const;
  std::string to_string() const;

  friend bool operator==(const Partition&, const Partition&) = default;
  friend auto operator<=>(const Partition& a, const Partition& b) { return a.parts_ <=> b.parts_; }

 private:
  int n_ = 0;
  std::vector<std::vector<int>> parts_;
};

std::vector<Partition> enumerate_partitions(int n);

/// True iff every part of `a` lies inside some part of `b`.
bool refines(const Partition& a, const Partition& b);

int squareability_of(const Partition& p);

enum class StructureClass { kPartitionability, kProducibility, kSquareability, kToughness, kCustom };

/// One entanglement-structure class on n parties. All classes are closed under
/// refinement: if a partition is allowed, so is every finer one.
struct StructureSpec {
  StructureClass cls = StructureClass::kPartitionability;
  int n = 2;
  int parameter = 1;                      // k, h, q or toughness level
  std::vector<std::vector<int>> types;  // custom: allowed part-size multisets (descending)

  /// "part:K", "prod:H", "sq:Q", "tough:L", "custom:3|2,4|1", "full-sep".
  static StructureSpec parse(std::string_view text, int n);
  std::string to_string() const;

  /// Throws std::invalid_argument when parameters are out of range.
  void validate() const;
  bool allows(const Partition& p) const;
};

struct StructureFamily {
  StructureSpec spec;
  std::vector<Partition> maximal_partitions;
};

/// Maximal (coarsest) partitions allowed by `spec`, sorted by type then labels.
StructureFamily family(const StructureSpec& spec);

}  // namespace entcert
