#include <algorithm>

#include <gtest/gtest.h>

#include "entcert/partitions.hpp"
#include "oracles.hpp"

using namespace entcert;

namespace {

Partition parse_labels(int n, const std::string& text) {
  // "12|34" with 1-based labels.
  std::vector<std::vector<int>> parts(1);
  for (char c : text) {
    if (c == '|')
      parts.emplace_back();
    else
      parts.back().push_back(c - '1');
  }
  return Partition(n, parts);
}

std::vector<std::string> types_of(const StructureFamily& f) {
  std::vector<std::string> t;
  for (const auto& p : f.maximal_partitions) t.push_back(p.type_string());
  return t;
}

const std::vector<std::string> kSpecs{"part:1", "part:2", "part:3", "part:4", "part:5", "part:6", "prod:1",
                                      "prod:2", "prod:3", "prod:4", "sq:6",   "sq:9",   "sq:13",  "full-sep"};

}  // namespace

TEST(Partition, CanonicalFormAndPrinting) {
  const Partition p(4, {{3, 1}, {2, 0}});
  EXPECT_EQ(p.to_string(), "13|24");
  EXPECT_EQ(p.type_string(), "2|2");
  EXPECT_EQ(p.part(0), (std::vector<int>{0, 2}));
  EXPECT_EQ(Partition(4, {{3}, {0, 1, 2}}).to_string(), "123|4");
  EXPECT_THROW(Partition(3, {{0, 1}, {1, 2}}), std::invalid_argument);
  EXPECT_THROW(Partition(3, {{0, 1}}), std::invalid_argument);
  EXPECT_THROW(Partition(3, {{0, 1, 2}, {}}), std::invalid_argument);
}

TEST(EnumeratePartitions, SmallCounts) {
  EXPECT_EQ(enumerate_partitions(2).size(), 2u);
  EXPECT_EQ(enumerate_partitions(4).size(), 15u);
  EXPECT_EQ(enumerate_partitions(5).size(), 52u);
  EXPECT_THROW(enumerate_partitions(0), std::invalid_argument);
  EXPECT_THROW(enumerate_partitions(13), std::invalid_argument);
}

TEST(EnumeratePartitions, MatchesBellRecurrence) {
  const auto bell = oracle::bell_numbers(8);
  for (int n = 1; n <= 8; ++n) EXPECT_EQ(static_cast<long long>(enumerate_partitions(n).size()), bell[n]) << n;
}

TEST(EnumeratePartitions, MatchesBruteForceSets) {
  for (int n = 1; n <= 6; ++n) {
    std::set<std::vector<std::vector<int>>> ours;
    for (const auto& p : enumerate_partitions(n)) ours.insert(p.parts());
    EXPECT_EQ(ours, oracle::brute_force_partitions(n)) << n;
    EXPECT_EQ(ours.size(), enumerate_partitions(n).size()) << "duplicates at n=" << n;
  }
}

TEST(Refines, Examples) {
  const Partition a = parse_labels(4, "12|34");
  EXPECT_TRUE(refines(a, a));
  EXPECT_TRUE(refines(Partition::finest(4), a));
  EXPECT_FALSE(refines(a, parse_labels(4, "13|24")));
  EXPECT_TRUE(refines(a, Partition::trivial(4)));
  EXPECT_FALSE(refines(Partition::trivial(4), a));
}

TEST(Family, ProducibilityThreeOfFour) {
  const auto f = family(StructureSpec::parse("prod:3", 4));
  ASSERT_EQ(f.maximal_partitions.size(), 7u);
  const auto t = types_of(f);
  EXPECT_EQ(std::count(t.begin(), t.end(), "3|1"), 4);
  EXPECT_EQ(std::count(t.begin(), t.end(), "2|2"), 3);
}

TEST(Family, BipartitionsOfFour) {
  const auto f = family(StructureSpec::parse("part:2", 4));
  EXPECT_EQ(f.maximal_partitions.size(), 7u);
  for (const auto& p : f.maximal_partitions) EXPECT_EQ(p.size(), 2);
}

TEST(Family, SquareabilityNineOfFive) {
  const auto f = family(StructureSpec::parse("sq:9", 5));
  ASSERT_EQ(f.maximal_partitions.size(), 15u);
  for (const auto& p : f.maximal_partitions) EXPECT_EQ(p.type_string(), "2|2|1");
  std::vector<Partition> prod2 = family(StructureSpec::parse("prod:2", 5)).maximal_partitions;
  EXPECT_EQ(f.maximal_partitions, prod2);
}

TEST(Family, ToughnessLookup) {
  const auto t1 = family(StructureSpec::parse("tough:1", 5));
  EXPECT_EQ(t1.maximal_partitions.size(), 5u);
  for (const auto& p : t1.maximal_partitions) EXPECT_EQ(p.type_string(), "4|1");
  const auto t2 = family(StructureSpec::parse("tough:2", 5));
  EXPECT_EQ(t2.maximal_partitions.size(), 10u);
  for (const auto& p : t2.maximal_partitions) EXPECT_EQ(p.type_string(), "3|2");
  EXPECT_THROW(StructureSpec::parse("tough:1", 4), std::invalid_argument);
  EXPECT_THROW(StructureSpec::parse("tough:3", 5), std::invalid_argument);
}

TEST(Family, CustomTypes) {
  const auto f = family(StructureSpec::parse("custom:3|2,4|1", 5));
  EXPECT_EQ(f.maximal_partitions.size(), 15u);
  EXPECT_THROW(StructureSpec::parse("custom:3|1", 5), std::invalid_argument);
}

TEST(StructureSpec, ParsingAndValidation) {
  EXPECT_EQ(StructureSpec::parse("full-sep", 4).to_string(), "part:4");
  EXPECT_EQ(StructureSpec::parse("sq:13", 5).parameter, 13);
  EXPECT_THROW(StructureSpec::parse("sq:4", 5), std::invalid_argument);
  EXPECT_THROW(StructureSpec::parse("sq:26", 5), std::invalid_argument);
  EXPECT_THROW(StructureSpec::parse("part:0", 4), std::invalid_argument);
  EXPECT_THROW(StructureSpec::parse("part:5", 4), std::invalid_argument);
  EXPECT_THROW(StructureSpec::parse("prod:x", 4), std::invalid_argument);
  EXPECT_THROW(StructureSpec::parse("bogus:1", 4), std::invalid_argument);
}

TEST(Squareability, Values) {
  EXPECT_EQ(squareability_of(parse_labels(5, "12|3|4|5")), 7);
  EXPECT_EQ(squareability_of(parse_labels(5, "123|45")), 13);
  EXPECT_EQ(squareability_of(Partition::finest(6)), 6);
  EXPECT_EQ(squareability_of(parse_labels(5, "1234|5")), 17);
}

TEST(Family, AntichainAndClosureByBruteForce) {
  for (int n = 2; n <= 6; ++n) {
    const auto all = enumerate_partitions(n);
    for (const auto& text : kSpecs) {
      StructureSpec spec;
      try {
        spec = StructureSpec::parse(text, n);
      } catch (const std::invalid_argument&) {
        continue;  // parameter out of range for this n
      }
      const auto f = family(spec);
      ASSERT_FALSE(f.maximal_partitions.empty()) << text << " n=" << n;
      for (const auto& a : f.maximal_partitions) {
        EXPECT_TRUE(spec.allows(a));
        for (const auto& b : f.maximal_partitions)
          if (!(a == b)) EXPECT_FALSE(refines(a, b)) << a.to_string() << " refines " << b.to_string();
      }
      for (const auto& p : all) {
        if (!spec.allows(p)) continue;
        const bool covered = std::any_of(f.maximal_partitions.begin(), f.maximal_partitions.end(),
                                         [&](const Partition& m) { return refines(p, m); });
        EXPECT_TRUE(covered) << text << " n=" << n << " misses " << p.to_string();
      }
      // Closed under refinement.
      for (const auto& p : all)
        for (const auto& q : all)
          if (spec.allows(q) && refines(p, q)) EXPECT_TRUE(spec.allows(p));
    }
  }
}

TEST(Family, ShapeOfPartitionabilityAndProducibility) {
  for (int n = 2; n <= 6; ++n) {
    for (int k = 1; k <= n; ++k)
      for (const auto& p : family(StructureSpec::parse("part:" + std::to_string(k), n)).maximal_partitions)
        EXPECT_EQ(p.size(), k);
    for (int h = 1; h <= n; ++h) {
      for (const auto& p : family(StructureSpec::parse("prod:" + std::to_string(h), n)).maximal_partitions) {
        EXPECT_LE(p.largest_part_size(), h);
        const auto sizes = p.part_sizes();
        for (std::size_t i = 0; i < sizes.size(); ++i)
          for (std::size_t j = i + 1; j < sizes.size(); ++j) EXPECT_GT(sizes[i] + sizes[j], h);
      }
    }
  }
}

TEST(Family, CertificateTransferOnPredicates) {
  for (int n = 2; n <= 6; ++n)
    for (const auto& p : enumerate_partitions(n)) {
      for (int k = 1; k < n; ++k)
        if (StructureSpec::parse("part:" + std::to_string(k + 1), n).allows(p))
          EXPECT_TRUE(StructureSpec::parse("part:" + std::to_string(k), n).allows(p));
      for (int h = 1; h < n; ++h)
        if (StructureSpec::parse("prod:" + std::to_string(h), n).allows(p))
          EXPECT_TRUE(StructureSpec::parse("prod:" + std::to_string(h + 1), n).allows(p));
    }
}
