#include "entcert/partitions.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace entcert {

namespace {

std::vector<int> parse_type(std::string_view text) {
  std::vector<int> sizes;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t bar = text.find('|', pos);
    const std::string_view tok = text.substr(pos, bar == std::string_view::npos ? text.npos : bar - pos);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 1)
      throw std::invalid_argument("bad partition type '" + std::string(text) + "'");
    sizes.push_back(v);
    if (bar == std::string_view::npos) break;
    pos = bar + 1;
  }
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

int parse_int(std::string_view text) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("expected an integer, got '" + std::string(text) + "'");
  return v;
}

// Can parts of the given sizes be packed exactly into bins of the given capacities?
bool packs_into(const std::vector<int>& sizes, std::vector<int> bins) {
  std::function<bool(std::size_t)> place = [&](std::size_t i) {
    if (i == sizes.size()) return std::all_of(bins.begin(), bins.end(), [](int b) { return b == 0; });
    for (std::size_t b = 0; b < bins.size(); ++b) {
      if (bins[b] < sizes[i]) continue;
      // Skip bins with the same remaining capacity as an earlier one.
      bool seen = false;
      for (std::size_t e = 0; e < b; ++e) seen = seen || bins[e] == bins[b];
      if (seen) continue;
      bins[b] -= sizes[i];
      if (place(i + 1)) return true;
      bins[b] += sizes[i];
    }
    return false;
  };
  return place(0);
}

}  // namespace

Partition::Partition(int n, std::vector<std::vector<int>> parts) : n_(n), parts_(std::move(parts)) {
  std::vector<int> seen(n, 0);
  for (auto& p : parts_) {
    if (p.empty()) throw std::invalid_argument("partition has an empty part");
    std::sort(p.begin(), p.end());
    for (int x : p) {
      if (x < 0 || x >= n) throw std::invalid_argument("party index out of range");
      if (seen[x]++) throw std::invalid_argument("partition parts overlap");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw std::invalid_argument("partition does not cover all parties");
  std::sort(parts_.begin(), parts_.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

Partition Partition::finest(int n) {
  std::vector<std::vector<int>> parts;
  for (int i = 0; i < n; ++i) parts.push_back({i});
  return Partition(n, std::move(parts));
}

Partition Partition::trivial(int n) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  return Partition(n, {all});
}

std::vector<int> Partition::part_sizes() const {
  std::vector<int> sizes;
  for (const auto& p : parts_) sizes.push_back(static_cast<int>(p.size()));
  std::sort(sizes.rbegin(), sizes.rend());
  return sizes;
}

int Partition::largest_part_size() const { return part_sizes().front(); }

std::string Partition::type_string() const {
  std::string out;
  for (int s : part_sizes()) {
    if (!out.empty()) out += '|';
    out += std::to_string(s);
  }
  return out;
}

std::string Partition::to_string() const {
  std::string out;
  for (const auto& p : parts_) {
    if (!out.empty()) out += '|';
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (n_ > 9 && i > 0) out += ',';
      out += std::to_string(p[i] + 1);
    }
  }
  return out;
}

std::vector<Partition> enumerate_partitions(int n) {
  if (n < 1 || n > 12) throw std::invalid_argument("enumerate_partitions needs 1 <= n <= 12");
  std::vector<Partition> out;
  // Restricted growth strings: label[i] <= 1 + max(label[0..i-1]).
  std::vector<int> label(n, 0);
  std::function<void(int, int)> rec = [&](int i, int max_label) {
    if (i == n) {
      std::vector<std::vector<int>> parts(max_label + 1);
      for (int p = 0; p < n; ++p) parts[label[p]].push_back(p);
      out.emplace_back(n, std::move(parts));
      return;
    }
    for (int l = 0; l <= max_label + 1; ++l) {
      label[i] = l;
      rec(i + 1, std::max(max_label, l));
    }
  };
  label[0] = 0;
  rec(1, 0);
  return out;
}

bool refines(const Partition& a, const Partition& b) {
  if (a.parties() != b.parties()) throw std::invalid_argument("partitions over different party counts");
  std::vector<int> block(b.parties());
  for (int i = 0; i < b.size(); ++i)
    for (int x : b.part(i)) block[x] = i;
  for (const auto& p : a.parts())
    for (int x : p)
      if (block[x] != block[p.front()]) return false;
  return true;
}

int squareability_of(const Partition& p) {
  int s = 0;
  for (const auto& part : p.parts()) s += static_cast<int>(part.size() * part.size());
  return s;
}

StructureSpec StructureSpec::parse(std::string_view text, int n) {
  StructureSpec spec;
  spec.n = n;
  if (text == "full-sep" || text == "fullsep") {
    spec.cls = StructureClass::kPartitionability;
    spec.parameter = n;
    spec.validate();
    return spec;
  }
  const std::size_t colon = text.find(':');
  if (colon == std::string_view::npos) throw std::invalid_argument("bad structure spec '" + std::string(text) + "'");
  const std::string_view head = text.substr(0, colon);
  const std::string_view arg = text.substr(colon + 1);
  if (head == "part") {
    spec.cls = StructureClass::kPartitionability;
  } else if (head == "prod") {
    spec.cls = StructureClass::kProducibility;
  } else if (head == "sq") {
    spec.cls = StructureClass::kSquareability;
  } else if (head == "tough") {
    spec.cls = StructureClass::kToughness;
  } else if (head == "custom") {
    spec.cls = StructureClass::kCustom;
    std::size_t pos = 0;
    while (pos <= arg.size()) {
      const std::size_t comma = arg.find(',', pos);
      spec.types.push_back(parse_type(arg.substr(pos, comma == std::string_view::npos ? arg.npos : comma - pos)));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    spec.validate();
    return spec;
  } else {
    throw std::invalid_argument("unknown structure class '" + std::string(head) + "'");
  }
  spec.parameter = parse_int(arg);
  spec.validate();
  return spec;
}

std::string StructureSpec::to_string() const {
  switch (cls) {
    case StructureClass::kPartitionability: return "part:" + std::to_string(parameter);
    case StructureClass::kProducibility: return "prod:" + std::to_string(parameter);
    case StructureClass::kSquareability: return "sq:" + std::to_string(parameter);
    case StructureClass::kToughness: return "tough:" + std::to_string(parameter);
    case StructureClass::kCustom: {
      std::string out = "custom:";
      for (std::size_t i = 0; i < types.size(); ++i) {
        if (i) out += ',';
        for (std::size_t j = 0; j < types[i].size(); ++j) {
          if (j) out += '|';
          out += std::to_string(types[i][j]);
        }
      }
      return out;
    }
  }
  return "?";
}

void StructureSpec::validate() const {
  if (n < 1 || n > 12) throw std::invalid_argument("party count must be in [1, 12]");
  switch (cls) {
    case StructureClass::kPartitionability:
    case StructureClass::kProducibility:
      if (parameter < 1 || parameter > n) throw std::invalid_argument("structure parameter must be in [1, n]");
      break;
    case StructureClass::kSquareability:
      if (parameter < n || parameter > n * n) throw std::invalid_argument("squareability must be in [n, n^2]");
      break;
    case StructureClass::kToughness:
      // Only the explicit five-party mapping (1 -> 4|1, 2 -> 3|2) is defined.
      if (n != 5) throw std::invalid_argument("toughness is only defined for n = 5");
      if (parameter < 1 || parameter > 2) throw std::invalid_argument("toughness level must be 1 or 2");
      break;
    case StructureClass::kCustom:
      if (types.empty()) throw std::invalid_argument("custom structure needs at least one type");
      for (const auto& t : types)
        if (std::accumulate(t.begin(), t.end(), 0) != n)
          throw std::invalid_argument("custom partition type does not sum to n");
      break;
  }
}

bool StructureSpec::allows(const Partition& p) const {
  if (p.parties() != n) return false;
  switch (cls) {
    case StructureClass::kPartitionability: return p.size() >= parameter;
    case StructureClass::kProducibility: return p.largest_part_size() <= parameter;
    case StructureClass::kSquareability: return squareability_of(p) <= parameter;
    case StructureClass::kToughness:
      return packs_into(p.part_sizes(), parameter == 1 ? std::vector<int>{4, 1} : std::vector<int>{3, 2});
    case StructureClass::kCustom:
      return std::any_of(types.begin(), types.end(), [&](const auto& t) { return packs_into(p.part_sizes(), t); });
  }
  return false;
}

StructureFamily family(const StructureSpec& spec) {
  spec.validate();
  StructureFamily fam{spec, {}};
  // The allowed set is refinement-closed, so p is maximal iff no single merge
  // of two of its parts is still allowed.
  for (const auto& p : enumerate_partitions(spec.n)) {
    if (!spec.allows(p)) continue;
    bool maximal = true;
    for (int i = 0; i < p.size() && maximal; ++i) {
      for (int j = i + 1; j < p.size() && maximal; ++j) {
        std::vector<std::vector<int>> parts;
        for (int k = 0; k < p.size(); ++k)
          if (k != i && k != j) parts.push_back(p.part(k));
        std::vector<int> merged = p.part(i);
        merged.insert(merged.end(), p.part(j).begin(), p.part(j).end());
        parts.push_back(std::move(merged));
        if (spec.allows(Partition(spec.n, std::move(parts)))) maximal = false;
      }
    }
    if (maximal) fam.maximal_partitions.push_back(p);
  }
  std::sort(fam.maximal_partitions.begin(), fam.maximal_partitions.end(), [](const Partition& a, const Partition& b) {
    const auto sa = a.part_sizes();
    const auto sb = b.part_sizes();
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return fam;
}

}  // namespace entcert
