#include "canace/index.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace canace {

IndexTuple::IndexTuple(std::vector<OneParticleIndex> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
}

IndexTuple::IndexTuple(std::initializer_list<OneParticleIndex> entries)
    : IndexTuple(std::vector<OneParticleIndex>(entries)) {}

IndexTuple IndexTuple::of(std::initializer_list<int> scalars) {
  std::vector<OneParticleIndex> e;
  e.reserve(scalars.size());
  for (int k : scalars) e.push_back(OneParticleIndex::scalar(k));
  return IndexTuple(std::move(e));
}

IndexTuple IndexTuple::replaced(std::size_t pos, const OneParticleIndex& k) const {
  std::vector<OneParticleIndex> e = entries_;
  e[pos] = k;
  return IndexTuple(std::move(e));
}

IndexTuple IndexTuple::extended(const OneParticleIndex& k) const {
  IndexTuple out;
  out.entries_.reserve(entries_.size() + 1);
  auto it = std::upper_bound(entries_.begin(), entries_.end(), k);
  out.entries_.insert(out.entries_.end(), entries_.begin(), it);
  out.entries_.push_back(k);
  out.entries_.insert(out.entries_.end(), it, entries_.end());
  return out;
}

IndexTuple IndexTuple::prefix() const {
  IndexTuple out;
  if (!entries_.empty()) out.entries_.assign(entries_.begin(), entries_.end() - 1);
  return out;
}

int IndexTuple::sum_n() const {
  int s = 0;
  for (const auto& k : entries_) s += k.n;
  return s;
}

int IndexTuple::sum_l() const {
  int s = 0;
  for (const auto& k : entries_) s += k.l;
  return s;
}

int IndexTuple::sum_m() const {
  int s = 0;
  for (const auto& k : entries_) s += k.m;
  return s;
}

std::string tuple_label(const IndexTuple& t, bool spherical) {
  if (t.empty()) return "()";
  std::ostringstream os;
  for (std::size_t i = 0; i < t.entries().size(); ++i) {
    const auto& k = t[i];
    if (i) os << (spherical ? ';' : '|');
    if (spherical)
      os << k.n << ':' << k.l << ':' << k.m;
    else
      os << k.n;
  }
  return os.str();
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

int parse_int(const std::string& s, const std::string& label) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed tuple label: '" + label + "'");
  }
  if (used != s.size()) throw std::invalid_argument("malformed tuple label: '" + label + "'");
  return v;
}

}  // namespace

IndexTuple parse_tuple_label(const std::string& label, bool spherical) {
  if (label == "()" || label.empty()) return {};
  std::vector<OneParticleIndex> entries;
  for (const auto& part : split(label, spherical ? ';' : '|')) {
    if (spherical) {
      auto f = split(part, ':');
      if (f.size() != 3) throw std::invalid_argument("malformed tuple label: '" + label + "'");
      entries.push_back({parse_int(f[0], label), parse_int(f[1], label), parse_int(f[2], label)});
    } else {
      entries.push_back(OneParticleIndex::scalar(parse_int(part, label)));
    }
  }
  return IndexTuple(std::move(entries));
}

}  // namespace canace
