#include "core/configuration.hpp"

#include <algorithm>
#include <map>

#include "core/error.hpp"

namespace dppp {

Configuration Configuration::from_indices(std::span<const std::size_t> indices) {
  std::map<std::size_t, unsigned> counts;
  for (std::size_t i : indices) ++counts[i];
  Configuration c;
  for (const auto& [i, m] : counts) c.atoms_.push_back({i, m});
  return c;
}

Configuration Configuration::from_counts(std::span<const unsigned> counts) {
  Configuration c;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > 0) c.atoms_.push_back({i, counts[i]});
  return c;
}

std::size_t Configuration::total() const noexcept {
  std::size_t n = 0;
  for (const auto& a : atoms_) n += a.multiplicity;
  return n;
}

bool Configuration::simple() const noexcept {
  return std::all_of(atoms_.begin(), atoms_.end(), [](const Atom& a) { return a.multiplicity == 1; });
}

unsigned Configuration::multiplicity(std::size_t index) const noexcept {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), index,
                             [](const Atom& a, std::size_t i) { return a.index < i; });
  return it != atoms_.end() && it->index == index ? it->multiplicity : 0;
}

std::vector<std::size_t> Configuration::points() const {
  std::vector<std::size_t> out;
  out.reserve(total());
  for (const auto& a : atoms_)
    for (unsigned k = 0; k < a.multiplicity; ++k) out.push_back(a.index);
  return out;
}

std::vector<unsigned> Configuration::counts(std::size_t n) const {
  std::vector<unsigned> out(n, 0);
  for (const auto& a : atoms_) {
    if (a.index >= n) fail(ErrorCode::InvalidArgument, "configuration index out of range");
    out[a.index] = a.multiplicity;
  }
  return out;
}

bool Configuration::contains(const Configuration& sub) const noexcept {
  return std::all_of(sub.atoms_.begin(), sub.atoms_.end(),
                     [this](const Atom& a) { return multiplicity(a.index) >= a.multiplicity; });
}

Configuration Configuration::minus(const Configuration& sub) const {
  if (!contains(sub)) fail(ErrorCode::InvalidArgument, "not a sub-configuration");
  Configuration out;
  for (const auto& a : atoms_) {
    const unsigned m = a.multiplicity - sub.multiplicity(a.index);
    if (m > 0) out.atoms_.push_back({a.index, m});
  }
  return out;
}

Configuration Configuration::plus(const Configuration& other) const {
  auto p = points();
  const auto q = other.points();
  p.insert(p.end(), q.begin(), q.end());
  return from_indices(p);
}

std::string Configuration::to_string() const {
  std::string s = "{";
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    if (k) s += ",";
    s += std::to_string(atoms_[k].index);
    if (atoms_[k].multiplicity > 1) s += "^" + std::to_string(atoms_[k].multiplicity);
  }
  return s + "}";
}

}  // namespace dppp
