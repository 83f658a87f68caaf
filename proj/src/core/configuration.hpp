#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dppp {

// Finite multiset of node indices, stored as sorted (index, multiplicity) pairs.
class Configuration {
 public:
  struct Atom {
    std::size_t index;
    unsigned multiplicity;
    friend bool operator==(const Atom&, const Atom&) = default;
    friend auto operator<=>(const Atom&, const Atom&) = default;
  };

  Configuration() = default;
  // Any order, repeats allowed.
  static Configuration from_indices(std::span<const std::size_t> indices);
  static Configuration from_counts(std::span<const unsigned> counts);

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t total() const noexcept;
  bool empty() const noexcept { return atoms_.empty(); }
  bool simple() const noexcept;
  unsigned multiplicity(std::size_t index) const noexcept;
  // Indices with repetition, ascending.
  std::vector<std::size_t> points() const;
  // Per-node counts over a space of n nodes.
  std::vector<unsigned> counts(std::size_t n) const;

  bool contains(const Configuration& sub) const noexcept;
  Configuration minus(const Configuration& sub) const;
  Configuration plus(const Configuration& other) const;

  std::string to_string() const;

  friend bool operator==(const Configuration&, const Configuration&) = default;
  friend auto operator<=>(const Configuration& a, const Configuration& b) { return a.atoms_ <=> b.atoms_; }

 private:
  std::vector<Atom> atoms_;
};

// Test function f >= 0 given by its node values.
using StepFunction = std::vector<double>;

}  // namespace dppp
