#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dppp {

// Rational alpha = num/den from the admissible family
//   {2/m} u {-1/m} u {0}, m >= 1.
class AlphaParameter {
 public:
  enum class Kind { determinantal_family, permanental_family, poisson_limit };

  AlphaParameter() = default;
  // Throws UnsupportedAlpha when num/den is outside the family.
  AlphaParameter(std::int64_t num, std::int64_t den);

  // Accepts "-1/2", "2", "0", "1/3"; also the unicode minus sign.
  static AlphaParameter parse(std::string_view text);

  static AlphaParameter determinantal(std::int64_t m) { return {-1, m}; }
  static AlphaParameter permanental(std::int64_t m) { return {2, m}; }

  double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::int64_t numerator() const noexcept { return num_; }
  std::int64_t denominator() const noexcept { return den_; }
  Kind kind() const noexcept;

  // Number of independent layers in the superposition construction:
  // m for alpha = -1/m, m for alpha = 2/m (so alpha = 1 gives 2), 0 for alpha = 0.
  std::int64_t layers() const noexcept;

  std::string to_string() const;

  friend bool operator==(const AlphaParameter&, const AlphaParameter&) = default;

 private:
  std::int64_t num_ = -1;
  std::int64_t den_ = 1;
};

const char* to_string(AlphaParameter::Kind kind) noexcept;

}  // namespace dppp
