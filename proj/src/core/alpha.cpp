#include "core/alpha.hpp"

#include <charconv>
#include <numeric>

#include "core/error.hpp"

namespace dppp {

AlphaParameter::AlphaParameter(std::int64_t num, std::int64_t den) {
  if (den == 0) fail(ErrorCode::UnsupportedAlpha, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  if (num == 0) den = 1;
  num_ = num;
  den_ = den;
  // reduced forms of the family: 0, -1/m, 1/k (= 2/2k), 2/m with m odd
  const bool ok = num_ == 0 || num_ == -1 || num_ == 1 || (num_ == 2 && den_ % 2 == 1);
  if (!ok) fail(ErrorCode::UnsupportedAlpha, to_string() + " is not of the form 2/m, -1/m or 0");
}

AlphaParameter AlphaParameter::parse(std::string_view text) {
  std::string s;
  for (std::size_t i = 0; i < text.size(); ++i) {
    // U+2212 MINUS SIGN in UTF-8
    if (i + 2 < text.size() && static_cast<unsigned char>(text[i]) == 0xE2 &&
        static_cast<unsigned char>(text[i + 1]) == 0x88 && static_cast<unsigned char>(text[i + 2]) == 0x92) {
      s.push_back('-');
      i += 2;
    } else if (text[i] != ' ') {
      s.push_back(text[i]);
    }
  }
  auto parse_int = [&](std::string_view part) {
    std::int64_t v = 0;
    const char* first = part.data();
    const char* last = part.data() + part.size();
    if (!part.empty() && part.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last)
      fail(ErrorCode::UnsupportedAlpha, "cannot parse alpha '" + std::string(text) + "'");
    return v;
  };
  const auto slash = s.find('/');
  if (slash == std::string::npos) return {parse_int(s), 1};
  return {parse_int(std::string_view(s).substr(0, slash)), parse_int(std::string_view(s).substr(slash + 1))};
}

AlphaParameter::Kind AlphaParameter::kind() const noexcept {
  if (num_ == 0) return Kind::poisson_limit;
  return num_ < 0 ? Kind::determinantal_family : Kind::permanental_family;
}

std::int64_t AlphaParameter::layers() const noexcept {
  if (num_ == 0) return 0;
  if (num_ == -1) return den_;
  if (num_ == 1) return 2 * den_;
  return den_;
}

std::string AlphaParameter::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

const char* to_string(AlphaParameter::Kind kind) noexcept {
  switch (kind) {
    case AlphaParameter::Kind::determinantal_family: return "determinantal_family";
    case AlphaParameter::Kind::permanental_family: return "permanental_family";
    case AlphaParameter::Kind::poisson_limit: return "poisson_limit";
  }
  return "?";
}

}  // namespace dppp
