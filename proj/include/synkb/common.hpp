#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace synkb {

// Malformed or inconsistent input data (bad file contents, layout
// mismatches). The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad invocation (missing/contradictory flags). The CLI maps this to exit
// code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic random stream. The raw mt19937_64 sequence is fixed by the
// standard, and every draw below is derived from it without distribution
// objects, so a seed reproduces the same values on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

  // Uniform double in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Mixes a seed with a stream index so worker threads get uncorrelated
// streams from a single user-facing seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

inline char lower_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower_ascii(c);
  return out;
}

// Splits on runs of whitespace. Does not fold case.
std::vector<std::string> split_whitespace(std::string_view s);

// Splits on tabs, keeping empty fields.
std::vector<std::string> split_tabs(std::string_view s);

std::string join(const std::vector<std::string>& parts, char sep);

// 64-bit FNV-1a, used for feature-layout fingerprints.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace synkb
