#pragma once

#include <array>
#include <cmath>

namespace synkb {

// Logistic function with two evaluation modes. The table mode mirrors the
// usual trainer fast path: 1000 bins over [-6, 6], inputs clamped to the
// edge bins. Gradient tests always run in exact mode so they do not depend
// on table resolution.
class Sigmoid {
 public:
  explicit Sigmoid(bool exact_mode = false) : exact_(exact_mode) {}

  static double exact(double x) {
    if (x >= 0) {
      return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
  }

  double operator()(double x) const { return exact_ ? exact(x) : from_table(x); }

  bool exact_mode() const { return exact_; }

  static constexpr double kMaxExp = 6.0;
  static constexpr int kTableSize = 1000;

 private:
  static double from_table(double x) {
    static const std::array<double, kTableSize> table = [] {
      std::array<double, kTableSize> t{};
      for (int i = 0; i < kTableSize; ++i) {
        double center = -kMaxExp + (2 * kMaxExp) * (i + 0.5) / kTableSize;
        t[i] = exact(center);
      }
      return t;
    }();
    if (x <= -kMaxExp) return table.front();
    if (x >= kMaxExp) return table.back();
    int idx = static_cast<int>((x + kMaxExp) / (2 * kMaxExp) * kTableSize);
    if (idx >= kTableSize) idx = kTableSize - 1;
    return table[idx];
  }

  bool exact_;
};

// log(sigmoid(x)), evaluated without overflow for any x.
inline double log_sigmoid(double x) {
  if (x > 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace synkb
