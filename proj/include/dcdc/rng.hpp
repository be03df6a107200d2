#ifndef DCDC_RNG_HPP
#define DCDC_RNG_HPP

#include <cstdint>
#include <vector>

namespace dcdc {

// Counter-based splittable generator. A stream is (key, counter); draws hash
// the pair with the SplitMix64 finalizer, so streams can be split without
// sharing state and replayed from (seed, stream-path) alone.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : key_(finalize(seed + kGamma)), ctr_(0) {}

  // Child stream; independent of this stream's future draws.
  SplitRng split(std::uint64_t stream) const {
    SplitRng child(0);
    child.key_ = finalize((key_ ^ kSplitTag) + (stream + 1) * kGamma);
    child.ctr_ = 0;
    return child;
  }

  std::uint64_t next_u64() { return finalize(key_ + (++ctr_) * kGamma); }

  // Uniform on [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo bias is < 2^-53 for the n used here; use
    // the multiply-shift trick for uniformity.
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
  }

  // k distinct indices from {0, ..., n-1} (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kSplitTag = 0xA5A5A5A5A5A5A5A5ULL;

  static std::uint64_t finalize(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
  }

  std::uint64_t key_;
  std::uint64_t ctr_;
};

}  // namespace dcdc

#endif  // DCDC_RNG_HPP
