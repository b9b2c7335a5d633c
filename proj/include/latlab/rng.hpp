#pragma once
#include <array>
#include <cmath>
#include <cstdint>

namespace latlab {

// Counter-based generator (Philox4x32-10). Streams keyed by (seed, stream)
// are independent by construction, so parallel chains never share state and
// identical (argv, seed) runs are byte-identical regardless of thread count.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0) {
    key_[0] = static_cast<uint32_t>(seed);
    key_[1] = static_cast<uint32_t>(seed >> 32);
    base_[0] = static_cast<uint32_t>(stream);
    base_[1] = static_cast<uint32_t>(stream >> 32);
  }

  uint32_t next_u32() {
    if (pos_ == 4) {
      block(ctr_++, buf_);
      pos_ = 0;
    }
    return buf_[pos_++];
  }

  uint64_t next_u64() {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double c = std::cos(2.0 * 3.14159265358979323846 * u2);
    double s = std::sin(2.0 * 3.14159265358979323846 * u2);
    spare_ = r * s;
    have_spare_ = true;
    return r * c;
  }

  // Uniform integer in [0, n) by rejection; n > 0.
  uint64_t below(uint64_t n) {
    uint64_t lim = ~uint64_t{0} - (~uint64_t{0} % n);
    uint64_t v;
    do {
      v = next_u64();
    } while (v >= lim);
    return v % n;
  }

 private:
  std::array<uint32_t, 2> key_{};
  std::array<uint32_t, 2> base_{};  // stream id occupies counter words 2..3
  uint64_t ctr_ = 0;
  std::array<uint32_t, 4> buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;

  static void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    uint64_t p = static_cast<uint64_t>(a) * b;
    hi = static_cast<uint32_t>(p >> 32);
    lo = static_cast<uint32_t>(p);
  }

  void block(uint64_t idx, std::array<uint32_t, 4>& out) const {
    std::array<uint32_t, 4> c = {static_cast<uint32_t>(idx),
                                 static_cast<uint32_t>(idx >> 32), base_[0],
                                 base_[1]};
    std::array<uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      uint32_t hi0, lo0, hi1, lo1;
      mulhilo(0xD2511F53u, c[0], hi0, lo0);
      mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
      c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    out = c;
  }
};

}  // namespace latlab
