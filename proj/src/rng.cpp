#include "scanstat/rng.hpp"

#include <cmath>

namespace scanstat {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer (Steele-Lea-Flood / Vigna)
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t hash_tag(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

RngStream::RngStream(std::uint64_t master_seed, std::string_view module_tag,
                     std::uint64_t replicate) {
  // two dependent 64-bit lanes folded together; distinct (seed, tag, replicate)
  // triples land on distinct states except with ~2^-64 collision probability
  std::uint64_t a = mix64(master_seed ^ hash_tag(module_tag));
  std::uint64_t b = mix64(a + kGolden * (replicate + 1));
  state_ = mix64(a ^ (b << 1) ^ (b >> 63));
}

std::uint64_t RngStream::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double RngStream::uniform() {
  // 53-bit mantissa in (0,1)
  double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  if (u <= 0.0) u = 0x1.0p-53;
  return u;
}

double RngStream::uniform(double a, double b) { return a + (b - a) * uniform(); }

double RngStream::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_normal_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double c = std::cos(6.283185307179586476925286766559 * u2);
  double s = std::sin(6.283185307179586476925286766559 * u2);
  spare_normal_ = r * s;
  have_spare_ = true;
  return r * c;
}

double RngStream::exponential() { return -std::log(uniform()); }

std::uint64_t RngStream::poisson(double mean) {
  // product method, chunked so exp(-mean) stays in range
  std::uint64_t total = 0;
  while (mean > 500.0) {
    mean -= 500.0;
    double limit = std::exp(-500.0);
    double p = 1.0;
    std::uint64_t k = 0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    total += k - 1;
  }
  if (mean > 0.0) {
    double limit = std::exp(-mean);
    double p = 1.0;
    std::uint64_t k = 0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    total += k - 1;
  }
  return total;
}

std::size_t RngStream::uniform_index(std::size_t n) {
  return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

}  // namespace scanstat
