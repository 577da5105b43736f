#pragma once

#include <cstdint>
#include <string_view>

namespace scanstat {

// Counter-derived random stream.  Each stream is seeded by a 128-bit mix of
// (master seed, module tag, replicate index), so replicate i always sees the
// same sequence no matter which worker runs it or in which order.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, std::string_view module_tag,
            std::uint64_t replicate);

  std::uint64_t next_u64();

  // (0,1), never returns 0 or 1
  double uniform();
  double uniform(double a, double b);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double exponential();  // mean 1
  std::uint64_t poisson(double mean);
  std::size_t uniform_index(std::size_t n);

  // UniformRandomBitGenerator interface
  std::uint64_t operator()() { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

 private:
  std::uint64_t state_;
  double spare_normal_ = 0.0;
  bool have_spare_ = false;
};

// stable 64-bit tag hash (FNV-1a)
std::uint64_t hash_tag(std::string_view tag);

}  // namespace scanstat
