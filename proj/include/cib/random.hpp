#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "cib/model.hpp"

namespace cib {

enum class Purpose : std::uint64_t {
  cim_sampling = 1,
  structural_shock = 2,
  dynamic_shock = 3,
  cyclic_transition = 4,
  robustness = 5,
};

// Coordinates of one independent draw sequence.
struct StreamId {
  std::uint64_t run = 0;
  std::int64_t period = 0;
  Purpose purpose = Purpose::cim_sampling;
  std::uint64_t entity = 0;

  bool operator==(const StreamId&) const = default;
};

// Seedable, splittable random source. The engine is seeded from a keyed hash
// of (master seed, stream), so a stream's draws never depend on which other
// streams were consumed or in what order.
class RandomSource {
 public:
  RandomSource(std::uint64_t master_seed, StreamId stream);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const StreamId& stream() const noexcept { return stream_; }
  std::uint64_t key() const noexcept { return key_; }

  double uniform();   // [0, 1)
  double gaussian();  // standard normal
  // Zero-mean draw whose standard deviation is `sd`; student_t draws are
  // rescaled by sqrt((df - 2) / df) and require df > 2.
  double draw(const Distribution& distribution, double sd);

 private:
  std::uint64_t master_seed_;
  StreamId stream_;
  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t stream_key(std::uint64_t master_seed, const StreamId& stream) noexcept;

}  // namespace cib
