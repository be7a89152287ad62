#include "cib/random.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cib/errors.hpp"
#include "cib/hash.hpp"

namespace cib {

std::uint64_t stream_key(std::uint64_t master_seed, const StreamId& stream) noexcept {
  std::uint64_t h = mix64(master_seed ^ 0x43494253454544ULL);
  h = mix64(h ^ stream.run);
  h = mix64(h ^ static_cast<std::uint64_t>(stream.period));
  h = mix64(h ^ static_cast<std::uint64_t>(stream.purpose));
  h = mix64(h ^ stream.entity);
  return h;
}

RandomSource::RandomSource(std::uint64_t master_seed, StreamId stream)
    : master_seed_(master_seed), stream_(stream), key_(stream_key(master_seed, stream)), engine_(key_) {}

double RandomSource::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RandomSource::gaussian() { return normal_(engine_); }

double RandomSource::draw(const Distribution& distribution, double sd) {
  if (distribution.kind == Distribution::Kind::gaussian) return sd * normal_(engine_);
  const int df = distribution.df;
  if (df <= 2) {
    throw ConfigError("distribution", fmt::format("student_t with df = {} has no finite standard deviation", df));
  }
  std::student_t_distribution<double> t(static_cast<double>(df));
  return sd * std::sqrt((df - 2.0) / df) * t(engine_);
}

}  // namespace cib
