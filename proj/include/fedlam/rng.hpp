#ifndef FEDLAM_RNG_HPP
#define FEDLAM_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedlam {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Purpose tags so that streams for different jobs never collide.
enum class Stream : std::uint64_t {
  kInit = 1,
  kSplit = 2,
  kTrain = 3,
  kChannel = 4,
  kImportance = 5,
  kPower = 6,
  kData = 7,
};

/// Mixes an experiment seed with any number of coordinates (round, client,
/// layer, ...) into an independent seed. Order of coordinates matters.
inline std::uint64_t derive_seed(std::uint64_t seed, Stream purpose,
                                 std::initializer_list<std::uint64_t> coords = {}) {
  std::uint64_t h = detail::splitmix64(seed ^ detail::splitmix64(static_cast<std::uint64_t>(purpose)));
  for (std::uint64_t c : coords) h = detail::splitmix64(h ^ detail::splitmix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, Stream purpose, std::initializer_list<std::uint64_t> coords = {}) {
  return Rng(derive_seed(seed, purpose, coords));
}

}  // namespace fedlam

#endif  // FEDLAM_RNG_HPP
