#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

// Deterministic random number generation.
//
// Every stochastic quantity in this library is drawn from an RngStream seeded
// through derive_seed(), never from std:: distributions, whose output is
// implementation defined.  The generators and transforms below are fixed by
// this file and give bit-identical streams for equal seeds on any platform
// with IEEE-754 doubles:
//
//   seed derivation   SplitMix64 applied to the master seed xor'd with a
//                     purpose tag and up to two indices (stream splitting)
//   uniform stream    xoshiro256++ seeded from four SplitMix64 outputs
//   doubles           53-bit mantissa fill, uniform in [0,1)
//   normal            Box-Muller on two uniforms (both outputs used)
//   laplace           inverse CDF of a uniform
//
// Purpose tags keep substreams for different roles (truth vector, features,
// noise, bagging, oracle coins, privacy noise, ...) non-overlapping without
// coordination between modules.

namespace lar::rng {

// Role of a substream.  Values are part of the reproducibility contract:
// changing them changes every derived stream.
enum class Stream : std::uint64_t {
  truth = 1,        // ground-truth coefficient draws
  features = 2,     // design matrix entries
  noise = 3,        // observation noise
  bagging = 4,      // random permutations for data-independent bags
  oracle_coin = 5,  // tie-break coins when rounding bag means
  dp_noise = 6,     // label-DP Laplace noise
  trial = 7,        // per-trial seeds in repeated experiments
  data_train = 8,   // per-repeat training set seeds
  data_test = 9,    // per-repeat test set seeds
  cell = 10,        // per-cell run seeds in parameter sweeps
  monte_carlo = 11, // test-only Monte Carlo redraws
};

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Splits a master seed into an independent substream seed.  The tag and the
// two indices are folded in through separate SplitMix64 rounds so that
// (seed, tag, a, b) tuples map to well-separated points of the state space.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream tag,
                                           std::uint64_t a = 0,
                                           std::uint64_t b = 0) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s = h ^ (static_cast<std::uint64_t>(tag) * 0xd6e8feb86659fd93ULL);
  h = splitmix64(s);
  s = h ^ (a * 0xa0761d6478bd642fULL);
  h = splitmix64(s);
  s = h ^ (b * 0xe7037ed1a0b428dbULL);
  return splitmix64(s);
}

// xoshiro256++ by Blackman and Vigna, seeded via SplitMix64 as its authors
// recommend.  Passes BigCrush; period 2^256 - 1.
class Xoshiro256pp {
 public:
  explicit constexpr Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  constexpr std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4]{};
};

// A single substream with the scalar draws the library needs.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}
  RngStream(std::uint64_t seed, Stream tag, std::uint64_t a = 0,
            std::uint64_t b = 0)
      : gen_(derive_seed(seed, tag, a, b)) {}

  std::uint64_t next_u64() { return gen_.next(); }

  // Uniform in [0,1), 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0,1); the zero point is bumped to the smallest draw so that
  // log() below never sees 0.
  double uniform_open() {
    double u = uniform();
    return u == 0.0 ? 0x1.0p-53 : u;
  }

  // Uniform integer in [0, bound) by rejection, free of modulo bias.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t draw;
    do {
      draw = gen_.next();
    } while (draw >= limit);
    return draw % bound;
  }

  // Standard normal via Box-Muller.  Draws two uniforms, returns the cosine
  // branch and caches the sine branch, so consecutive calls consume the
  // stream in a fixed pattern.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(angle);
    have_cached_ = true;
    return r * std::cos(angle);
  }

  // Laplace(0, scale) via the inverse CDF.
  double laplace(double scale) {
    const double u = uniform() - 0.5;
    const double mag = 1.0 - 2.0 * std::abs(u);
    const double safe = mag == 0.0 ? 0x1.0p-53 : mag;
    const double z = -scale * std::log(safe);
    return u < 0.0 ? -z : z;
  }

 private:
  Xoshiro256pp gen_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// Fair deterministic coin for tie-breaking, keyed on a seed and a stable
// identifier.  Same key, same outcome, across runs and platforms.
inline bool fair_coin(std::uint64_t seed, std::uint64_t key) {
  return (derive_seed(seed, Stream::oracle_coin, key) >> 63) != 0;
}

}  // namespace lar::rng
