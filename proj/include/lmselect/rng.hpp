#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace lmselect {

/// Default master seed for simulations and the replication study.
inline constexpr std::uint64_t kDefaultMasterSeed = 20130501;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a hash of a string; stable across platforms (unlike std::hash).
std::uint64_t stable_hash(std::string_view s) noexcept;

/// Seed of the substream identified by `path` under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

/// Seedable generator with a fully specified output sequence: MT19937-64
/// (whose output is fixed by the C++ standard) plus hand-written transforms.
/// The std:: distributions are avoided because their algorithms are
/// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index drawn from an (already normalized) probability vector by inversion.
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs);

  /// Flat Dirichlet draw: normalized standard exponentials.
  Eigen::VectorXd dirichlet_flat(int size);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lmselect
