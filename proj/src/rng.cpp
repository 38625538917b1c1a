#include "lmselect/rng.hpp"

#include <cmath>

namespace lmselect {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stable_hash(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p));
  return h;
}

int Rng::categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  const double u = uniform();
  double acc = 0.0;
  const auto last = static_cast<int>(probs.size()) - 1;
  for (int i = 0; i < last; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding can leave acc slightly below 1; skip trailing zero-probability entries.
  for (int i = last; i > 0; --i) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

Eigen::VectorXd Rng::dirichlet_flat(int size) {
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v[i] = -std::log1p(-uniform());
  return v / v.sum();
}

}  // namespace lmselect
