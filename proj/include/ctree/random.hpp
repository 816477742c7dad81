#pragma once

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace ctree {

// Seeded generator with portable distributions. std:: distributions are
// implementation-defined, so sampling goes through boost::random which
// produces the same stream on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng({seed}) {}

  // Independent stream keyed by (seed, ids...), e.g. (seed, subject_index).
  Rng(std::initializer_list<std::uint64_t> key) {
    std::vector<std::uint32_t> words;
    for (std::uint64_t k : key) {
      words.push_back(static_cast<std::uint32_t>(k & 0xffffffffu));
      words.push_back(static_cast<std::uint32_t>(k >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    engine_.seed(seq);
  }

  double uniform() { return boost::random::uniform_01<double>()(engine_); }

  std::size_t index(std::size_t n) {
    return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    return boost::random::normal_distribution<double>(mean, sd)(engine_);
  }

  double gamma(double shape, double scale) {
    return boost::random::gamma_distribution<double>(shape, scale)(engine_);
  }

  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    return boost::random::poisson_distribution<long long, double>(mean)(engine_);
  }

  // Negative binomial as a gamma-Poisson mixture with the given mean and
  // dispersion (variance = mean + mean^2 / dispersion).
  long long negative_binomial(double mean, double dispersion) {
    if (mean <= 0.0) return 0;
    return poisson(gamma(dispersion, mean / dispersion));
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ctree
