#pragma once

// Multichannel, circularly indexed signals stored sample-major: the S channel
// values of sample n are contiguous at data()[n * S].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "parafac/error.hpp"
#include "parafac/polymat.hpp"
#include "parafac/simd/kernels.hpp"

namespace parafac {

template <typename Real>
class BasicSignal {
 public:
  using value_type = Real;

  BasicSignal() = default;
  BasicSignal(int channels, int length)
      : BasicSignal(channels, length,
                    std::vector<Real>(static_cast<std::size_t>(channels) * std::max(length, 0))) {}
  BasicSignal(int channels, int length, std::vector<Real> data)
      : channels_(channels), length_(length), data_(std::move(data)) {
    if (channels < 1 || length < 1) {
      throw InvalidInput("signal needs channels >= 1 and length >= 1");
    }
    if (data_.size() != static_cast<std::size_t>(channels) * length) {
      throw InvalidInput("signal data has " + std::to_string(data_.size()) + " values, expected " +
                         std::to_string(static_cast<std::size_t>(channels) * length));
    }
  }

  int channels() const { return channels_; }
  int length() const { return length_; }

  // Sample n (0 <= n < length).
  Real* sample(int n) { return data_.data() + static_cast<std::size_t>(n) * channels_; }
  const Real* sample(int n) const { return data_.data() + static_cast<std::size_t>(n) * channels_; }
  // Circular index: any integer n maps to n mod length.
  const Real* wrapped(long long n) const {
    const long long len = length_;
    return sample(static_cast<int>(((n % len) + len) % len));
  }

  Real& operator()(int n, int c) { return sample(n)[c]; }
  Real operator()(int n, int c) const { return sample(n)[c]; }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }

  double squared_norm() const { return simd::sum_squares(data_.data(), data_.size()); }
  double norm() const { return std::sqrt(squared_norm()); }

  template <typename Other>
  BasicSignal<Other> cast() const {
    std::vector<Other> out(data_.begin(), data_.end());
    return BasicSignal<Other>(channels_, length_, std::move(out));
  }

  bool operator==(const BasicSignal&) const = default;

 private:
  int channels_ = 0;
  int length_ = 0;
  std::vector<Real> data_;
};

using Signal = BasicSignal<double>;
using Signal32 = BasicSignal<float>;

// Standard Gaussian entries.
Signal gaussian_signal(int channels, int length, std::mt19937_64& rng);

// The signal as a sequence of S x 1 taps on [0, N).
MatrixSeq to_seq(const Signal& x);

}  // namespace parafac
