#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace morsecube {

inline constexpr std::size_t kMaxDim = 4;

/// Small fixed-capacity point/vector in R^m, m <= kMaxDim.
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t dim) : dim_(dim) { assert(dim <= kMaxDim); }
  Vec(std::initializer_list<double> values) : dim_(values.size()) {
    assert(values.size() <= kMaxDim);
    std::copy(values.begin(), values.end(), data_.begin());
  }
  explicit Vec(std::span<const double> values) : dim_(values.size()) {
    assert(values.size() <= kMaxDim);
    std::copy(values.begin(), values.end(), data_.begin());
  }

  std::size_t size() const noexcept { return dim_; }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  double* begin() noexcept { return data_.data(); }
  double* end() noexcept { return data_.data() + dim_; }
  const double* begin() const noexcept { return data_.data(); }
  const double* end() const noexcept { return data_.data() + dim_; }

  Vec& operator+=(const Vec& o) noexcept {
    for (std::size_t i = 0; i < dim_; ++i) data_[i] += o.data_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) noexcept {
    for (std::size_t i = 0; i < dim_; ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Vec& operator*=(double s) noexcept {
    for (std::size_t i = 0; i < dim_; ++i) data_[i] *= s;
    return *this;
  }
  friend Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
  friend Vec operator*(Vec a, double s) noexcept { return a *= s; }
  friend Vec operator*(double s, Vec a) noexcept { return a *= s; }

  friend bool operator==(const Vec& a, const Vec& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (std::size_t i = 0; i < a.dim_; ++i)
      if (a.data_[i] != b.data_[i]) return false;
    return true;
  }

  double norm() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) s += data_[i] * data_[i];
    return std::sqrt(s);
  }
  bool finite() const noexcept {
    for (std::size_t i = 0; i < dim_; ++i)
      if (!std::isfinite(data_[i])) return false;
    return true;
  }

 private:
  std::array<double, kMaxDim> data_{};
  std::size_t dim_ = 0;
};

inline double distance(const Vec& a, const Vec& b) noexcept { return (a - b).norm(); }

}  // namespace morsecube
