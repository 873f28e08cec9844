#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <stdexcept>
#include <vector>

namespace horolab {

// Small integer vector (at most 8 components) used for deck coordinates,
// abelianization vectors and finite-quotient labels. Fixed capacity keeps the
// per-step flow updates allocation-free.
class ZVec {
public:
  static constexpr std::size_t capacity = 8;

  ZVec() = default;
  explicit ZVec(std::size_t n) : n_(n) {
    if (n > capacity) throw std::length_error("ZVec: too many components");
  }
  ZVec(std::initializer_list<long> values) : ZVec(values.size()) {
    std::size_t i = 0;
    for (long v : values) v_[i++] = v;
  }

  std::size_t size() const { return n_; }
  long& operator[](std::size_t i) { return v_[i]; }
  long operator[](std::size_t i) const { return v_[i]; }
  const long* begin() const { return v_.data(); }
  const long* end() const { return v_.data() + n_; }

  ZVec& operator+=(const ZVec& o) {
    for (std::size_t i = 0; i < n_; ++i) v_[i] += o.v_[i];
    return *this;
  }
  ZVec& operator-=(const ZVec& o) {
    for (std::size_t i = 0; i < n_; ++i) v_[i] -= o.v_[i];
    return *this;
  }
  friend ZVec operator+(ZVec a, const ZVec& b) { return a += b; }
  friend ZVec operator-(ZVec a, const ZVec& b) { return a -= b; }
  ZVec operator-() const {
    ZVec r(n_);
    for (std::size_t i = 0; i < n_; ++i) r.v_[i] = -v_[i];
    return r;
  }
  friend bool operator==(const ZVec& a, const ZVec& b) {
    if (a.n_ != b.n_) return false;
    for (std::size_t i = 0; i < a.n_; ++i)
      if (a.v_[i] != b.v_[i]) return false;
    return true;
  }
  friend bool operator<(const ZVec& a, const ZVec& b) {
    if (a.n_ != b.n_) return a.n_ < b.n_;
    for (std::size_t i = 0; i < a.n_; ++i)
      if (a.v_[i] != b.v_[i]) return a.v_[i] < b.v_[i];
    return false;
  }

  bool is_zero() const {
    for (std::size_t i = 0; i < n_; ++i)
      if (v_[i] != 0) return false;
    return true;
  }

  std::vector<long> to_vector() const { return {begin(), end()}; }

private:
  std::array<long, capacity> v_{};
  std::size_t n_ = 0;
};

std::ostream& operator<<(std::ostream& os, const ZVec& v);

} // namespace horolab
