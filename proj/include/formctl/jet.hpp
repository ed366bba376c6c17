#pragma once

#include <array>
#include <cassert>

namespace formctl {

// Truncated Taylor expansion f(t0 + h) = sum_k c[k] h^k, k = 0..order.
// Arithmetic on jets propagates exact derivatives of closed-form expressions
// through products, sums and sin/cos; derivative(k) = k! c[k].
class Jet {
 public:
  static constexpr int kMaxOrder = 8;

  Jet() = default;
  explicit Jet(int order, double value = 0.0) : order_(order) {
    assert(order >= 0 && order <= kMaxOrder);
    c_[0] = value;
  }

  int order() const { return order_; }
  double coeff(int k) const { return c_[k]; }
  double& coeff(int k) { return c_[k]; }
  double value() const { return c_[0]; }
  double derivative(int k) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b);

  // sin and cos of a jet, computed together by the coupled recurrence.
  friend void sincos(const Jet& u, Jet& s, Jet& c);

 private:
  int order_ = 0;
  std::array<double, kMaxOrder + 1> c_{};
};

}  // namespace formctl
