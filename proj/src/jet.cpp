#include "formctl/jet.hpp"

#include <algorithm>
#include <cmath>

namespace formctl {

double Jet::derivative(int k) const {
  if (k > order_) return 0.0;
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return c_[k] * f;
}

Jet& Jet::operator+=(const Jet& o) {
  order_ = std::max(order_, o.order_);
  for (int k = 0; k <= order_; ++k) c_[k] += o.c_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  order_ = std::max(order_, o.order_);
  for (int k = 0; k <= order_; ++k) c_[k] -= o.c_[k];
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (int k = 0; k <= order_; ++k) c_[k] *= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  const int n = std::max(a.order_, b.order_);
  Jet r(n);
  for (int k = 0; k <= n; ++k) {
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) acc += a.c_[i] * b.c_[k - i];
    r.c_[k] = acc;
  }
  return r;
}

void sincos(const Jet& u, Jet& s, Jet& c) {
  const int n = u.order_;
  s = Jet(n, std::sin(u.c_[0]));
  c = Jet(n, std::cos(u.c_[0]));
  // s' = c u', c' = -s u'
  for (int k = 1; k <= n; ++k) {
    double as = 0.0;
    double ac = 0.0;
    for (int j = 1; j <= k; ++j) {
      as += j * u.c_[j] * c.c_[k - j];
      ac += j * u.c_[j] * s.c_[k - j];
    }
    s.c_[k] = as / k;
    c.c_[k] = -ac / k;
  }
}

}  // namespace formctl
