#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "quasirobust/ambiguity.hpp"
#include "quasirobust/errors.hpp"
#include "quasirobust/market.hpp"
#include "quasirobust/measure.hpp"
#include "quasirobust/utility.hpp"

namespace qr = quasirobust;

namespace testing {

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// S0 = 1, ST = (2, 0.5), p = (0.5, 0.5)
inline qr::FiniteMarket two_state() {
  Eigen::MatrixXd st(2, 1);
  st << 2.0, 0.5;
  return qr::FiniteMarket(vec({1.0}), st, vec({0.5, 0.5}));
}

inline qr::FiniteMarket three_state_two_asset() {
  Eigen::MatrixXd st(3, 2);
  st << 1.3, 0.9,
        1.0, 1.2,
        0.7, 1.0;
  return qr::FiniteMarket(vec({1.0, 1.0}), st, vec({0.3, 0.4, 0.3}));
}

inline qr::Measure measure(const qr::FiniteMarket& m, std::initializer_list<double> q) {
  return qr::Measure(vec(q), m.reference_ptr());
}

inline const double kClassicalLog = std::log(1.0) + 0.5 * std::log(1.5) + 0.5 * std::log(0.75);

template <class F>
qr::ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const qr::Error& e) {
    return e.code();
  }
  return static_cast<qr::ErrorCode>(-1);
}

}  // namespace testing
