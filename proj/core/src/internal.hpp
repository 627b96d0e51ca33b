#pragma once

#include <Eigen/Dense>

#include "quasirobust/utility.hpp"

namespace quasirobust::detail {

/// sum over charged states of q_i U(w_i); per-state first and second
/// derivatives (already multiplied by q_i) when requested. -inf outside the
/// domain.
double expected_utility(const UtilitySpec& u, const Eigen::VectorXd& q, const Eigen::VectorXd& w, Eigen::VectorXd* du,
                        Eigen::VectorXd* d2u);

}  // namespace quasirobust::detail
