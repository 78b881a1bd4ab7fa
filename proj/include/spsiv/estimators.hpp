#pragma once

#include "spsiv/core_model.hpp"

namespace spsiv {

/// Instrumental variables estimate (sum psi phi^T)^{-1} sum psi Y.
/// Throws SingularDesign if the cross moment fails the 1e-12 conditioning gate.
Vector iv_estimate(const Dataset& data);

/// Ordinary least squares via the d x d normal equations.
Vector ls_estimate(const Dataset& data);

/// Least squares on outputs/regressors only (no instruments needed).
Vector ls_estimate(const Vector& outputs, const Matrix& regressors);

}  // namespace spsiv
