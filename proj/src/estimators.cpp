#include "spsiv/estimators.hpp"

#include "spsiv/errors.hpp"

namespace spsiv {

namespace {
constexpr double kConditioning = 1e-12;
}

Vector iv_estimate(const Dataset& data) {
  const Matrix v = cross_moment(data);
  const Vector rhs =
      data.instruments().transpose() * data.outputs() / static_cast<double>(data.n());
  try {
    return solve_general(v, rhs, kConditioning);
  } catch (const IllConditioned&) {
    throw SingularDesign("iv_estimate: sum psi phi^T is singular");
  }
}

Vector ls_estimate(const Vector& outputs, const Matrix& regressors) {
  if (outputs.size() != regressors.rows() || regressors.cols() < 1) {
    throw InputError("ls_estimate: dimension mismatch");
  }
  const double n = static_cast<double>(outputs.size());
  const SymMatrix gram(regressors.transpose() * regressors / n);
  const Vector rhs = regressors.transpose() * outputs / n;
  try {
    return solve_spd(gram, rhs);
  } catch (const IllConditioned&) {
    throw SingularDesign("ls_estimate: regressor Gram matrix is singular");
  }
}

Vector ls_estimate(const Dataset& data) {
  return ls_estimate(data.outputs(), data.regressors());
}

}  // namespace spsiv
