#include "mre/linalg.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

namespace mre::linalg {

bool is_symmetric(const Matrix& a, double rtol) {
    if (a.rows() != a.cols()) return false;
    if (a.size() == 0) return true;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= rtol * scale;
}

std::optional<Eigen::LLT<Matrix>> cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) return std::nullopt;
    Eigen::LLT<Matrix> llt(symmetrize(a));
    if (llt.info() != Eigen::Success) return std::nullopt;
    // NaN entries can get through LLT without setting info().
    const auto diag = llt.matrixLLT().diagonal();
    for (Index i = 0; i < diag.size(); ++i) {
        if (!(diag[i] > 0.0) || !std::isfinite(diag[i])) return std::nullopt;
    }
    return llt;
}

bool is_positive_definite(const Matrix& a) { return cholesky(a).has_value(); }

bool has_full_row_rank(const Matrix& a, double rel) {
    if (a.rows() == 0) return true;
    if (a.rows() > a.cols()) return false;
    Eigen::JacobiSVD<Matrix> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || !(s[0] > 0.0)) return false;
    return s[s.size() - 1] > rel * s[0];
}

double log_det(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

bool rows_in_span(const Matrix& b, const Matrix& a, double tol) {
    if (b.rows() == 0) return true;
    if (a.rows() == 0) return false;
    // Solve a' c = b' in the least squares sense and check the residual.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a.transpose());
    const Matrix coeffs = cod.solve(b.transpose());
    const Matrix resid = a.transpose() * coeffs - b.transpose();
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    return resid.cwiseAbs().maxCoeff() <= tol * scale;
}

}  // namespace mre::linalg
