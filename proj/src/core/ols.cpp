#include "ols.hpp"

#include "btcgarch/error.hpp"

namespace btcg::detail {

OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const auto n = x.rows();
    const auto k = x.cols();
    if (n <= k) fail(Errc::TooShort, "regression has no residual degrees of freedom");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) fail(Errc::SingularRegression, "design matrix is rank deficient");

    OlsFit fit;
    fit.nobs = static_cast<std::size_t>(n);
    fit.coef = qr.solve(y);
    const Eigen::VectorXd resid = y - x * fit.coef;
    fit.rss = resid.squaredNorm();
    fit.tss = (y.array() - y.mean()).matrix().squaredNorm();
    fit.r2 = fit.tss > 0.0 ? 1.0 - fit.rss / fit.tss : 0.0;

    // (X'X)^{-1} = P R^{-1} R^{-T} P'
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd xtx_inv_perm = rinv * rinv.transpose();
    const Eigen::MatrixXd xtx_inv =
        qr.colsPermutation() * xtx_inv_perm * qr.colsPermutation().transpose();
    const double sigma2 = fit.rss / static_cast<double>(n - k);
    fit.se = (xtx_inv.diagonal() * sigma2).cwiseSqrt();
    return fit;
}

}  // namespace btcg::detail
