#pragma once

// Least-squares helpers shared by the diagnostics. Internal to the library.

#include <Eigen/Dense>

#include <cstddef>

namespace btcg::detail {

struct OlsFit {
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    double rss = 0.0;
    double tss = 0.0;  // centered total sum of squares
    double r2 = 0.0;
    std::size_t nobs = 0;
};

/// Column-pivoted QR fit; throws SingularRegression on rank deficiency.
OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

}  // namespace btcg::detail
