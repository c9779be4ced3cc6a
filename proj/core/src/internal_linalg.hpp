#pragma once

// Shared internal helpers for the q x q linear algebra. Not installed.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <string>

#include "sfclust/errors.hpp"

namespace sfclust::detail {

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) {
    return 0.5 * (m + m.transpose());
}

/// Symmetric PSD square root via eigendecomposition. Eigenvalues in
/// [-tol, 0) are clipped to zero; anything below -tol is an error.
inline Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m, const std::string& what) {
    if (m.rows() != m.cols()) throw NumericError(what + ": not square");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() >
        1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw NumericError(what + ": not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
    if (eig.info() != Eigen::Success) throw NumericError(what + ": eigendecomposition failed");
    const Eigen::VectorXd& ev = eig.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-8 * scale)
        throw NumericError(what + ": negative eigenvalue " + std::to_string(ev.minCoeff()));
    Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Clips negative eigenvalues to zero (PSD projection).
inline Eigen::MatrixXd psd_project(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(m));
    Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
    return symmetrize(eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose());
}

}  // namespace sfclust::detail
