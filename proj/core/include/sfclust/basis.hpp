#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "sfclust/types.hpp"

namespace sfclust {

enum class BasisKind { bspline, fourier };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& s);

/// Basis family and dimension. For B-splines, q = order + #interior knots
/// (an empty knot list means q - order equispaced interior knots). For the
/// Fourier family q must be odd: constant plus sin/cos pairs of period 1,
/// scaled by sqrt(2) so the family is orthonormal on [0, 1].
struct BasisSpec {
    BasisKind kind = BasisKind::bspline;
    int q = 12;
    int order = 4;                       // B-spline order (4 = cubic)
    std::vector<double> interior_knots;  // strictly increasing inside (0,1); empty = equispaced

    static BasisSpec bspline(int q, int order = 4);
    static BasisSpec bspline_with_knots(std::vector<double> knots, int order = 4);
    static BasisSpec fourier(int q);

    void validate() const;

    /// Interior knots actually used (fills in the equispaced default).
    std::vector<double> resolved_interior_knots() const;

    /// Clamped knot vector: order copies of 0, interior knots, order copies of 1.
    std::vector<double> knot_vector() const;
};

/// Evaluates the basis row s(t)^T at each time; result is times.size() x q.
/// Times must lie in [0, 1] (domain error otherwise). B-splines use the
/// Cox-de Boor recursion on the clamped knot vector.
Eigen::MatrixXd evaluate_basis(const BasisSpec& spec, const Eigen::VectorXd& times);

/// Basis matrix over the equispaced lattice (l - 0.5)/L, l = 1..L.
struct LatticeBasis {
    Eigen::MatrixXd values;  // L x q, full column rank
    Eigen::VectorXd points;
};

/// Builds the lattice basis and verifies full column rank.
LatticeBasis build_lattice_basis(const BasisSpec& spec, int L = 365);

/// Invertible q x q change of coordinates T with (S T)^T Sigma^{-1} (S T) = I
/// for Sigma = sigma2 I + S Gamma S^T.
struct OrthoTransform {
    Eigen::MatrixXd T;
    Eigen::MatrixXd T_inv;
};

/// Computes the transform from the q x q matrix M = S^T Sigma^{-1} S (never
/// forming the L x L inverse) and its Cholesky factor M = R^T R, T = R^{-1}.
/// Gamma must be symmetric PSD and sigma2 > 0.
OrthoTransform orthogonalize(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Gamma,
                             double sigma2);
OrthoTransform orthogonalize(const LatticeBasis& basis, const Eigen::MatrixXd& Gamma,
                             double sigma2);

/// Per-curve basis matrices for a dataset, deduplicated across curves that
/// share a time grid, together with the lattice matrix and the cumulative
/// identifiability transform applied so far.
///
/// Also caches S_i^T S_i, S_i^T y_i and y_i^T y_i, which is all the fitting
/// machinery needs per curve.
class CurveBases {
public:
    static CurveBases build(const Dataset& data, const BasisSpec& spec, int lattice_points = 365);

    int q() const { return spec_.q; }
    std::size_t n_curves() const { return group_of_.size(); }
    std::size_t n_groups() const { return groups_.size(); }
    std::size_t group_of(std::size_t i) const { return group_of_[i]; }
    long total_observations() const { return total_obs_; }

    const BasisSpec& spec() const { return spec_; }

    /// Effective basis matrix of curve i (shared within a group).
    const Eigen::MatrixXd& matrix(std::size_t i) const { return groups_[group_of_[i]].S; }
    const Eigen::MatrixXd& group_matrix(std::size_t g) const { return groups_[g].S; }
    /// S_i^T S_i under the current transform.
    const Eigen::MatrixXd& gram(std::size_t i) const { return groups_[group_of_[i]].gram; }
    const Eigen::MatrixXd& group_gram(std::size_t g) const { return groups_[g].gram; }
    Eigen::Index curve_length(std::size_t i) const { return groups_[group_of_[i]].S.rows(); }

    /// S_i^T y_i under the current transform.
    Eigen::VectorXd projected(std::size_t i) const { return proj_.col(static_cast<Eigen::Index>(i)); }
    double y_squared_norm(std::size_t i) const { return yty_[i]; }

    const Eigen::MatrixXd& lattice_matrix() const { return lattice_.values; }
    const Eigen::VectorXd& lattice_grid() const { return lattice_.points; }

    /// Post-multiplies every basis matrix by t.T and updates the caches; the
    /// cumulative product is kept for parameter snapshots.
    void apply_transform(const OrthoTransform& t);
    const Eigen::MatrixXd& cumulative_transform() const { return cumulative_; }

private:
    struct Group {
        Eigen::VectorXd times;
        Eigen::MatrixXd S;
        Eigen::MatrixXd gram;
    };

    BasisSpec spec_;
    std::vector<Group> groups_;
    std::vector<std::size_t> group_of_;
    Eigen::MatrixXd proj_;  // q x n, column i = S_i^T y_i
    std::vector<double> yty_;
    LatticeBasis lattice_;
    Eigen::MatrixXd cumulative_;
    long total_obs_ = 0;
};

}  // namespace sfclust
