#include "sfclust/basis.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "internal_linalg.hpp"
#include "sfclust/errors.hpp"

namespace sfclust {

std::string to_string(BasisKind kind) {
    return kind == BasisKind::bspline ? "bspline" : "fourier";
}

BasisKind basis_kind_from_string(const std::string& s) {
    if (s == "bspline") return BasisKind::bspline;
    if (s == "fourier") return BasisKind::fourier;
    throw ConfigError("unknown basis kind '" + s + "' (expected bspline or fourier)");
}

BasisSpec BasisSpec::bspline(int q, int order) {
    BasisSpec spec;
    spec.kind = BasisKind::bspline;
    spec.q = q;
    spec.order = order;
    spec.validate();
    return spec;
}

BasisSpec BasisSpec::bspline_with_knots(std::vector<double> knots, int order) {
    BasisSpec spec;
    spec.kind = BasisKind::bspline;
    spec.order = order;
    spec.q = order + static_cast<int>(knots.size());
    spec.interior_knots = std::move(knots);
    spec.validate();
    return spec;
}

BasisSpec BasisSpec::fourier(int q) {
    BasisSpec spec;
    spec.kind = BasisKind::fourier;
    spec.q = q;
    spec.validate();
    return spec;
}

void BasisSpec::validate() const {
    if (q < 2) throw ConfigError("basis dimension q must be >= 2");
    if (kind == BasisKind::fourier) {
        if (q % 2 == 0) throw ConfigError("fourier basis needs odd q (constant + sin/cos pairs)");
        return;
    }
    if (order < 1) throw ConfigError("bspline order must be >= 1");
    if (q < order) throw ConfigError("bspline needs q >= order");
    if (!interior_knots.empty()) {
        if (static_cast<int>(interior_knots.size()) != q - order)
            throw ConfigError("bspline needs exactly q - order interior knots");
        double prev = 0.0;
        for (double t : interior_knots) {
            if (!(t > prev && t < 1.0))
                throw ConfigError("interior knots must be strictly increasing inside (0, 1)");
            prev = t;
        }
    }
}

std::vector<double> BasisSpec::resolved_interior_knots() const {
    if (kind != BasisKind::bspline) return {};
    if (!interior_knots.empty()) return interior_knots;
    const int n_int = q - order;
    std::vector<double> knots(static_cast<std::size_t>(n_int));
    for (int j = 1; j <= n_int; ++j)
        knots[static_cast<std::size_t>(j - 1)] = static_cast<double>(j) / (n_int + 1);
    return knots;
}

std::vector<double> BasisSpec::knot_vector() const {
    const auto interior = resolved_interior_knots();
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(2 * order) + interior.size());
    knots.insert(knots.end(), static_cast<std::size_t>(order), 0.0);
    knots.insert(knots.end(), interior.begin(), interior.end());
    knots.insert(knots.end(), static_cast<std::size_t>(order), 1.0);
    return knots;
}

namespace {

// Nonzero B-spline basis values at t by the Cox-de Boor triangular scheme.
// `span` is the knot interval index with knots[span] <= t < knots[span+1].
void bspline_row(const std::vector<double>& knots, int order, int span, double t,
                 Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
    const int degree = order - 1;
    std::vector<double> values(static_cast<std::size_t>(order), 0.0);
    std::vector<double> left(static_cast<std::size_t>(order), 0.0);
    std::vector<double> right(static_cast<std::size_t>(order), 0.0);
    values[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[static_cast<std::size_t>(j)] = t - knots[static_cast<std::size_t>(span + 1 - j)];
        right[static_cast<std::size_t>(j)] = knots[static_cast<std::size_t>(span + j)] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[static_cast<std::size_t>(r + 1)] +
                                 left[static_cast<std::size_t>(j - r)];
            const double temp = values[static_cast<std::size_t>(r)] / denom;
            values[static_cast<std::size_t>(r)] =
                saved + right[static_cast<std::size_t>(r + 1)] * temp;
            saved = left[static_cast<std::size_t>(j - r)] * temp;
        }
        values[static_cast<std::size_t>(j)] = saved;
    }
    for (int j = 0; j <= degree; ++j)
        row[span - degree + j] = values[static_cast<std::size_t>(j)];
}

int find_span(const std::vector<double>& knots, int order, int q, double t) {
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    int span = static_cast<int>(it - knots.begin()) - 1;
    return std::clamp(span, order - 1, q - 1);
}

}  // namespace

Eigen::MatrixXd evaluate_basis(const BasisSpec& spec, const Eigen::VectorXd& times) {
    spec.validate();
    for (Eigen::Index j = 0; j < times.size(); ++j) {
        if (!(times[j] >= 0.0 && times[j] <= 1.0))
            throw ValidationError("basis evaluation time outside [0, 1]");
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(times.size(), spec.q);
    if (spec.kind == BasisKind::fourier) {
        const int pairs = (spec.q - 1) / 2;
        const double sqrt2 = std::sqrt(2.0);
        for (Eigen::Index j = 0; j < times.size(); ++j) {
            out(j, 0) = 1.0;
            for (int m = 1; m <= pairs; ++m) {
                const double w = 2.0 * std::numbers::pi * m * times[j];
                out(j, 2 * m - 1) = sqrt2 * std::sin(w);
                out(j, 2 * m) = sqrt2 * std::cos(w);
            }
        }
        return out;
    }
    const auto knots = spec.knot_vector();
    for (Eigen::Index j = 0; j < times.size(); ++j) {
        const int span = find_span(knots, spec.order, spec.q, times[j]);
        bspline_row(knots, spec.order, span, times[j], out.row(j));
    }
    return out;
}

LatticeBasis build_lattice_basis(const BasisSpec& spec, int L) {
    spec.validate();
    if (L < spec.q)
        throw ConfigError("lattice size L = " + std::to_string(L) +
                          " is smaller than basis dimension q = " + std::to_string(spec.q));
    LatticeBasis basis;
    basis.points.resize(L);
    for (int l = 1; l <= L; ++l) basis.points[l - 1] = (l - 0.5) / L;
    basis.values = evaluate_basis(spec, basis.points);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis.values);
    if (qr.rank() < spec.q)
        throw NumericError("degenerate basis: lattice matrix has rank " +
                           std::to_string(qr.rank()) + " < q = " + std::to_string(spec.q));
    return basis;
}

OrthoTransform orthogonalize(const Eigen::MatrixXd& S, const Eigen::MatrixXd& Gamma,
                             double sigma2) {
    if (!(sigma2 > 0.0)) throw NumericError("orthogonalize: sigma2 must be positive");
    const Eigen::Index q = S.cols();
    if (Gamma.rows() != q || Gamma.cols() != q)
        throw NumericError("orthogonalize: Gamma dimension mismatch");
    const Eigen::MatrixXd G = detail::sym_sqrt(Gamma, "Gamma");
    const Eigen::MatrixXd A = S.transpose() * S;
    // M = S^T Sigma^{-1} S via Woodbury on the q x q system
    // K = sigma2 I + G A G,  M = (A - (A G) K^{-1} (G A)) / sigma2
    Eigen::MatrixXd K = sigma2 * Eigen::MatrixXd::Identity(q, q) + G * A * G;
    Eigen::LLT<Eigen::MatrixXd> kllt(detail::symmetrize(K));
    if (kllt.info() != Eigen::Success)
        throw ConditioningError("orthogonalize: inner system not positive definite");
    const Eigen::MatrixXd AG = A * G;
    Eigen::MatrixXd M = (A - AG * kllt.solve(AG.transpose())) / sigma2;
    M = detail::symmetrize(M);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M);
    const double min_eig = eig.eigenvalues().minCoeff();
    const double max_eig = eig.eigenvalues().maxCoeff();
    if (!(min_eig > 1e-13 * std::max(1.0, max_eig)))
        throw ConditioningError("orthogonalize: M numerically singular (smallest eigenvalue " +
                                std::to_string(min_eig) + ")");
    Eigen::LLT<Eigen::MatrixXd> mllt(M);
    if (mllt.info() != Eigen::Success)
        throw ConditioningError("orthogonalize: Cholesky of M failed");
    OrthoTransform t;
    t.T_inv = mllt.matrixU();  // M = R^T R
    t.T = t.T_inv.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(q, q));
    return t;
}

OrthoTransform orthogonalize(const LatticeBasis& basis, const Eigen::MatrixXd& Gamma,
                             double sigma2) {
    return orthogonalize(basis.values, Gamma, sigma2);
}

CurveBases CurveBases::build(const Dataset& data, const BasisSpec& spec, int lattice_points) {
    spec.validate();
    CurveBases bases;
    bases.spec_ = spec;
    bases.lattice_ = build_lattice_basis(spec, lattice_points);
    bases.cumulative_ = Eigen::MatrixXd::Identity(spec.q, spec.q);
    const std::size_t n = data.curves.size();
    bases.group_of_.resize(n);
    bases.proj_.resize(spec.q, static_cast<Eigen::Index>(n));
    bases.yty_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const AnnualCurve& curve = data.curves[i];
        if (curve.times.size() < spec.q)
            throw ValidationError("site " + curve.site_id + ": curve has " +
                                  std::to_string(curve.times.size()) +
                                  " points, fewer than basis dimension q = " +
                                  std::to_string(spec.q));
        std::size_t g = bases.groups_.size();
        for (std::size_t j = 0; j < bases.groups_.size(); ++j) {
            const auto& gt = bases.groups_[j].times;
            if (gt.size() == curve.times.size() && (gt.array() == curve.times.array()).all()) {
                g = j;
                break;
            }
        }
        if (g == bases.groups_.size()) {
            Group group;
            group.times = curve.times;
            group.S = evaluate_basis(spec, curve.times);
            group.gram = group.S.transpose() * group.S;
            bases.groups_.push_back(std::move(group));
        }
        bases.group_of_[i] = g;
        bases.proj_.col(static_cast<Eigen::Index>(i)) =
            bases.groups_[g].S.transpose() * curve.values;
        bases.yty_[i] = curve.values.squaredNorm();
        bases.total_obs_ += curve.times.size();
    }
    return bases;
}

void CurveBases::apply_transform(const OrthoTransform& t) {
    for (auto& group : groups_) {
        group.S = group.S * t.T;
        group.gram = detail::symmetrize(t.T.transpose() * group.gram * t.T);
    }
    lattice_.values = lattice_.values * t.T;
    proj_ = t.T.transpose() * proj_;
    cumulative_ = cumulative_ * t.T;
}

}  // namespace sfclust
