#include "sfclust/metrics.hpp"

#include <algorithm>

#include "sfclust/errors.hpp"

namespace sfclust {

Eigen::MatrixXi contingency_table(const LabelField& a, const LabelField& b) {
    if (a.size() != b.size()) throw ValidationError("contingency_table: labelings differ in size");
    if (a.empty()) throw ValidationError("contingency_table: empty labelings");
    int ra = 0;
    int rb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < 0 || b[i] < 0) throw ValidationError("contingency_table: negative label");
        ra = std::max(ra, a[i]);
        rb = std::max(rb, b[i]);
    }
    Eigen::MatrixXi table = Eigen::MatrixXi::Zero(ra + 1, rb + 1);
    for (std::size_t i = 0; i < a.size(); ++i) ++table(a[i], b[i]);
    return table;
}

double adjusted_rand_index(const LabelField& a, const LabelField& b) {
    const Eigen::MatrixXi table = contingency_table(a, b);
    const long double n = static_cast<long double>(a.size());
    if (n < 2) return 1.0;
    const auto comb2 = [](long double x) { return x * (x - 1.0L) / 2.0L; };

    long double sum_cells = 0.0L;
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        for (Eigen::Index j = 0; j < table.cols(); ++j) sum_cells += comb2(table(i, j));
    long double sum_rows = 0.0L;
    for (Eigen::Index i = 0; i < table.rows(); ++i)
        sum_rows += comb2(static_cast<long double>(table.row(i).sum()));
    long double sum_cols = 0.0L;
    for (Eigen::Index j = 0; j < table.cols(); ++j)
        sum_cols += comb2(static_cast<long double>(table.col(j).sum()));

    const long double expected = sum_rows * sum_cols / comb2(n);
    const long double maximum = 0.5L * (sum_rows + sum_cols);
    if (maximum == expected) return 1.0;
    return static_cast<double>((sum_cells - expected) / (maximum - expected));
}

}  // namespace sfclust
