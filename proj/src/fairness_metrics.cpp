#include "fkd/fairness_metrics.hpp"

#include "fkd/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace fkd {

namespace {

void check_equal_lengths(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* what) {
    if (a.size() != b.size()) {
        throw ValidationError(std::string(what) + ": vector lengths " + std::to_string(a.size()) +
                              " and " + std::to_string(b.size()) + " differ");
    }
    if (!a.allFinite() || !b.allFinite()) {
        throw ValidationError(std::string(what) + ": non-finite input entries");
    }
}

bool is_constant(const Eigen::VectorXd& v) { return v.maxCoeff() == v.minCoeff(); }

double sample_std(const Eigen::VectorXd& v) {
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

double bandwidth_for(const Eigen::VectorXd& v, const KdeParams& kde, const char* what) {
    if (kde.bandwidth) {
        if (!(*kde.bandwidth > 0.0) || !std::isfinite(*kde.bandwidth)) {
            throw ValidationError(std::string(what) + ": bandwidth must be positive and finite");
        }
        return *kde.bandwidth;
    }
    const double sd = sample_std(v);
    return 1.06 * sd * std::pow(static_cast<double>(v.size()), -0.2);
}

// Average ranks scaled into (0, 1); ties share their mean rank.
Eigen::VectorXd normalized_ranks(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && v[order[static_cast<std::size_t>(j + 1)]] ==
                                v[order[static_cast<std::size_t>(i)]]) {
            ++j;
        }
        const double shared = 0.5 * static_cast<double>(i + j) + 0.5;
        for (Eigen::Index k = i; k <= j; ++k) {
            ranks[order[static_cast<std::size_t>(k)]] = shared / static_cast<double>(n);
        }
        i = j + 1;
    }
    return ranks;
}

// Gaussian kernel weights of every sample at every grid node, up to a common
// normalization constant that cancels in probability ratios.
Eigen::MatrixXd grid_weights(const Eigen::VectorXd& v, double bandwidth, Eigen::Index grid_size) {
    const double mean = v.mean();
    const double spread = std::sqrt(sample_std(v) * sample_std(v) + bandwidth * bandwidth);
    const double lo = mean - 4.0 * spread;
    const double hi = mean + 4.0 * spread;
    Eigen::MatrixXd w(grid_size, v.size());
    for (Eigen::Index a = 0; a < grid_size; ++a) {
        const double z =
            lo + (hi - lo) * static_cast<double>(a) / static_cast<double>(grid_size - 1);
        w.row(a) = (-0.5 * ((v.array() - z) / bandwidth).square()).exp();
    }
    return w;
}

}  // namespace

double mae(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    check_equal_lengths(y, yhat, "mae");
    if (y.size() == 0) throw ValidationError("mae: empty vectors");
    return (y - yhat).cwiseAbs().mean();
}

double gdp(const Eigen::VectorXd& yhat, const Eigen::VectorXd& p, const KdeParams& kde) {
    check_equal_lengths(yhat, p, "gdp");
    const Eigen::Index n = yhat.size();
    if (n < 2) throw ValidationError("gdp: at least two samples required");
    if (is_constant(p)) {
        throw ValidationError("gdp: protected attribute is constant, local averages are undefined");
    }
    if (is_constant(yhat)) return 0.0;

    const double bandwidth = bandwidth_for(p, kde, "gdp");
    const double global_mean = yhat.mean();
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::ArrayXd w = (-0.5 * ((p.array() - p[j]) / bandwidth).square()).exp();
        const double local_mean = (w * yhat.array()).sum() / w.sum();
        total += std::abs(local_mean - global_mean);
    }
    return total / static_cast<double>(n);
}

Eigen::MatrixXd kde_joint_pmf(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const KdeParams& kde) {
    check_equal_lengths(x, y, "kde_joint_pmf");
    if (x.size() < 2) throw ValidationError("kde_joint_pmf: at least two samples required");
    if (kde.grid_size < 8) throw ValidationError("kde_joint_pmf: grid size below 8");
    if (is_constant(x) || is_constant(y)) {
        throw ValidationError("kde_joint_pmf: constant input, density estimate is degenerate");
    }
    const Eigen::MatrixXd wx = grid_weights(x, bandwidth_for(x, kde, "kde_joint_pmf"),
                                            kde.grid_size);
    const Eigen::MatrixXd wy = grid_weights(y, bandwidth_for(y, kde, "kde_joint_pmf"),
                                            kde.grid_size);
    Eigen::MatrixXd joint = wx * wy.transpose();
    const double total = joint.sum();
    if (!(total > 0.0)) throw ValidationError("kde_joint_pmf: density mass underflowed to zero");
    joint /= total;
    return joint;
}

double hgr_estimate(const Eigen::VectorXd& yhat, const Eigen::VectorXd& p, const KdeParams& kde) {
    check_equal_lengths(yhat, p, "hgr_estimate");
    if (yhat.size() < 10) throw ValidationError("hgr_estimate: at least ten samples required");
    if (is_constant(yhat) || is_constant(p)) {
        throw ValidationError("hgr_estimate: constant input has no maximal correlation");
    }
    const Eigen::VectorXd ranked_yhat = normalized_ranks(yhat);
    const Eigen::VectorXd ranked_p = normalized_ranks(p);
    KdeParams rank_kde = kde;
    if (!rank_kde.bandwidth) {
        // Sharper than the plain rule; see the header note on ridge smoothing.
        rank_kde.bandwidth = 0.8 * std::min(bandwidth_for(ranked_yhat, kde, "hgr_estimate"),
                                            bandwidth_for(ranked_p, kde, "hgr_estimate"));
    }
    Eigen::MatrixXd q = kde_joint_pmf(ranked_yhat, ranked_p, rank_kde);
    const Eigen::VectorXd row_marginal = q.rowwise().sum();
    const Eigen::VectorXd col_marginal = q.colwise().sum();
    // Whiten by the marginals; empty rows or columns carry no mass and are
    // zeroed rather than divided.
    Eigen::VectorXd row_scale(row_marginal.size());
    Eigen::VectorXd col_scale(col_marginal.size());
    for (Eigen::Index i = 0; i < row_marginal.size(); ++i) {
        row_scale[i] = row_marginal[i] > 0.0 ? 1.0 / std::sqrt(row_marginal[i]) : 0.0;
    }
    for (Eigen::Index i = 0; i < col_marginal.size(); ++i) {
        col_scale[i] = col_marginal[i] > 0.0 ? 1.0 / std::sqrt(col_marginal[i]) : 0.0;
    }
    const Eigen::MatrixXd whitened = row_scale.asDiagonal() * q * col_scale.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(whitened);
    if (svd.singularValues().size() < 2) throw ValidationError("hgr_estimate: grid too small");
    return std::clamp(svd.singularValues()[1], 0.0, 1.0);
}

double pairwise_fairness(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                         const Eigen::VectorXd& p) {
    check_equal_lengths(y, yhat, "pairwise_fairness");
    check_equal_lengths(y, p, "pairwise_fairness");
    const Eigen::Index n = y.size();
    if (n < 2) throw ValidationError("pairwise_fairness: at least two samples required");

    double weight_a = 0.0;
    double weight_b = 0.0;
    double correct_a = 0.0;
    double correct_b = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (y[i] == y[j]) continue;
            // Orient the pair so the first element has the larger target.
            const Eigen::Index hi = y[i] > y[j] ? i : j;
            const Eigen::Index lo = y[i] > y[j] ? j : i;
            const double concordant =
                yhat[hi] > yhat[lo] ? 1.0 : (yhat[hi] == yhat[lo] ? 0.5 : 0.0);
            if (p[hi] > p[lo]) {
                weight_a += 1.0;
                correct_a += concordant;
            } else if (p[hi] < p[lo]) {
                weight_b += 1.0;
                correct_b += concordant;
            } else {
                weight_a += 0.5;
                weight_b += 0.5;
                correct_a += 0.5 * concordant;
                correct_b += 0.5 * concordant;
            }
        }
    }
    if (weight_a == 0.0 || weight_b == 0.0) {
        throw ValidationError(
            "pairwise_fairness: one protected ordering has no qualifying pairs");
    }
    return std::abs(correct_a / weight_a - correct_b / weight_b);
}

MetricReport score_predictions(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                               const Eigen::VectorXd& p, const KdeParams& kde) {
    MetricReport report;
    report.mae = mae(y, yhat);
    report.gdp = gdp(yhat, p, kde);
    report.hgr = is_constant(yhat) ? 0.0 : hgr_estimate(yhat, p, kde);
    report.pairwise_fairness = pairwise_fairness(y, yhat, p);
    report.sample_count = y.size();
    return report;
}

}  // namespace fkd
