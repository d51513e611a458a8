#pragma once

#include <Eigen/Dense>

#include <optional>

namespace fkd {

/// Kernel density estimation settings shared by the dependence measures.
/// When no explicit bandwidth is given, Silverman's rule 1.06 * sd * n^(-1/5)
/// is applied per variable. grid_size controls the joint-density grid used by
/// the maximal-correlation estimate.
struct KdeParams {
    std::optional<double> bandwidth;
    Eigen::Index grid_size = 64;
};

/// One evaluation of a prediction vector against targets and a protected
/// attribute: accuracy (mae) plus three dependence measures.
struct MetricReport {
    double mae = 0.0;
    double gdp = 0.0;
    double hgr = 0.0;
    double pairwise_fairness = 0.0;
    Eigen::Index sample_count = 0;
};

/// Mean absolute error between targets and predictions.
double mae(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);

/// Generalized demographic parity: the average absolute deviation of the
/// kernel-weighted local prediction average from the global prediction mean,
/// evaluated at every sample of the protected attribute. Zero exactly for
/// constant predictions. O(n^2).
double gdp(const Eigen::VectorXd& yhat, const Eigen::VectorXd& p, const KdeParams& kde = {});

/// Joint probability mass function of two samples on a grid_size x grid_size
/// grid, estimated with a product-Gaussian kernel density and normalized to
/// sum one. Rows index the first variable's grid. Exposed for validation of
/// the maximal-correlation estimate.
Eigen::MatrixXd kde_joint_pmf(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                              const KdeParams& kde = {});

/// Hirschfeld-Gebelein-Renyi maximal-correlation estimate: the second-largest
/// singular value of the marginal-whitened joint pmf, clipped to [0, 1].
/// Both samples are rank-normalized first, which makes the estimate exactly
/// invariant to strictly monotone rescalings and keeps the density grid well
/// covered regardless of marginal shape. The default bandwidth is 0.8 times
/// the Silverman rule on the ranks; wider kernels smooth the diagonal ridge
/// of perfectly dependent samples below the expected near-one estimate. An
/// explicit bandwidth applies to the rank scale, which spans (0, 1).
double hgr_estimate(const Eigen::VectorXd& yhat, const Eigen::VectorXd& p,
                    const KdeParams& kde = {});

/// Pairwise fairness: over pairs with distinct targets, the absolute accuracy
/// difference between pairs ordered one way by the protected attribute and
/// pairs ordered the other way, where accuracy is the fraction of pairs whose
/// prediction ordering agrees with the target ordering. Ties in predictions
/// or in the protected attribute contribute half weight. O(n^2).
double pairwise_fairness(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                         const Eigen::VectorXd& p);

/// Scores one prediction vector with every metric at once.
MetricReport score_predictions(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                               const Eigen::VectorXd& p, const KdeParams& kde = {});

}  // namespace fkd
