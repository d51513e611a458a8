// Release gate for the library: one check per release criterion, one
// PASS/FAIL line each, nonzero exit when anything fails. Each check builds
// its own instances from fixed seeds so reruns are exactly reproducible.

#include "fkd/common.hpp"
#include "fkd/dataset.hpp"
#include "fkd/errors.hpp"
#include "fkd/experiment.hpp"
#include "fkd/fair_decomposition.hpp"
#include "fkd/fairness_metrics.hpp"
#include "fkd/kernels.hpp"
#include "fkd/nystroem.hpp"
#include "fkd/regressors.hpp"
#include "fkd/serialization.hpp"

#include "test_support.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using fkd::testing::anisotropic_features;
using fkd::testing::make_synthetic;
using fkd::testing::random_features;
using fkd::testing::random_vector;
using fkd::testing::relative_frobenius;
using fkd::testing::write_synthetic_csv;

namespace {

struct Outcome {
    bool ok = true;
    std::string note;
};

Outcome fail(const std::string& detail) { return {false, detail}; }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Shared instance grid for the first three checks: 50 random decompositions
// spanning sizes, widths, iteration counts, and attribute counts, each run
// both through the kernel-space route and the factor-space oracle.

struct GridCase {
    int index = 0;
    Eigen::Index n = 0;
    double ridge_alpha = 0.0;
    fkd::ProtectedAttributes attrs;
    std::vector<fkd::DecompositionResult> checkpoints;
    fkd::OracleDecompositionResult oracle;
    int completed = 0;
};

struct GridData {
    std::vector<GridCase> cases;
    std::string error;
};

const GridData& grid() {
    static const GridData data = [] {
        GridData out;
        std::mt19937_64 pick(20260823);
        const Eigen::Index ns[] = {5, 20, 50};
        const Eigen::Index ds[] = {2, 5};
        const int ms[] = {1, 3, 10};
        const Eigen::Index ls[] = {1, 2};
        const double gammas[] = {0.05, 0.5};
        const double alphas[] = {0.05, 0.1};
        for (int t = 0; t < 50; ++t) {
            const Eigen::Index n = ns[pick() % 3];
            const Eigen::Index d = ds[pick() % 2];
            const int m = ms[pick() % 3];
            const Eigen::Index l = ls[pick() % 2];
            const double gamma = gammas[pick() % 2];
            const double alpha = alphas[pick() % 2];

            const Eigen::MatrixXd x = anisotropic_features(n, d, 7000 + t);
            Eigen::MatrixXd p = anisotropic_features(n, l, 8000 + t);
            p.col(0) += 0.8 * x.col(0);
            if (l > 1) p.col(1) -= 0.5 * x.col(1);

            fkd::DecompositionParams params;
            params.iterations = m;
            params.ridge_alpha = alpha;
            params.stop_on_degenerate = true;
            params.max_normalization = 1e3;

            std::vector<int> all_counts;
            for (int i = 0; i <= m; ++i) all_counts.push_back(i);

            try {
                const fkd::KernelMatrix kernel = fkd::rbf_kernel(x, {gamma});
                fkd::ProtectedAttributes attrs(p);
                // The wide-bandwidth instances have spectra spanning eleven
                // decades; the oracle factor must keep that tail, so its
                // eigenvalue clamp is lowered from the default to 1e-13.
                GridCase item{t,
                              n,
                              alpha,
                              attrs,
                              fkd::decompose_checkpoints(kernel, attrs, params, all_counts),
                              fkd::oracle_decompose(kernel, attrs, params, 1e-13),
                              0};
                item.completed = item.checkpoints.back().transform.iterations();
                out.cases.push_back(std::move(item));
            } catch (const fkd::Error& e) {
                out.error = "instance " + std::to_string(t) + ": " + e.what();
                return out;
            }
        }
        return out;
    }();
    return data;
}

Outcome check_route_agreement() {
    if (!grid().error.empty()) return fail(grid().error);
    double worst = 0.0;
    int worst_case = -1;
    for (const GridCase& item : grid().cases) {
        if (item.completed != item.oracle.completed_iterations) {
            return fail("instance " + std::to_string(item.index) +
                        ": routes stopped at different iteration counts (" +
                        std::to_string(item.completed) + " vs " +
                        std::to_string(item.oracle.completed_iterations) + ")");
        }
        const double rel = relative_frobenius(item.checkpoints.back().kernel.data(),
                                              item.oracle.kernel.data());
        if (rel > worst) {
            worst = rel;
            worst_case = item.index;
        }
    }
    if (worst > 1e-8) {
        return fail("worst relative divergence " + fmt(worst) + " (instance " +
                    std::to_string(worst_case) + ") exceeds 1e-8");
    }
    return {true, "50 instances, worst divergence " + fmt(worst)};
}

Outcome check_psd_preservation() {
    if (!grid().error.empty()) return fail(grid().error);
    double worst = 0.0;
    for (const GridCase& item : grid().cases) {
        for (const fkd::DecompositionResult& step : item.checkpoints) {
            const auto [min_eig, max_eig] = step.kernel.eigenvalue_range();
            const double floor = -1e-8 * std::max(max_eig, 0.0);
            if (min_eig < floor) {
                return fail("instance " + std::to_string(item.index) + " iteration " +
                            std::to_string(step.transform.iterations()) + ": min eigenvalue " +
                            fmt(min_eig) + " below " + fmt(floor));
            }
            worst = std::min(worst, max_eig > 0.0 ? min_eig / max_eig : 0.0);
        }
    }
    return {true, "worst scaled min eigenvalue " + fmt(worst)};
}

Outcome check_removal_and_orthogonality() {
    if (!grid().error.empty()) return fail(grid().error);
    double worst_residual = 0.0;
    double worst_dot = 0.0;
    for (const GridCase& item : grid().cases) {
        const double p_norm = std::sqrt(static_cast<double>(item.n));
        for (int i = 1; i <= item.completed; ++i) {
            const Eigen::VectorXd residual = fkd::residual_protected_norm(
                item.checkpoints[static_cast<std::size_t>(i - 1)].kernel,
                item.checkpoints[static_cast<std::size_t>(i)].kernel, item.attrs,
                item.ridge_alpha);
            const double scaled = residual.maxCoeff() / p_norm;
            worst_residual = std::max(worst_residual, scaled);
            if (scaled > 1e-6) {
                return fail("instance " + std::to_string(item.index) + " iteration " +
                            std::to_string(i) + ": protected residual " + fmt(scaled) +
                            " of the attribute norm exceeds 1e-6");
            }
        }
        const auto& ws = item.oracle.feature_space.w_history;
        for (std::size_t i = 0; i < ws.size(); ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                for (Eigen::Index a = 0; a < ws[i].cols(); ++a) {
                    for (Eigen::Index b = 0; b < ws[j].cols(); ++b) {
                        const double denom = ws[i].col(a).norm() * ws[j].col(b).norm();
                        if (denom == 0.0) continue;
                        const double dot =
                            std::abs(ws[i].col(a).dot(ws[j].col(b))) / denom;
                        worst_dot = std::max(worst_dot, dot);
                        if (dot > 1e-8) {
                            return fail("instance " + std::to_string(item.index) +
                                        ": directions of iterations " + std::to_string(j + 1) +
                                        " and " + std::to_string(i + 1) +
                                        " have scaled inner product " + fmt(dot));
                        }
                    }
                }
            }
        }
    }
    return {true,
            "worst residual " + fmt(worst_residual) + ", worst direction overlap " +
                fmt(worst_dot)};
}

double ridge_r2(const Eigen::MatrixXd& k, const Eigen::VectorXd& target, double alpha) {
    Eigen::MatrixXd shifted = k;
    shifted.diagonal().array() += alpha;
    const Eigen::VectorXd coef = shifted.llt().solve(target);
    const Eigen::VectorXd pred = k * coef;
    const double centered = (target.array() - target.mean()).matrix().squaredNorm();
    return 1.0 - (target - pred).squaredNorm() / centered;
}

Outcome check_information_removal() {
    const fkd::testing::SyntheticData data = make_synthetic(300, 1, 404);
    const fkd::KernelMatrix kernel = fkd::rbf_kernel(data.x, {0.2});
    const fkd::ProtectedAttributes attrs(data.p);
    fkd::DecompositionParams params;
    params.iterations = 20;
    params.ridge_alpha = 0.1;
    params.lazy_updates = true;
    params.stop_on_degenerate = true;
    const std::vector<int> counts = {0, 20};
    const auto results = fkd::decompose_checkpoints(kernel, attrs, params, counts);

    const Eigen::VectorXd p_col = data.p.col(0);
    const double r2_before = ridge_r2(results[0].kernel.data(), p_col, params.ridge_alpha);
    const double r2_after = ridge_r2(results[1].kernel.data(), p_col, params.ridge_alpha);
    if (!(r2_before > 0.5)) {
        return fail("initial kernel only reaches R^2 " + fmt(r2_before) +
                    " on the protected attribute, expected > 0.5");
    }
    if (!(r2_after < 0.05)) {
        return fail("after 20 iterations R^2 is still " + fmt(r2_after) + ", expected < 0.05");
    }
    return {true, "R^2 " + fmt(r2_before) + " -> " + fmt(r2_after)};
}

Outcome check_landmark_inverse() {
    const double fractions[] = {0.1, 0.25, 0.5, 1.0};
    double mean_err[4] = {0.0, 0.0, 0.0, 0.0};
    double worst_full = 0.0;
    const double alpha = 0.1;
    for (int seed = 0; seed < 20; ++seed) {
        const Eigen::MatrixXd x = random_features(200, 5, 900 + seed);
        const fkd::KernelMatrix kernel = fkd::rbf_kernel(x, {0.05});
        const Eigen::VectorXd rhs = random_vector(200, 940 + seed);
        Eigen::MatrixXd shifted = kernel.data();
        shifted.diagonal().array() += alpha;
        const Eigen::VectorXd exact = shifted.llt().solve(rhs);
        for (int f = 0; f < 4; ++f) {
            fkd::NystroemParams np;
            np.landmark_count = static_cast<Eigen::Index>(std::llround(fractions[f] * 200));
            np.seed = static_cast<std::uint64_t>(10000 + seed);
            const Eigen::VectorXd approx = fkd::nystroem_inverse(kernel, alpha, np) * rhs;
            const double err = (approx - exact).norm() / exact.norm();
            mean_err[f] += err / 20.0;
            if (f == 3) worst_full = std::max(worst_full, err);
        }
    }
    if (worst_full > 1e-6) {
        return fail("full landmark coverage deviates from the exact inverse by " +
                    fmt(worst_full));
    }
    for (int f = 1; f < 4; ++f) {
        if (mean_err[f] > mean_err[f - 1]) {
            return fail("mean error rises from " + fmt(mean_err[f - 1]) + " at fraction " +
                        fmt(fractions[f - 1]) + " to " + fmt(mean_err[f]) + " at fraction " +
                        fmt(fractions[f]));
        }
    }
    return {true,
            "mean errors " + fmt(mean_err[0]) + " / " + fmt(mean_err[1]) + " / " +
                fmt(mean_err[2]) + " / " + fmt(mean_err[3])};
}

Outcome check_svr_optimality() {
    double worst_gap = 0.0;
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index n = 8 + 2 * t;
        const Eigen::MatrixXd x = anisotropic_features(n, 4, 300 + t);
        const Eigen::VectorXd y = (1.3 * x.col(0).array()).sin().matrix() + 0.4 * x.col(1) +
                                  0.05 * random_vector(n, 350 + t);
        const fkd::KernelMatrix kernel = fkd::rbf_kernel(x, {0.4});
        // Solve one decade past the certificate being verified so the
        // stopping rule is not what decides the check.
        fkd::SvrParams sharp;
        sharp.tol = 1e-7;
        const fkd::SvrModel model = fkd::svr_fit(kernel, y, sharp);
        const fkd::SvrObjectives obj = fkd::svr_objectives(model, kernel, y);
        const double bound = 1e-6 * (1.0 + std::abs(obj.dual));
        worst_gap = std::max(worst_gap, obj.gap / bound);
        if (obj.gap > bound) {
            return fail("instance " + std::to_string(t) + " (n=" + std::to_string(n) +
                        "): duality gap " + fmt(obj.gap) + " exceeds " + fmt(bound));
        }
    }

    const Eigen::MatrixXd x = random_features(25, 3, 390);
    const fkd::KernelMatrix kernel = fkd::rbf_kernel(x, {0.3});
    const fkd::SvrModel constant_fit =
        fkd::svr_fit(kernel, Eigen::VectorXd::Constant(25, 0.7), {});
    if (!constant_fit.support_indices.empty()) {
        return fail("constant targets produced " +
                    std::to_string(constant_fit.support_indices.size()) + " support vectors");
    }
    fkd::SvrParams wide;
    wide.epsilon = 10.0;
    const fkd::SvrModel wide_fit = fkd::svr_fit(kernel, random_vector(25, 391), wide);
    if (!wide_fit.support_indices.empty()) {
        return fail("a tube wider than the target range produced " +
                    std::to_string(wide_fit.support_indices.size()) + " support vectors");
    }
    return {true, "worst gap at " + fmt(worst_gap) + " of the allowed bound"};
}

Outcome check_metric_calibration() {
    const Eigen::VectorXd p_const = random_vector(400, 700);
    const Eigen::VectorXd y_const = random_vector(400, 701);
    const Eigen::VectorXd yhat_const = Eigen::VectorXd::Constant(400, 0.3);
    if (fkd::gdp(yhat_const, p_const) != 0.0) {
        return fail("constant predictions give nonzero demographic parity deviation");
    }
    if (fkd::pairwise_fairness(y_const, yhat_const, p_const) != 0.0) {
        return fail("constant predictions give unequal pairwise group accuracies");
    }

    double hgr_mean = 0.0, gdp_ratio_mean = 0.0, pf_mean = 0.0;
    for (int s = 0; s < 20; ++s) {
        const Eigen::VectorXd yhat = random_vector(2000, 7000 + s);
        const Eigen::VectorXd p = random_vector(2000, 7100 + s);
        const Eigen::VectorXd y = random_vector(2000, 7200 + s);
        hgr_mean += fkd::hgr_estimate(yhat, p) / 20.0;
        const double sd = std::sqrt((yhat.array() - yhat.mean()).square().sum() / 1999.0);
        gdp_ratio_mean += fkd::gdp(yhat, p) / sd / 20.0;
        pf_mean += fkd::pairwise_fairness(y, yhat, p) / 20.0;
    }
    if (hgr_mean > 0.15) {
        return fail("independent pairs give mean maximal correlation " + fmt(hgr_mean));
    }
    if (gdp_ratio_mean > 0.05) {
        return fail("independent pairs give mean scaled parity deviation " + fmt(gdp_ratio_mean));
    }
    if (pf_mean > 0.05) {
        return fail("independent pairs give mean pairwise gap " + fmt(pf_mean));
    }

    double worst_self = 1.0;
    for (int s = 0; s < 3; ++s) {
        const Eigen::VectorXd p = random_vector(2000, 7300 + s);
        worst_self = std::min(worst_self, fkd::hgr_estimate(p, p));
    }
    if (worst_self < 0.95) {
        return fail("identical prediction and attribute only reach maximal correlation " +
                    fmt(worst_self));
    }
    return {true,
            "null means " + fmt(hgr_mean) + " / " + fmt(gdp_ratio_mean) + " / " + fmt(pf_mean) +
                ", self dependence " + fmt(worst_self)};
}

std::vector<double> aggregate_series(const fkd::ExperimentResult& result,
                                     const std::string& metric) {
    std::vector<double> series;
    for (const auto& row : result.aggregates) {
        for (const auto& [name, summary] : row.metrics) {
            if (name == metric) series.push_back(summary.mean);
        }
    }
    return series;
}

// At most one inversion against the direction, and that inversion no larger
// than 10% of the preceding value.
std::string check_trend(const std::vector<double>& series, bool non_increasing,
                        const std::string& label) {
    int inversions = 0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double prev = series[i - 1];
        const double cur = series[i];
        const bool wrong_way = non_increasing ? cur > prev : cur < prev;
        if (!wrong_way) continue;
        ++inversions;
        if (inversions > 1) return label + " shows more than one trend inversion";
        if (std::abs(cur - prev) > 0.10 * std::abs(prev)) {
            return label + " inverts by " + fmt(std::abs(cur - prev)) + " (more than 10% of " +
                   fmt(std::abs(prev)) + ")";
        }
    }
    return "";
}

std::string series_text(const std::vector<double>& series) {
    std::string text;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (i > 0) text += " ";
        text += fmt(series[i]);
    }
    return text;
}

Outcome check_tradeoff_trend() {
    fkd::ExperimentConfig config;
    std::string cleanup_csv;
    bool synthetic = false;

    std::string crimes_path;
    if (const char* env = std::getenv("FKD_CRIMES_CSV")) crimes_path = env;
    if (crimes_path.empty() && std::filesystem::exists("data/communities_crimes.csv")) {
        crimes_path = "data/communities_crimes.csv";
    }

    if (!crimes_path.empty()) {
        config.dataset.path = crimes_path;
        const char* target = std::getenv("FKD_CRIMES_TARGET");
        const char* attr = std::getenv("FKD_CRIMES_PROTECTED");
        config.dataset.target_column = target ? target : "ViolentCrimesPerPop";
        config.dataset.protected_columns = {attr ? attr : "racepctblack"};
        config.kernel.gamma = 0.05;
    } else {
        synthetic = true;
        cleanup_csv = "acceptance_tradeoff.csv";
        write_synthetic_csv(make_synthetic(300, 1, 808), cleanup_csv);
        config.dataset.path = cleanup_csv;
        config.dataset.target_column = "y";
        config.dataset.protected_columns = {"p0"};
        config.kernel.gamma = 0.2;
    }
    config.model.kind = fkd::ModelKind::svr;
    config.model.svr_epsilon = 0.01;
    config.model.svr_cost = 0.75;
    config.decomposition.ridge_alpha = 0.05;
    config.decomposition.m_values = {0, 5, 30, 45, 60, 80};
    config.cv.k = 5;
    config.cv.seed = 33;
    config.threads = 2;

    Outcome outcome;
    try {
        const fkd::ExperimentResult result = fkd::run_experiment(config);
        fkd::ExperimentConfig dummy_config = config;
        dummy_config.model.kind = fkd::ModelKind::dummy;
        dummy_config.decomposition.m_values = {0};
        const fkd::ExperimentResult dummy_result = fkd::run_experiment(dummy_config);

        const std::vector<double> gdp_series = aggregate_series(result, "gdp");
        const std::vector<double> mae_series = aggregate_series(result, "mae");
        const double dummy_mae = aggregate_series(dummy_result, "mae").at(0);

        std::string problem = check_trend(gdp_series, true, "demographic parity deviation");
        if (problem.empty()) problem = check_trend(mae_series, false, "prediction error");
        if (!problem.empty()) {
            outcome = fail(problem + "; gdp: " + series_text(gdp_series) +
                           "; mae: " + series_text(mae_series));
        } else if (!(mae_series.front() <= 0.8 * dummy_mae)) {
            outcome = fail("baseline fit " + fmt(mae_series.front()) +
                           " does not beat the mean predictor " + fmt(dummy_mae) +
                           " by at least 20%");
        } else {
            outcome = {true,
                       std::string(synthetic ? "synthetic substitute; " : "survey data; ") +
                           "gdp " + series_text(gdp_series) + "; mae " +
                           series_text(mae_series) + "; mean predictor " + fmt(dummy_mae)};
        }
    } catch (const fkd::Error& e) {
        outcome = fail(e.what());
    }
    if (!cleanup_csv.empty()) std::remove(cleanup_csv.c_str());
    return outcome;
}

Outcome check_multi_attribute() {
    const std::string csv = "acceptance_multi.csv";
    write_synthetic_csv(make_synthetic(250, 2, 909), csv);
    Outcome outcome;
    try {
        fkd::ExperimentConfig config;
        config.dataset.path = csv;
        config.dataset.target_column = "y";
        config.dataset.protected_columns = {"p0", "p1"};
        config.model.kind = fkd::ModelKind::krr;
        config.model.krr_alpha = 0.25;
        config.kernel.gamma = 0.2;
        config.decomposition.ridge_alpha = 0.1;
        config.decomposition.m_values = {0, 10};
        config.cv.k = 5;
        config.cv.seed = 44;
        config.threads = 2;
        const fkd::ExperimentResult result = fkd::run_experiment(config);

        const std::vector<double> gdp_first = aggregate_series(result, "gdp.p0");
        const std::vector<double> gdp_second = aggregate_series(result, "gdp.p1");
        if (!(gdp_first.at(1) < gdp_first.at(0))) {
            outcome = fail("first attribute parity deviation did not drop: " +
                           series_text(gdp_first));
        } else if (!(gdp_second.at(1) < gdp_second.at(0))) {
            outcome = fail("second attribute parity deviation did not drop: " +
                           series_text(gdp_second));
        } else {
            const Eigen::MatrixXd x = random_features(30, 3, 910);
            Eigen::MatrixXd p = random_features(30, 1, 911);
            p.col(0) += 0.8 * x.col(0);
            const fkd::KernelMatrix kernel = fkd::rbf_kernel(x, {0.4});
            const fkd::ProtectedAttributes attrs(p);
            fkd::DecompositionParams params;
            params.iterations = 4;
            params.normalization = fkd::NormalizationPath::scalar;
            const fkd::DecompositionResult scalar = fkd::decompose(kernel, attrs, params);
            params.normalization = fkd::NormalizationPath::matrix;
            const fkd::DecompositionResult matrix = fkd::decompose(kernel, attrs, params);
            const double kernel_diff =
                (scalar.kernel.data() - matrix.kernel.data()).cwiseAbs().maxCoeff();
            const double transform_diff =
                (scalar.transform.matrix() - matrix.transform.matrix()).cwiseAbs().maxCoeff();
            if (kernel_diff > 1e-10 || transform_diff > 1e-10) {
                outcome = fail("single-attribute matrix path deviates from the scalar path by " +
                               fmt(std::max(kernel_diff, transform_diff)));
            } else {
                outcome = {true,
                           "gdp.p0 " + series_text(gdp_first) + "; gdp.p1 " +
                               series_text(gdp_second) + "; path difference " +
                               fmt(std::max(kernel_diff, transform_diff))};
            }
        }
    } catch (const fkd::Error& e) {
        outcome = fail(e.what());
    }
    std::remove(csv.c_str());
    return outcome;
}

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "<unreadable:" + path.string() + ">";
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

Outcome check_determinism() {
    const std::string csv = "acceptance_determinism.csv";
    write_synthetic_csv(make_synthetic(80, 1, 1010), csv);
    const std::filesystem::path dir_a = "acceptance_det_a";
    const std::filesystem::path dir_b = "acceptance_det_b";
    Outcome outcome;
    try {
        fkd::ExperimentConfig config;
        config.dataset.path = csv;
        config.dataset.target_column = "y";
        config.dataset.protected_columns = {"p0"};
        config.model.kind = fkd::ModelKind::krr;
        config.kernel.gamma = 0.2;
        config.decomposition.m_values = {0, 3};
        config.cv.k = 5;
        config.cv.seed = 55;
        config.save_transforms = true;

        config.output_path = dir_a.string();
        config.threads = 1;
        fkd::emit_results(fkd::run_experiment(config), dir_a.string());

        config.output_path = dir_b.string();
        config.threads = 3;
        fkd::emit_results(fkd::run_experiment(config), dir_b.string());

        outcome = {true, ""};
        for (const char* name : {"results.json", "results.csv", "transform_fold0_m3.bin",
                                 "transform_fold4_m0.bin"}) {
            if (read_bytes(dir_a / name) != read_bytes(dir_b / name)) {
                outcome = fail(std::string(name) + " differs between identical runs");
                break;
            }
        }
        if (outcome.ok) outcome.note = "result files and transforms byte-identical";
    } catch (const fkd::Error& e) {
        outcome = fail(e.what());
    }
    std::remove(csv.c_str());
    std::error_code ec;
    std::filesystem::remove_all(dir_a, ec);
    std::filesystem::remove_all(dir_b, ec);
    return outcome;
}

struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
    double budget_seconds;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "decomposition matches the factor-space oracle", check_route_agreement, 30.0},
        {2, "every iterate stays positive semi-definite", check_psd_preservation, 0.0},
        {3, "protected directions removed and mutually orthogonal",
         check_removal_and_orthogonality, 0.0},
        {4, "protected attribute becomes unpredictable", check_information_removal, 10.0},
        {5, "landmark inverse exact at full coverage with improving trend",
         check_landmark_inverse, 60.0},
        {6, "support vector solver reaches optimality", check_svr_optimality, 0.0},
        {7, "fairness metrics calibrated on known cases", check_metric_calibration, 0.0},
        {8, "accuracy-fairness trade-off trend end to end", check_tradeoff_trend, 900.0},
        {9, "multiple protected attributes handled consistently", check_multi_attribute, 0.0},
        {10, "identical config and seed give identical bytes", check_determinism, 0.0},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome = fail(std::string("unexpected exception: ") + e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (outcome.ok && criterion.budget_seconds > 0.0 && seconds > criterion.budget_seconds) {
            outcome = fail("exceeded the " + fmt(criterion.budget_seconds) +
                           "s time budget with " + fmt(seconds) + "s");
        }
        if (outcome.ok) {
            std::printf("criterion %2d (%s): PASS%s%s%s (%.1fs)\n", criterion.number,
                        criterion.name, outcome.note.empty() ? "" : " [",
                        outcome.note.c_str(), outcome.note.empty() ? "" : "]", seconds);
        } else {
            std::printf("criterion %2d (%s): FAIL: %s (%.1fs)\n", criterion.number,
                        criterion.name, outcome.note.c_str(), seconds);
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
