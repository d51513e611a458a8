#include "fkd/regressors.hpp"

#include "fkd/errors.hpp"
#include "fkd/fair_decomposition.hpp"
#include "fkd/kernels.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace fkd;
using fkd::testing::anisotropic_features;
using fkd::testing::random_features;
using fkd::testing::random_vector;

namespace {

KernelMatrix random_psd_kernel(Eigen::Index n, unsigned seed) {
    const Eigen::MatrixXd g = random_features(n, n, seed);
    Eigen::MatrixXd k = g * g.transpose();
    k = 0.5 * (k + k.transpose());
    return KernelMatrix::square(std::move(k));
}

struct SvrInstance {
    KernelMatrix kernel;
    Eigen::VectorXd y;
};

SvrInstance make_svr_instance(Eigen::Index n, unsigned seed, double gamma = 0.4) {
    const Eigen::MatrixXd x = anisotropic_features(n, 4, seed);
    Eigen::VectorXd y =
        ((1.3 * x.col(0)).array().sin() + 0.4 * x.col(1).array()).matrix() +
        0.05 * random_vector(n, seed + 500);
    return SvrInstance{rbf_kernel(x, {gamma}), std::move(y)};
}

}  // namespace

TEST_CASE("ridge fit on the identity kernel halves the target") {
    const Eigen::VectorXd y = random_vector(9, 3);
    const KernelMatrix k = KernelMatrix::square(Eigen::MatrixXd::Identity(9, 9));
    const KrrModel model = krr_fit(k, y, 1.0);
    CHECK((model.dual_coefficients - 0.5 * y).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(model.alpha == 1.0);
    CHECK(model.train_fingerprint == k.fingerprint());
}

TEST_CASE("ridge fit with a vanishing penalty approaches the target") {
    const Eigen::VectorXd y = random_vector(7, 4);
    const KernelMatrix k = KernelMatrix::square(Eigen::MatrixXd::Identity(7, 7));
    const KrrModel model = krr_fit(k, y, 1e-12);
    CHECK((model.dual_coefficients - y).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("ridge fit satisfies the residual contract") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const KernelMatrix k = random_psd_kernel(8, seed);
        const Eigen::VectorXd y = random_vector(8, seed + 100);
        const KrrModel model = krr_fit(k, y, 0.25);
        Eigen::MatrixXd shifted = k.data();
        shifted.diagonal().array() += 0.25;
        const double residual = (y - shifted * model.dual_coefficients).norm();
        CHECK(residual <= 1e-8 * y.norm());
    }
}

TEST_CASE("ridge fit meets the residual contract on an ill-conditioned kernel") {
    Eigen::MatrixXd g = random_features(12, 12, 11);
    for (Eigen::Index j = 0; j < 12; ++j) g.col(j) *= std::pow(10.0, -0.5 * double(j));
    Eigen::MatrixXd k = g * g.transpose();
    k = 0.5 * (k + k.transpose());
    const KernelMatrix kernel = KernelMatrix::square(std::move(k));
    const Eigen::VectorXd y = random_vector(12, 12);
    const KrrModel model = krr_fit(kernel, y, 1e-8);
    Eigen::MatrixXd shifted = kernel.data();
    shifted.diagonal().array() += 1e-8;
    CHECK((y - shifted * model.dual_coefficients).norm() <= 1e-8 * y.norm());
}

TEST_CASE("ridge training predictions interpolate when the penalty vanishes") {
    const Eigen::MatrixXd x = random_features(10, 3, 5);
    const KernelMatrix k = rbf_kernel(x, {0.8});
    const Eigen::VectorXd y = random_vector(10, 6);
    const KrrModel model = krr_fit(k, y, 1e-10);
    const Eigen::VectorXd predictions = krr_predict(model, k);
    CHECK((predictions - y).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("ridge prediction on a zero cross kernel is zero") {
    const KernelMatrix k = random_psd_kernel(6, 9);
    const KrrModel model = krr_fit(k, random_vector(6, 10), 0.5);
    const KernelMatrix zero = KernelMatrix::cross(Eigen::MatrixXd::Zero(4, 6));
    CHECK(krr_predict(model, zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("duplicated prediction rows give identical outputs") {
    const Eigen::MatrixXd x = random_features(8, 3, 21);
    const KernelMatrix k = rbf_kernel(x, {0.6});
    const Eigen::VectorXd y = random_vector(8, 22);
    const KrrModel krr = krr_fit(k, y, 0.3);
    const SvrModel svr = svr_fit(k, y, SvrParams{0.01, 1.0, 1e-6});

    Eigen::MatrixXd test_rows = random_features(3, 3, 23);
    test_rows.row(2) = test_rows.row(0);
    const KernelMatrix cross = rbf_cross_kernel(test_rows, x, {0.6});
    const Eigen::VectorXd ridge_pred = krr_predict(krr, cross);
    const Eigen::VectorXd svr_pred = svr_predict(svr, cross);
    CHECK(ridge_pred[2] == ridge_pred[0]);
    CHECK(svr_pred[2] == svr_pred[0]);
}

TEST_CASE("ridge fit rejects malformed inputs") {
    const KernelMatrix k = random_psd_kernel(5, 30);
    const Eigen::VectorXd y = random_vector(5, 31);
    CHECK_THROWS_AS(krr_fit(k, random_vector(4, 1), 0.5), ValidationError);
    CHECK_THROWS_AS(krr_fit(k, y, 0.0), ValidationError);
    CHECK_THROWS_AS(krr_fit(k, y, -1.0), ValidationError);
    const KernelMatrix cross = KernelMatrix::cross(Eigen::MatrixXd::Zero(5, 5));
    CHECK_THROWS_AS(krr_fit(cross, y, 0.5), ValidationError);
}

TEST_CASE("prediction rejects kernels from a different training set") {
    const KernelMatrix k = random_psd_kernel(6, 40);
    const KrrModel model = krr_fit(k, random_vector(6, 41), 0.5);
    CHECK_THROWS_AS(krr_predict(model, KernelMatrix::cross(Eigen::MatrixXd::Zero(2, 5))),
                    ValidationError);
    const KernelMatrix other = random_psd_kernel(6, 42);
    CHECK_THROWS_AS(krr_predict(model, other), ValidationError);
    KernelMatrix stamped = KernelMatrix::cross(Eigen::MatrixXd::Zero(2, 6));
    stamped.set_provenance(other.fingerprint());
    CHECK_THROWS_AS(krr_predict(model, stamped), ValidationError);
}

TEST_CASE("ridge refit on an identity-transformed kernel is bit identical") {
    const Eigen::MatrixXd x = random_features(12, 3, 50);
    const KernelMatrix k = rbf_kernel(x, {0.5});
    Eigen::MatrixXd p = random_features(12, 1, 51);
    DecompositionParams params;
    params.iterations = 0;
    const DecompositionResult unchanged = decompose(k, ProtectedAttributes(p), params);
    const Eigen::VectorXd y = random_vector(12, 52);
    const KrrModel direct = krr_fit(k, y, 0.25);
    const KrrModel via_transform = krr_fit(unchanged.kernel, y, 0.25);
    CHECK((direct.dual_coefficients.array() == via_transform.dual_coefficients.array()).all());
}

TEST_CASE("constant targets produce a support-free model predicting the constant") {
    const KernelMatrix k = random_psd_kernel(7, 60);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(7, 2.5);
    const SvrModel model = svr_fit(k, y, SvrParams{0.1, 1.0, 1e-6});
    CHECK(model.dual_coefficients.cwiseAbs().maxCoeff() == 0.0);
    CHECK(model.bias == 2.5);
    CHECK(model.support_indices.empty());
    const Eigen::VectorXd predictions = svr_predict(model, k);
    CHECK((predictions.array() == 2.5).all());
}

TEST_CASE("a tube wider than the target range needs no support vectors") {
    auto [kernel, y] = make_svr_instance(15, 70);
    const double range = y.maxCoeff() - y.minCoeff();
    const SvrModel model = svr_fit(kernel, y, SvrParams{1.1 * range, 1.0, 1e-6});
    CHECK(model.support_indices.empty());
    CHECK(model.dual_coefficients.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("support vector fits reach a small duality gap on random instances") {
    for (int t = 0; t < 20; ++t) {
        const Eigen::Index n = 10 + 2 * t;
        CAPTURE(t);
        auto [kernel, y] = make_svr_instance(n, static_cast<unsigned>(900 + t));
        const SvrParams params{0.01, 0.75, 1e-6};
        const SvrModel model = svr_fit(kernel, y, params);
        const SvrObjectives report = svr_objectives(model, kernel, y);
        CHECK(report.gap >= -1e-12);
        CHECK(report.gap <= 1e-6 * (1.0 + std::abs(report.dual)));
    }
}

TEST_CASE("support vector solutions satisfy the dual constraints") {
    for (unsigned seed : {201u, 202u, 203u}) {
        auto [kernel, y] = make_svr_instance(25, seed);
        const double cost = 0.5;
        const SvrModel model = svr_fit(kernel, y, SvrParams{0.02, cost, 1e-6});
        CHECK(model.dual_coefficients.cwiseAbs().maxCoeff() <= cost);
        CHECK(std::abs(model.dual_coefficients.sum()) <= 1e-8 * cost * double(y.size()));
    }
}

TEST_CASE("free support vectors sit on the tube boundary") {
    auto [kernel, y] = make_svr_instance(30, 80);
    const double epsilon = 0.05;
    const SvrModel model = svr_fit(kernel, y, SvrParams{epsilon, 1.0, 1e-8});
    const Eigen::VectorXd predictions = svr_predict(model, kernel);
    int free_count = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double beta = model.dual_coefficients[i];
        if (beta == 0.0 || std::abs(beta) >= model.cost) continue;
        ++free_count;
        const double expected = beta > 0.0 ? epsilon : -epsilon;
        CHECK(std::abs((y[i] - predictions[i]) - expected) <= 1e-5);
    }
    CHECK(free_count > 0);
}

TEST_CASE("marginally indefinite kernels are repaired and larger violations rejected") {
    const Eigen::Index n = 10;
    const Eigen::MatrixXd g = random_features(n, n, 91);
    Eigen::MatrixXd base = g * g.transpose();
    base = 0.5 * (base + base.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base);
    const double lambda_max = es.eigenvalues().maxCoeff();
    const Eigen::VectorXd q = es.eigenvectors().col(0);
    const Eigen::VectorXd y = random_vector(n, 92);

    Eigen::MatrixXd marginal =
        base - (es.eigenvalues()[0] + 5e-9 * lambda_max) * (q * q.transpose());
    marginal = 0.5 * (marginal + marginal.transpose());
    KernelMatrix repairable = KernelMatrix::square(std::move(marginal));
    const SvrModel model = svr_fit(repairable, y, SvrParams{0.01, 1.0, 1e-6});
    CHECK(std::isfinite(model.bias));

    Eigen::MatrixXd broken = base - (es.eigenvalues()[0] + 1e-3 * lambda_max) * (q * q.transpose());
    broken = 0.5 * (broken + broken.transpose());
    CHECK_THROWS_AS(svr_fit(KernelMatrix::square(std::move(broken)), y, SvrParams{0.01, 1.0, 1e-6}),
                    ConvexityError);
}

TEST_CASE("support vector fits are deterministic") {
    auto [kernel, y] = make_svr_instance(20, 95);
    const SvrModel a = svr_fit(kernel, y, SvrParams{0.01, 0.75, 1e-6});
    const SvrModel b = svr_fit(kernel, y, SvrParams{0.01, 0.75, 1e-6});
    CHECK((a.dual_coefficients.array() == b.dual_coefficients.array()).all());
    CHECK(a.bias == b.bias);
    CHECK(a.support_indices == b.support_indices);
}

TEST_CASE("support vector parameter validation") {
    auto [kernel, y] = make_svr_instance(8, 97);
    CHECK_THROWS_AS(svr_fit(kernel, y, SvrParams{-0.1, 1.0, 1e-6}), ValidationError);
    CHECK_THROWS_AS(svr_fit(kernel, y, SvrParams{0.1, 0.0, 1e-6}), ValidationError);
    CHECK_THROWS_AS(svr_fit(kernel, y, SvrParams{0.1, 1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(svr_fit(kernel, random_vector(7, 1), SvrParams{}), ValidationError);
}

TEST_CASE("dummy model predicts the training mean") {
    Eigen::VectorXd y(3);
    y << 1.0, 2.0, 3.0;
    const DummyModel model = dummy_fit(y);
    CHECK(model.mean == 2.0);
    const Eigen::VectorXd predictions = dummy_predict(model, 5);
    CHECK(predictions.size() == 5);
    CHECK((predictions.array() == 2.0).all());
    CHECK_THROWS_AS(dummy_fit(Eigen::VectorXd()), ValidationError);
    CHECK_THROWS_AS(dummy_predict(model, -1), ValidationError);
}

TEST_CASE("dummy training error equals the mean absolute deviation") {
    const Eigen::VectorXd y = random_vector(40, 123);
    const DummyModel model = dummy_fit(y);
    const Eigen::VectorXd predictions = dummy_predict(model, y.size());
    const double mae = (y - predictions).cwiseAbs().mean();
    const double deviation = (y.array() - y.mean()).abs().mean();
    CHECK(mae == doctest::Approx(deviation).epsilon(1e-12));
}
