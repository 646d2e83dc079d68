#include <doctest.h>

#include <cmath>

#include "covlab/error.hpp"
#include "covlab/oracle_bounds.hpp"
#include "covlab/regressors.hpp"

using namespace covlab;

namespace {

Dataset line_data(std::size_t n, double slope)
{
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        x(i, 0) = 0.1 * static_cast<double>(i) - 1.0;
        y(i) = slope * x(i, 0);
    }
    return Dataset(x, y);
}

Eigen::VectorXd pt(std::initializer_list<double> v)
{
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x(i++) = d;
    return x;
}

}  // namespace

TEST_SUITE("regressors")
{
    TEST_CASE("constant mean")
    {
        Eigen::MatrixXd x(3, 1);
        x << 0, 1, 2;
        const Dataset d(x, pt({1, 2, 3}));
        const auto m = fit_regressor({RegressorKind::constant_mean, {}}, d);
        CHECK(m.predict(pt({-100})) == doctest::Approx(2.0));
        CHECK(m.predict(pt({7})) == doctest::Approx(2.0));
        CHECK(RegressionModel::constant(5, 2).predict(pt({1, 9})) == 5.0);
    }

    TEST_CASE("least squares interpolates a noiseless line")
    {
        const Dataset d = line_data(30, 2.0);
        const auto m = fit_regressor({RegressorKind::least_squares_linear, {}}, d);
        CHECK_FALSE(m.rank_deficient());
        for (double x : {-3.0, 0.0, 0.37, 5.0}) CHECK(m.predict(pt({x})) == doctest::Approx(2.0 * x).epsilon(1e-12));
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(m.predict(d.row(i)) - d.response(i)) <= 1e-9);
    }

    TEST_CASE("linear model is a dot product")
    {
        const auto m = RegressionModel::linear(pt({1, -1}), 0.0);
        CHECK(predict_mean(m, pt({3, 2})) == 1.0);
        CHECK_THROWS_AS((m.predict(pt({1}))), InputError);
    }

    TEST_CASE("rank deficient design uses the minimum norm solution")
    {
        Eigen::MatrixXd x(4, 2);
        x << 1, 2, 2, 4, 3, 6, 4, 8;  // second column is twice the first
        const Dataset d(x, pt({1, 2, 3, 4}));
        const auto m = fit_regressor({RegressorKind::least_squares_linear, {}}, d);
        CHECK(m.rank_deficient());
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(m.predict(d.row(i)) == doctest::Approx(d.response(i)));
        // Minimum norm splits the weight as (1, 2)/5 along the shared direction.
        CHECK(m.coefficients()(0) == doctest::Approx(0.2));
        CHECK(m.coefficients()(1) == doctest::Approx(0.4));
    }

    TEST_CASE("nearest neighbors")
    {
        Eigen::MatrixXd x(2, 1);
        x << 0, 10;
        const Dataset d(x, pt({0, 5}));
        const auto one = fit_regressor({RegressorKind::k_nearest_neighbor, 1}, d);
        CHECK(one.predict(pt({1})) == 0.0);
        CHECK(one.predict(pt({9})) == 5.0);
        // Equidistant: the lower training index wins.
        CHECK(one.predict(pt({5})) == 0.0);
        const auto all = fit_regressor({RegressorKind::k_nearest_neighbor, 2}, d);
        CHECK(all.predict(pt({-40})) == 2.5);
        CHECK_THROWS_AS((fit_regressor({RegressorKind::k_nearest_neighbor, 3}, d)), ConfigError);
        CHECK_THROWS_AS((fit_regressor({RegressorKind::k_nearest_neighbor, 0}, d)), ConfigError);

        const Dataset big = line_data(27, 1.0);
        CHECK(fit_regressor({RegressorKind::k_nearest_neighbor, {}}, big).neighbors() == 9);
    }

    TEST_CASE("fitting twice gives identical predictions")
    {
        LocationFamily fam;
        fam.mean.coefficients = pt({1.5, -0.5});
        fam.features.dimension = 2;
        const Dataset d = sample_location_family(fam, 200, 4);
        for (auto kind : {RegressorKind::constant_mean, RegressorKind::least_squares_linear,
                          RegressorKind::k_nearest_neighbor}) {
            const auto a = fit_regressor({kind, {}}, d);
            const auto b = fit_regressor({kind, {}}, d);
            for (double u = 0; u <= 1.0; u += 0.125) CHECK(a.predict(pt({u, 1 - u})) == b.predict(pt({u, 1 - u})));
        }
    }

    TEST_CASE("kind names round trip")
    {
        for (auto kind : {RegressorKind::constant_mean, RegressorKind::least_squares_linear,
                          RegressorKind::k_nearest_neighbor})
            CHECK(parse_regressor_kind(to_string(kind)) == kind);
        CHECK_THROWS_AS(parse_regressor_kind("forest"), ConfigError);
    }

    TEST_CASE("consistency estimates")
    {
        LocationFamily fam;
        fam.mean.coefficients = pt({2.0});
        const FeatureSampler sampler = [&](Engine& e) { return fam.draw_features(e); };
        const MeanFn truth = [&](const Eigen::VectorXd& x) { return fam.mean_at(x); };

        const auto exact = estimate_consistency(RegressionModel::linear(pt({2.0}), 0.0), truth, sampler, 1000, 1);
        CHECK(exact.value == 0.0);
        CHECK(exact.standard_error == 0.0);

        const MeanFn one = [](const Eigen::VectorXd&) { return 1.0; };
        const auto offset = estimate_consistency(RegressionModel::constant(0, 1), one, sampler, 1000, 1);
        CHECK(offset.value == doctest::Approx(1.0));

        int below = 0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto model = fit_regressor({RegressorKind::least_squares_linear, {}}, sample_location_family(fam, 2000, s));
            if (estimate_consistency(model, truth, sampler, 2000, s).value < 0.01) ++below;
        }
        CHECK(below >= 19);
    }
}
