#include <doctest.h>

#include <random>

#include "covlab/restricted_conformal.hpp"
#include "support/oracles.hpp"

using namespace covlab;

namespace {

struct Instance {
    Dataset calib;
    ResidualSet residuals;
    std::vector<double> xs;
};

Instance random_instance(std::mt19937_64& eng, std::size_t n1, std::size_t d = 1, bool grid_values = false)
{
    std::normal_distribution<double> n;
    std::uniform_int_distribution<int> small(0, 9);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n1), static_cast<Eigen::Index>(d));
    std::vector<double> r(n1);
    for (std::size_t i = 0; i < n1; ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            x(static_cast<Eigen::Index>(i), j) = grid_values ? small(eng) / 3.0 : n(eng);
        r[i] = grid_values ? small(eng) : std::abs(n(eng));
    }
    Instance inst{Dataset(x, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n1))), ResidualSet(r), {}};
    for (std::size_t i = 0; i < n1; ++i) inst.xs.push_back(x(static_cast<Eigen::Index>(i), 0));
    return inst;
}

}  // namespace

TEST_SUITE("restricted_conformal")
{
    TEST_CASE("eligibility threshold examples")
    {
        const auto t = eligibility_threshold(1000, 0.1);
        CHECK(t.value == doctest::Approx(62.831).epsilon(1e-4));
        CHECK(t.eligible(63));
        CHECK_FALSE(t.eligible(62));
        CHECK(eligibility_threshold(10, 0.1).value == doctest::Approx(-1.146).epsilon(1e-3));
        CHECK(eligibility_threshold(10, 0.1).eligible(0));
        const auto one = eligibility_threshold(1, 1.0);
        CHECK(one.value == 1.0);
        CHECK(one.eligible(1));
        CHECK_FALSE(one.eligible(0));
        for (std::size_t n1 : {2u, 50u, 5000u}) CHECK(eligibility_threshold(n1, 0.3).value < 0.3 * n1);
    }

    TEST_CASE("subset counts and ranks")
    {
        CHECK(subset_count({}) == 0);
        CHECK(subset_count({2, 5, 9}) == 3);
        CHECK(restricted_rank(99, 1000, 0.1) == 91);
        CHECK(restricted_rank(5, 10, 0.05) == 7);
        std::vector<double> five{1, 2, 3, 4, 5};
        CHECK(subset_quantile(five, 10, 0.05) == kInf);
        CHECK(subset_quantile({}, 10, 0.5) == kInf);
        std::vector<double> many(99);
        for (std::size_t i = 0; i < many.size(); ++i) many[i] = static_cast<double>(99 - i);
        CHECK(subset_quantile(many, 1000, 0.1) == 91.0);
        for (std::int64_t n1 = 1; n1 <= 60; ++n1)
            for (std::int64_t c = 0; c <= n1; ++c)
                for (std::int64_t a : {1, 50, 100, 333, 999})
                    CHECK(static_cast<std::int64_t>(restricted_rank(static_cast<std::size_t>(c), static_cast<std::size_t>(n1),
                                                                    a / 1000.0)) ==
                          oracle::restricted_rank(c, n1, a, 1000));
    }

    TEST_CASE("full-space-only width is the all-residual quantile")
    {
        std::mt19937_64 eng(1);
        const auto inst = random_instance(eng, 40);
        const CoverageSpec spec{0.1, 0.3};
        const auto w = local_width(Eigen::VectorXd::Zero(1), inst.calib, inst.residuals, SetClass::full_space_only(1), spec);
        CHECK(w.width == subset_quantile(inst.residuals.values(), 40, 0.1));
        CHECK(w.achieving.indices.size() == 40);
        CHECK(w.eligible_sets == 1);
    }

    TEST_CASE("partition width is the larger of cell and full space")
    {
        std::mt19937_64 eng(2);
        const auto inst = random_instance(eng, 200);
        const auto part = Partition::grid({{-0.5, 0.5}});
        const CoverageSpec spec{0.2, 0.2};
        const double full = subset_quantile(inst.residuals.values(), 200, 0.2);
        const auto threshold = eligibility_threshold(200, 0.2);
        for (double x : {-1.0, 0.0, 1.0}) {
            const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, x);
            const int cell = part->label(q);
            std::vector<double> in;
            for (std::size_t i = 0; i < 200; ++i)
                if (part->label(inst.calib.row(i)) == cell) in.push_back(inst.residuals.values()[i]);
            double expect = full;
            if (threshold.eligible(in.size())) expect = std::max(expect, subset_quantile(in, 200, 0.2));
            const auto w = local_width(q, inst.calib, inst.residuals, SetClass::finite_partition(part), spec);
            CHECK(w.width == expect);
            // Cell-determined: every x in the cell gets the same width.
            const auto w2 = local_width(Eigen::VectorXd::Constant(1, x + 0.01), inst.calib, inst.residuals,
                                        SetClass::finite_partition(part), spec);
            CHECK(w2.width == w.width);
        }
    }

    TEST_CASE("interval supremum equals the endpoint-pair maximum")
    {
        std::mt19937_64 eng(3);
        for (int rep = 0; rep < 150; ++rep) {
            const std::size_t n1 = 1 + static_cast<std::size_t>(eng() % 50);
            const bool ties = rep % 3 == 0;
            const auto inst = random_instance(eng, n1, 1, ties);
            const std::int64_t a = 1 + static_cast<std::int64_t>(eng() % 400);
            const double delta = 0.05 + 0.9 * static_cast<double>(eng() % 100) / 100.0;
            const CoverageSpec spec{a / 1000.0, delta};
            const double x = ties ? static_cast<double>(eng() % 10) / 3.0 : std::normal_distribution<double>()(eng);
            const auto w = local_width(Eigen::VectorXd::Constant(1, x), inst.calib, inst.residuals,
                                       SetClass::intervals_1d(), spec);
            const double expect = oracle::interval_supremum(x, inst.xs, inst.residuals.values(),
                                                            eligibility_threshold(n1, delta).value, a, 1000);
            CHECK(w.width == expect);
            CHECK(contains(w.achieving.witness, Eigen::VectorXd::Constant(1, x)));
        }
    }

    TEST_CASE("fast paths agree with the generic enumeration")
    {
        std::mt19937_64 eng(4);
        const auto part = Partition::grid({{-0.3, 0.4}});
        for (int rep = 0; rep < 60; ++rep) {
            const std::size_t n1 = 2 + static_cast<std::size_t>(eng() % 40);
            const auto inst = random_instance(eng, n1, 1, rep % 2 == 0);
            const double x = std::normal_distribution<double>()(eng);
            const double min_count = eligibility_threshold(n1, 0.25).value;
            const detail::RankRule rule{1.0 - 0.1 + 1.0 / static_cast<double>(n1), 1.0};
            const Eigen::VectorXd q = Eigen::VectorXd::Constant(1, x);
            for (const auto& cls : {SetClass::full_space_only(1), SetClass::finite_partition(part), SetClass::intervals_1d()}) {
                const auto fast = detail::supremum_quantile(q, inst.calib.features(), inst.residuals.values(), cls,
                                                            min_count, rule, false);
                const auto slow = detail::supremum_quantile(q, inst.calib.features(), inst.residuals.values(), cls,
                                                            min_count, rule, true);
                CHECK(fast.value == slow.value);
                CHECK(fast.eligible_sets == slow.eligible_sets);
                CHECK(contains(fast.witness, q));
            }
        }
    }

    TEST_CASE("disk supremum equals the maximum over separable patterns")
    {
        std::mt19937_64 eng(5);
        for (int rep = 0; rep < 25; ++rep) {
            const std::size_t n1 = 2 + static_cast<std::size_t>(rep % 6);
            const auto inst = random_instance(eng, n1, 2);
            std::normal_distribution<double> n;
            const Eigen::Vector2d x(n(eng), n(eng));
            const CoverageSpec spec{0.3, 0.5};
            const auto w = local_width(x, inst.calib, inst.residuals, SetClass::l2_balls(2), spec);

            std::vector<Eigen::Vector2d> pts;
            for (std::size_t i = 0; i < n1; ++i) pts.push_back(inst.calib.row(i));
            pts.push_back(x);
            const double threshold = eligibility_threshold(n1, 0.5).value;
            double best = oracle::kth(inst.residuals.values(), oracle::restricted_rank(n1, n1, 300, 1000));
            for (auto mask : oracle::separable_patterns(pts, true)) {
                if (!(mask & (1u << n1))) continue;
                std::vector<double> in;
                for (std::size_t i = 0; i < n1; ++i)
                    if (mask & (1u << i)) in.push_back(inst.residuals.values()[i]);
                if (static_cast<double>(in.size()) < threshold) continue;
                best = std::max(best, oracle::kth(in, oracle::restricted_rank(static_cast<std::int64_t>(in.size()),
                                                                              static_cast<std::int64_t>(n1), 300, 1000)));
            }
            CHECK(w.width == best);
            CHECK(w.exact);
        }
    }

    TEST_CASE("width properties")
    {
        std::mt19937_64 eng(6);
        const auto inst = random_instance(eng, 60);
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.2);
        double last = kInf;
        for (double alpha = 0.02; alpha < 0.9; alpha += 0.04) {
            const CoverageSpec spec{alpha, 0.3};
            const auto wi = local_width(x, inst.calib, inst.residuals, SetClass::intervals_1d(), spec);
            const auto wf = local_width(x, inst.calib, inst.residuals, SetClass::full_space_only(1), spec);
            CHECK(wi.width >= wf.width);
            CHECK(wi.width <= last);
            last = wi.width;
        }
    }

    TEST_CASE("restricted full-space interval contains the marginal one")
    {
        std::mt19937_64 eng(7);
        for (std::size_t n1 = 1; n1 <= 200; n1 += 7) {
            const auto inst = random_instance(eng, n1);
            for (double alpha : {0.05, 0.1, 0.3}) {
                const auto w = local_width(Eigen::VectorXd::Zero(1), inst.calib, inst.residuals,
                                           SetClass::full_space_only(1), {alpha, 1.0});
                CHECK(restricted_rank(n1, n1, alpha) >= marginal_rank(n1, alpha));
                CHECK(w.width >= marginal_quantile(inst.residuals, alpha));
            }
        }
    }

    TEST_CASE("predict restricted")
    {
        LocalWidthTable t;
        t.width = 3;
        const auto zero = RegressionModel::constant(0, 1);
        CHECK(predict_restricted(zero, t, Eigen::VectorXd::Zero(1)) == PredictionInterval({{-3, 3}}));
        t.width = kInf;
        CHECK(predict_restricted(zero, t, Eigen::VectorXd::Zero(1)) == PredictionInterval::whole_line());
    }

    TEST_CASE("tiny calibration sets give the whole line")
    {
        std::mt19937_64 eng(8);
        const auto inst = random_instance(eng, 4);
        for (const auto& cls : {SetClass::full_space_only(1), SetClass::intervals_1d(),
                                SetClass::finite_partition(Partition::grid({{0.0}}))}) {
            const auto w = local_width(Eigen::VectorXd::Constant(1, 0.3), inst.calib, inst.residuals, cls, {0.1, 0.5});
            CHECK(w.width == kInf);
        }
    }
}
