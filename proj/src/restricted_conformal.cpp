#include "covlab/restricted_conformal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "covlab/error.hpp"

namespace covlab {

EligibilityThreshold eligibility_threshold(std::size_t n1, double delta)
{
    if (n1 < 1) throw ConfigError("eligibility threshold needs n1 >= 1");
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
    const double mass = delta * static_cast<double>(n1);
    const double value = mass * (1.0 - std::sqrt(2.0 * std::log(static_cast<double>(n1)) / mass));
    return {n1, delta, value};
}

std::size_t restricted_rank(std::size_t count, std::size_t n1, double alpha)
{
    if (n1 < 1) throw ConfigError("restricted rank needs n1 >= 1");
    return detail::RankRule{1.0 - alpha + 1.0 / static_cast<double>(n1), 1.0}.rank(count);
}

double subset_quantile(std::span<const double> subset_residuals, std::size_t n1, double alpha)
{
    const std::size_t k = restricted_rank(subset_residuals.size(), n1, alpha);
    if (k > subset_residuals.size()) return kInf;
    std::vector<double> v(subset_residuals.begin(), subset_residuals.end());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
    return v[k - 1];
}

namespace detail {

std::size_t RankRule::rank(std::size_t count) const
{
    return std::max<std::size_t>(1, ceil_rank(factor * (static_cast<double>(count) + shift)));
}

namespace {

double ranked_value(std::vector<double> values, std::size_t k)
{
    if (k > values.size()) return kInf;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k - 1), values.end());
    return values[k - 1];
}

std::vector<std::size_t> all_indices(std::size_t n)
{
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

SupremumResult full_space_supremum(std::span<const double> scores, RankRule rule)
{
    SupremumResult r;
    r.value = ranked_value({scores.begin(), scores.end()}, rule.rank(scores.size()));
    r.indices = all_indices(scores.size());
    r.witness = FullSpace{};
    r.eligible_sets = 1;
    return r;
}

SupremumResult partition_supremum(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd& points,
                                  std::span<const double> scores, const SetClass& set_class, double min_count,
                                  RankRule rule)
{
    SupremumResult best = full_space_supremum(scores, rule);
    const auto& partition = set_class.partition();
    const int cell = partition->label(x);
    std::vector<std::size_t> members;
    std::vector<double> cell_scores;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        if (partition->label(points.row(i).transpose()) == cell) {
            members.push_back(static_cast<std::size_t>(i));
            cell_scores.push_back(scores[static_cast<std::size_t>(i)]);
        }
    }
    // a cell holding every point induces the same subset as the full space
    if (members.size() == scores.size() || static_cast<double>(members.size()) < min_count) return best;
    best.eligible_sets = 2;
    const double q = ranked_value(cell_scores, rule.rank(members.size()));
    if (q >= best.value) {
        best.value = q;
        best.indices = std::move(members);
        best.witness = PartitionCell{partition, cell};
    }
    return best;
}

/// Linear-time decision plus binary search over candidate values for 1-d intervals.
///
/// For a threshold t, some eligible run R containing x has ranked value > t
/// iff #{i in R : score_i <= t} < rank(|R|). With boundaries a < b over the
/// sorted groups of distinct coordinates this is a prefix-sum condition, so
/// for each right boundary only the best admissible left boundary matters.
class IntervalSweep {
public:
    IntervalSweep(double x, const Eigen::MatrixXd& points, std::span<const double> scores, double min_count,
                  RankRule rule)
        : scores_(scores), min_count_(min_count), rule_(rule)
    {
        const auto n = static_cast<std::size_t>(points.rows());
        std::vector<std::size_t> order = all_indices(n);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return points(static_cast<Eigen::Index>(a), 0) < points(static_cast<Eigen::Index>(b), 0); });

        std::size_t pos = 0;
        bool x_placed = false;
        while (pos < n || !x_placed) {
            const double next = pos < n ? points(static_cast<Eigen::Index>(order[pos]), 0) : kInf;
            if (!x_placed && x <= next) {
                values_.push_back(x);
                members_.emplace_back();
                x_group_ = values_.size() - 1;
                x_placed = true;
                while (pos < n && points(static_cast<Eigen::Index>(order[pos]), 0) == x) {
                    members_.back().push_back(order[pos++]);
                }
                continue;
            }
            values_.push_back(next);
            members_.emplace_back();
            while (pos < n && points(static_cast<Eigen::Index>(order[pos]), 0) == next) {
                members_.back().push_back(order[pos++]);
            }
        }

        const std::size_t groups = values_.size();
        count_prefix_.assign(groups + 1, 0);
        for (std::size_t g = 0; g < groups; ++g) count_prefix_[g + 1] = count_prefix_[g] + members_[g].size();

        // Largest admissible left boundary for each right boundary b > x_group_.
        left_limit_.assign(groups + 1, -1);
        std::ptrdiff_t a = -1;
        for (std::size_t b = x_group_ + 1; b <= groups; ++b) {
            while (a + 1 <= static_cast<std::ptrdiff_t>(x_group_) &&
                   static_cast<double>(count_prefix_[b] - count_prefix_[static_cast<std::size_t>(a + 1)]) >= min_count_) {
                ++a;
            }
            left_limit_[b] = a;
            eligible_sets_ += static_cast<std::size_t>(a + 1);
        }
    }

    std::size_t eligible_sets() const noexcept { return eligible_sets_; }

    /// An eligible run whose ranked value exceeds t, as group boundaries [a, b).
    std::optional<std::pair<std::size_t, std::size_t>> exceeding_run(double t) const
    {
        const std::size_t groups = values_.size();
        std::vector<std::size_t> below(groups + 1, 0);
        for (std::size_t g = 0; g < groups; ++g) {
            std::size_t c = 0;
            for (auto i : members_[g]) c += scores_[i] <= t ? 1 : 0;
            below[g + 1] = below[g] + c;
        }
        const double f = rule_.factor;
        std::vector<std::size_t> best_left(x_group_ + 1);
        double best_h = -kInf;
        for (std::size_t a = 0; a <= x_group_; ++a) {
            const double h = static_cast<double>(below[a]) - f * static_cast<double>(count_prefix_[a]);
            if (a == 0 || h > best_h) {
                best_h = h;
                best_left[a] = a;
            } else {
                best_left[a] = best_left[a - 1];
            }
        }
        for (std::size_t b = x_group_ + 1; b <= groups; ++b) {
            if (left_limit_[b] < 0) continue;
            const std::size_t a = best_left[static_cast<std::size_t>(left_limit_[b])];
            const std::size_t count = count_prefix_[b] - count_prefix_[a];
            const std::size_t hits = below[b] - below[a];
            if (hits < rule_.rank(count)) return std::make_pair(a, b);
        }
        return std::nullopt;
    }

    void fill(SupremumResult& r, std::size_t a, std::size_t b) const
    {
        r.indices.clear();
        for (std::size_t g = a; g < b; ++g) r.indices.insert(r.indices.end(), members_[g].begin(), members_[g].end());
        std::sort(r.indices.begin(), r.indices.end());
        r.witness = Interval1d{values_[a], values_[b - 1]};
    }

private:
    std::span<const double> scores_;
    double min_count_;
    RankRule rule_;
    std::vector<double> values_;
    std::vector<std::vector<std::size_t>> members_;
    std::size_t x_group_ = 0;
    std::vector<std::size_t> count_prefix_;
    std::vector<std::ptrdiff_t> left_limit_;
    std::size_t eligible_sets_ = 0;
};

SupremumResult interval_supremum(double x, const Eigen::MatrixXd& points, std::span<const double> scores,
                                 double min_count, RankRule rule)
{
    IntervalSweep sweep(x, points, scores, min_count, rule);
    std::vector<double> candidates(scores.begin(), scores.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    SupremumResult r;
    r.eligible_sets = sweep.eligible_sets();

    if (auto run = sweep.exceeding_run(candidates.back())) {
        r.value = kInf;
        sweep.fill(r, run->first, run->second);
        return r;
    }
    // smallest candidate whose decision is false; decisions are monotone in t
    std::size_t lo = 0;
    std::size_t hi = candidates.size() - 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (sweep.exceeding_run(candidates[mid])) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    r.value = candidates[lo];
    if (lo == 0) {
        r.indices = all_indices(scores.size());
        r.witness = FullSpace{};
    } else {
        auto run = sweep.exceeding_run(candidates[lo - 1]);
        sweep.fill(r, run->first, run->second);
    }
    return r;
}

SupremumResult enumerated_supremum(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd& points,
                                   std::span<const double> scores, const SetClass& set_class, double min_count,
                                   RankRule rule)
{
    const auto n = static_cast<std::size_t>(points.rows());
    Eigen::MatrixXd augmented(points.rows() + 1, x.size());
    augmented.topRows(points.rows()) = points;
    augmented.row(points.rows()) = x.transpose();
    const InducedFamily family = induced_subsets(set_class, augmented);

    SupremumResult best;
    best.exact = family.exact;
    bool found = false;
    for (const auto& s : family.subsets) {
        if (s.indices.empty() || s.indices.back() != n) continue;  // x is the largest index
        const std::size_t count = s.indices.size() - 1;
        if (static_cast<double>(count) < min_count) continue;
        ++best.eligible_sets;
        std::vector<double> v;
        v.reserve(count);
        for (std::size_t j = 0; j < count; ++j) v.push_back(scores[s.indices[j]]);
        const double q = ranked_value(std::move(v), rule.rank(count));
        if (!found || q > best.value) {
            found = true;
            best.value = q;
            best.indices.assign(s.indices.begin(), s.indices.end() - 1);
            best.witness = s.witness;
        }
    }
    if (!found) throw InputError("no eligible set contains the query point");
    return best;
}

}  // namespace

SupremumResult supremum_quantile(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::MatrixXd& points,
                                 std::span<const double> scores, const SetClass& set_class, double min_count,
                                 RankRule rule, bool force_enumeration)
{
    if (static_cast<std::size_t>(points.rows()) != scores.size()) throw InputError("points and scores differ in count");
    if (scores.empty()) throw InputError("supremum needs at least one scored point");
    if (points.cols() != x.size()) throw InputError("query dimension differs from point dimension");

    if (!force_enumeration) {
        switch (set_class.kind()) {
        case SetClassKind::full_space_only: return full_space_supremum(scores, rule);
        case SetClassKind::finite_partition:
            return partition_supremum(x, points, scores, set_class, min_count, rule);
        case SetClassKind::intervals_1d:
            if (x.size() != 1) throw InputError("intervals-1d needs one-dimensional points");
            return interval_supremum(x(0), points, scores, min_count, rule);
        default: break;
        }
    }
    return enumerated_supremum(x, points, scores, set_class, min_count, rule);
}

}  // namespace detail

LocalWidthTable local_width(const Eigen::Ref<const Eigen::VectorXd>& x, const Dataset& calib,
                            const ResidualSet& residuals, const SetClass& set_class, const CoverageSpec& spec)
{
    spec.validate();
    if (residuals.size() != calib.size()) throw InputError("residual count differs from calibration size");
    const std::size_t n1 = calib.size();
    const auto threshold = eligibility_threshold(n1, spec.delta);
    const detail::RankRule rule{1.0 - spec.alpha + 1.0 / static_cast<double>(n1), 1.0};

    auto sup = detail::supremum_quantile(x, calib.features(), residuals.values(), set_class, threshold.value, rule);

    LocalWidthTable table;
    table.x = x;
    table.width = sup.value;
    table.achieving = InducedSubset{std::move(sup.indices), std::move(sup.witness)};
    table.eligible_sets = sup.eligible_sets;
    table.threshold = threshold.value;
    table.exact = sup.exact;
    return table;
}

PredictionInterval predict_restricted(const RegressionModel& model, const LocalWidthTable& width,
                                      const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return PredictionInterval::symmetric(model.predict(x), width.width);
}

}  // namespace covlab
