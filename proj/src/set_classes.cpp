#include "covlab/set_classes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "covlab/error.hpp"
#include "covlab/rng.hpp"

namespace covlab {

// ---------------------------------------------------------------------------
// Partition

std::shared_ptr<const Partition> Partition::grid(std::vector<std::vector<double>> cuts)
{
    if (cuts.empty()) throw ConfigError("grid partition needs at least one dimension");
    auto p = std::make_shared<Partition>();
    p->grid_ = true;
    p->dim_ = cuts.size();
    p->cells_ = 1;
    for (auto& c : cuts) {
        for (double v : c) {
            if (!std::isfinite(v)) throw ConfigError("grid cut points must be finite");
        }
        if (!std::is_sorted(c.begin(), c.end()) || std::adjacent_find(c.begin(), c.end()) != c.end()) {
            throw ConfigError("grid cut points must be strictly increasing");
        }
        p->cells_ *= c.size() + 1;
    }
    p->cuts_ = std::move(cuts);
    return p;
}

namespace {

std::vector<double> key_of(const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return {x.data(), x.data() + x.size()};
}

void add_labels(std::map<std::vector<double>, int>& table, const Dataset& labeled)
{
    if (!labeled.labels()) throw InputError("dataset has no label column");
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        const int lab = (*labeled.labels())[i];
        auto [it, inserted] = table.emplace(key_of(labeled.row(i)), lab);
        if (!inserted && it->second != lab) {
            throw InputError("row " + std::to_string(i + 1) + " repeats a feature vector with a different label");
        }
    }
}

}  // namespace

std::shared_ptr<const Partition> Partition::from_labels(const Dataset& labeled)
{
    auto p = std::make_shared<Partition>();
    p->grid_ = false;
    p->dim_ = labeled.dimension();
    add_labels(p->table_, labeled);
    std::set<int> distinct;
    for (const auto& [k, v] : p->table_) distinct.insert(v);
    p->cells_ = distinct.size();
    return p;
}

std::shared_ptr<const Partition> Partition::extend(const Partition& base, const Dataset& labeled)
{
    if (base.is_grid()) throw InputError("only explicit partitions can be extended with labels");
    if (labeled.dimension() != base.dim_) throw InputError("label table dimension mismatch");
    auto p = std::make_shared<Partition>(base);
    add_labels(p->table_, labeled);
    std::set<int> distinct;
    for (const auto& [k, v] : p->table_) distinct.insert(v);
    p->cells_ = distinct.size();
    return p;
}

std::vector<int> Partition::cell_ids() const
{
    std::vector<int> ids;
    if (grid_) {
        for (std::size_t i = 0; i < cells_; ++i) ids.push_back(static_cast<int>(i));
        return ids;
    }
    std::set<int> distinct;
    for (const auto& [k, v] : table_) distinct.insert(v);
    return {distinct.begin(), distinct.end()};
}

int Partition::label(const Eigen::Ref<const Eigen::VectorXd>& x) const
{
    if (static_cast<std::size_t>(x.size()) != dim_) throw InputError("partition dimension mismatch");
    if (grid_) {
        std::size_t id = 0;
        for (std::size_t j = 0; j < dim_; ++j) {
            const auto& c = cuts_[j];
            const auto slot = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), x(static_cast<Eigen::Index>(j))) - c.begin());
            id = id * (c.size() + 1) + slot;
        }
        return static_cast<int>(id);
    }
    auto it = table_.find(key_of(x));
    if (it == table_.end()) throw InputError("point has no partition label");
    return it->second;
}

// ---------------------------------------------------------------------------
// Descriptors

namespace {

void require_dim(std::size_t expected, Eigen::Index got)
{
    if (static_cast<std::size_t>(got) != expected) {
        throw InputError("set has dimension " + std::to_string(expected) + ", point has " + std::to_string(got));
    }
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

bool contains(const SetDescriptor& set, const Eigen::Ref<const Eigen::VectorXd>& x)
{
    return std::visit(
        overloaded{
            [](const FullSpace&) { return true; },
            [](const EmptySet&) { return false; },
            [&](const PartitionCell& c) { return c.partition->label(x) == c.id; },
            [&](const Interval1d& iv) {
                if (x.size() < 1) throw InputError("interval membership needs a coordinate");
                return iv.lo <= x(0) && x(0) <= iv.hi;
            },
            [&](const Ball& b) {
                require_dim(static_cast<std::size_t>(b.center.size()), x.size());
                return (x - b.center).squaredNorm() <= b.radius * b.radius;
            },
            [&](const HalfSpace& h) {
                require_dim(static_cast<std::size_t>(h.normal.size()), x.size());
                return h.normal.dot(x) <= h.offset;
            },
        },
        set);
}

std::string describe(const SetDescriptor& set)
{
    std::ostringstream out;
    out.precision(17);
    auto vec = [&](const Eigen::VectorXd& v) {
        out << '(';
        for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v(i);
        out << ')';
    };
    std::visit(overloaded{
                   [&](const FullSpace&) { out << "full-space"; },
                   [&](const EmptySet&) { out << "empty"; },
                   [&](const PartitionCell& c) { out << "cell " << c.id; },
                   [&](const Interval1d& iv) { out << "interval [" << iv.lo << ", " << iv.hi << "]"; },
                   [&](const Ball& b) {
                       out << "ball center ";
                       vec(b.center);
                       out << " radius " << b.radius;
                   },
                   [&](const HalfSpace& h) {
                       out << "half-space normal ";
                       vec(h.normal);
                       out << " offset " << h.offset;
                   },
               },
               set);
    return out.str();
}

// ---------------------------------------------------------------------------
// SetClass

std::string to_string(SetClassKind kind)
{
    switch (kind) {
    case SetClassKind::full_space_only: return "full-space-only";
    case SetClassKind::finite_partition: return "finite-partition";
    case SetClassKind::intervals_1d: return "intervals-1d";
    case SetClassKind::l2_balls: return "l2-balls";
    case SetClassKind::half_spaces: return "half-spaces";
    }
    return "unknown";
}

SetClassKind parse_set_class_kind(const std::string& name)
{
    for (auto k : {SetClassKind::full_space_only, SetClassKind::finite_partition, SetClassKind::intervals_1d,
                   SetClassKind::l2_balls, SetClassKind::half_spaces}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown set class '" + name + "'");
}

SetClass SetClass::full_space_only(std::size_t dimension)
{
    SetClass c;
    c.kind_ = SetClassKind::full_space_only;
    c.dim_ = dimension;
    return c;
}

SetClass SetClass::finite_partition(std::shared_ptr<const Partition> partition)
{
    if (!partition) throw ConfigError("partition class needs a partition");
    SetClass c;
    c.kind_ = SetClassKind::finite_partition;
    c.dim_ = partition->dimension();
    c.partition_ = std::move(partition);
    return c;
}

SetClass SetClass::intervals_1d()
{
    SetClass c;
    c.kind_ = SetClassKind::intervals_1d;
    c.dim_ = 1;
    return c;
}

SetClass SetClass::l2_balls(std::size_t dimension)
{
    if (dimension < 1) throw ConfigError("ball class needs dimension >= 1");
    SetClass c;
    c.kind_ = SetClassKind::l2_balls;
    c.dim_ = dimension;
    return c;
}

SetClass SetClass::half_spaces(std::size_t dimension)
{
    if (dimension < 1) throw ConfigError("half-space class needs dimension >= 1");
    SetClass c;
    c.kind_ = SetClassKind::half_spaces;
    c.dim_ = dimension;
    return c;
}

bool SetClass::exact_enumeration() const noexcept
{
    switch (kind_) {
    case SetClassKind::l2_balls:
    case SetClassKind::half_spaces: return dim_ <= 2;
    default: return true;
    }
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

struct BySizeThenLex {
    bool operator()(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) const
    {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    }
};

/// Deduplicating collector. The first witness seen for an index set is kept.
class FamilyBuilder {
public:
    explicit FamilyBuilder(const Eigen::MatrixXd& points)
        : points_(points)
    {
    }

    void add(const SetDescriptor& witness)
    {
        std::vector<std::size_t> idx;
        for (Eigen::Index i = 0; i < points_.rows(); ++i) {
            if (contains(witness, points_.row(i).transpose())) idx.push_back(static_cast<std::size_t>(i));
        }
        subsets_.emplace(std::move(idx), witness);
    }

    std::size_t size() const noexcept { return subsets_.size(); }

    std::vector<InducedSubset> take()
    {
        std::vector<InducedSubset> out;
        out.reserve(subsets_.size());
        for (auto& [idx, w] : subsets_) out.push_back({idx, w});
        return out;
    }

private:
    const Eigen::MatrixXd& points_;
    std::map<std::vector<std::size_t>, SetDescriptor, BySizeThenLex> subsets_;
};

/// Sorted distinct values of one coordinate.
std::vector<double> distinct_coordinate(const Eigen::MatrixXd& points, Eigen::Index col)
{
    std::vector<double> v(points.col(col).data(), points.col(col).data() + points.rows());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

void enumerate_intervals(const Eigen::MatrixXd& points, FamilyBuilder& out)
{
    const auto v = distinct_coordinate(points, 0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = i; j < v.size(); ++j) out.add(Interval1d{v[i], v[j]});
    }
}

void enumerate_balls_1d(const Eigen::MatrixXd& points, FamilyBuilder& out)
{
    const auto v = distinct_coordinate(points, 0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = i; j < v.size(); ++j) {
            double margin = 0.5;
            if (i > 0) margin = std::min(margin, 0.5 * (v[i] - v[i - 1]));
            if (j + 1 < v.size()) margin = std::min(margin, 0.5 * (v[j + 1] - v[j]));
            Eigen::VectorXd center(1);
            center(0) = v[i] + 0.5 * (v[j] - v[i]);
            out.add(Ball{center, 0.5 * (v[j] - v[i]) + margin});
        }
    }
}

void enumerate_halfspaces_1d(const Eigen::MatrixXd& points, FamilyBuilder& out)
{
    const auto v = distinct_coordinate(points, 0);
    for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd n(1);
        n(0) = sign;
        for (double t : v) out.add(HalfSpace{n, sign * t});
    }
}

std::vector<Eigen::Vector2d> rows2d(const Eigen::MatrixXd& points)
{
    std::vector<Eigen::Vector2d> pts(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.rows(); ++i) pts[static_cast<std::size_t>(i)] = points.row(i).transpose();
    return pts;
}

void enumerate_halfspaces_2d(const Eigen::MatrixXd& points, FamilyBuilder& out)
{
    for (const auto& cut : detail::halfplane_cuts(rows2d(points))) {
        out.add(HalfSpace{Eigen::VectorXd(cut.normal), cut.offset});
    }
}

/// Sub-family for d >= 3: normals along point differences and the axes,
/// thresholds at every projected value.
void enumerate_halfspaces_candidates(const Eigen::MatrixXd& points, FamilyBuilder& out)
{
    const Eigen::Index m = points.rows();
    const Eigen::Index d = points.cols();
    std::vector<Eigen::VectorXd> normals;
    for (Eigen::Index j = 0; j < d; ++j) normals.push_back(Eigen::VectorXd::Unit(d, j));
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = a + 1; b < m; ++b) {
            Eigen::VectorXd diff = (points.row(b) - points.row(a)).transpose();
            if (diff.norm() > 0.0) normals.push_back(diff.normalized());
        }
    }
    for (const auto& n0 : normals) {
        for (double sign : {1.0, -1.0}) {
            const Eigen::VectorXd n = sign * n0;
            for (Eigen::Index i = 0; i < m; ++i) out.add(HalfSpace{n, n.dot(points.row(i).transpose())});
        }
    }
}

/// Sub-family for d >= 3: centers at data points and pairwise midpoints,
/// radii at every center-to-point distance.
void enumerate_balls_candidates(const Eigen::MatrixXd& points, FamilyBuilder& out)
{
    const Eigen::Index m = points.rows();
    std::vector<Eigen::VectorXd> centers;
    for (Eigen::Index a = 0; a < m; ++a) {
        centers.push_back(points.row(a).transpose());
        for (Eigen::Index b = a + 1; b < m; ++b) centers.push_back(0.5 * (points.row(a) + points.row(b)).transpose());
    }
    for (const auto& c : centers) {
        for (Eigen::Index i = 0; i < m; ++i) {
            out.add(Ball{c, (points.row(i).transpose() - c).norm()});
        }
    }
}

void require_points_dim(const SetClass& cls, const Eigen::MatrixXd& points)
{
    if (points.rows() == 0) return;
    if (cls.kind() == SetClassKind::intervals_1d) {
        if (points.cols() != 1) throw InputError("intervals-1d needs one-dimensional points");
        return;
    }
    if (static_cast<std::size_t>(points.cols()) != cls.dimension()) {
        throw InputError("class dimension " + std::to_string(cls.dimension()) + " differs from point dimension " +
                         std::to_string(points.cols()));
    }
}

}  // namespace

namespace detail {

std::vector<HalfPlaneCut> halfplane_cuts(const std::vector<Eigen::Vector2d>& points)
{
    const std::size_t m = points.size();
    std::vector<HalfPlaneCut> cuts;
    if (m == 0) return cuts;

    constexpr double two_pi = 2.0 * std::numbers::pi;
    auto wrap = [&](double a) {
        a = std::fmod(a, two_pi);
        return a < 0.0 ? a + two_pi : a;
    };
    // Projection orders change only at directions orthogonal to a point difference.
    std::vector<double> critical;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const Eigen::Vector2d d = points[j] - points[i];
            if (d.x() == 0.0 && d.y() == 0.0) continue;
            const double phi = std::atan2(d.y(), d.x());
            critical.push_back(wrap(phi + 0.5 * std::numbers::pi));
            critical.push_back(wrap(phi - 0.5 * std::numbers::pi));
        }
    }
    std::sort(critical.begin(), critical.end());
    critical.erase(std::unique(critical.begin(), critical.end()), critical.end());

    std::vector<double> directions;
    if (critical.empty()) {
        directions = {0.0, std::numbers::pi};
    } else {
        for (std::size_t k = 0; k < critical.size(); ++k) {
            const double a = critical[k];
            const double b = k + 1 < critical.size() ? critical[k + 1] : critical.front() + two_pi;
            directions.push_back(wrap(a + 0.5 * (b - a)));
        }
    }

    std::vector<std::size_t> order(m);
    std::vector<double> proj(m);
    for (double theta : directions) {
        const Eigen::Vector2d u(std::cos(theta), std::sin(theta));
        for (std::size_t i = 0; i < m; ++i) proj[i] = u.dot(points[i]);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });

        const double lo = proj[order.front()];
        const double hi = proj[order.back()];
        cuts.push_back({u, lo - 1.0 - std::abs(lo), {}});

        std::vector<std::size_t> inside;
        for (std::size_t pos = 0; pos < m; ++pos) {
            inside.push_back(order[pos]);
            if (pos + 1 < m && proj[order[pos + 1]] == proj[order[pos]]) continue;
            double offset;
            if (pos + 1 == m) {
                offset = hi + 1.0 + std::abs(hi);
            } else {
                const double a = proj[order[pos]];
                const double b = proj[order[pos + 1]];
                offset = a + 0.5 * (b - a);
                if (!(offset < b)) offset = a;
            }
            auto sorted = inside;
            std::sort(sorted.begin(), sorted.end());
            cuts.push_back({u, offset, std::move(sorted)});
        }
    }
    return cuts;
}

}  // namespace detail

InducedFamily induced_subsets(const SetClass& set_class, const Eigen::MatrixXd& points)
{
    require_points_dim(set_class, points);
    FamilyBuilder builder(points);
    builder.add(EmptySet{});
    builder.add(FullSpace{});

    InducedFamily family;
    family.exact = set_class.exact_enumeration();
    if (points.rows() == 0) {
        family.subsets = builder.take();
        return family;
    }

    const std::size_t d = static_cast<std::size_t>(points.cols());
    switch (set_class.kind()) {
    case SetClassKind::full_space_only: break;
    case SetClassKind::finite_partition: {
        std::set<int> labels;
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            labels.insert(set_class.partition()->label(points.row(i).transpose()));
        }
        for (int id : labels) builder.add(PartitionCell{set_class.partition(), id});
        break;
    }
    case SetClassKind::intervals_1d: enumerate_intervals(points, builder); break;
    case SetClassKind::l2_balls:
        if (d == 1) {
            enumerate_balls_1d(points, builder);
        } else if (d == 2) {
            detail::enumerate_disks_2d(points, [&](const SetDescriptor& w) { builder.add(w); });
        } else {
            enumerate_balls_candidates(points, builder);
        }
        break;
    case SetClassKind::half_spaces:
        if (d == 1) {
            enumerate_halfspaces_1d(points, builder);
        } else if (d == 2) {
            enumerate_halfspaces_2d(points, builder);
        } else {
            enumerate_halfspaces_candidates(points, builder);
        }
        break;
    }
    family.subsets = builder.take();
    return family;
}

bool shatters(const SetClass& set_class, const Eigen::MatrixXd& points)
{
    const auto m = static_cast<std::size_t>(points.rows());
    if (m > kShatterCap) {
        throw SizeCapError("shattering check limited to " + std::to_string(kShatterCap) + " points, got " +
                           std::to_string(m));
    }
    return induced_subsets(set_class, points).subsets.size() == (std::size_t{1} << m);
}

VcEstimate vc_estimate(const SetClass& set_class, std::size_t max_m, std::size_t sets_per_m, std::uint64_t seed)
{
    if (max_m > kShatterCap) {
        throw SizeCapError("vc estimate limited to " + std::to_string(kShatterCap) + " points");
    }
    if (sets_per_m < 1) throw ConfigError("need at least one sampled set per size");
    const auto d = static_cast<Eigen::Index>(set_class.dimension());
    VcEstimate est;
    est.sets_per_m = sets_per_m;
    for (std::size_t m = 1; m <= max_m; ++m) {
        std::size_t shattered = 0;
        for (std::size_t s = 0; s < sets_per_m; ++s) {
            auto eng = make_engine(seed, {tag(StreamTag::vc), m, s});
            std::normal_distribution<double> normal(0.0, 1.0);
            Eigen::MatrixXd pts(static_cast<Eigen::Index>(m), d);
            for (Eigen::Index i = 0; i < pts.rows(); ++i) {
                for (Eigen::Index j = 0; j < d; ++j) pts(i, j) = normal(eng);
            }
            if (shatters(set_class, pts)) ++shattered;
        }
        est.shatter_fraction.push_back(static_cast<double>(shattered) / static_cast<double>(sets_per_m));
        if (shattered > 0) est.vc_lower = m;
    }
    return est;
}

}  // namespace covlab
