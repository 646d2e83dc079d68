#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "covlab/dataset.hpp"

namespace covlab {

/// Labels feature vectors with cell ids of a finite partition of R^d.
///
/// Either a grid (per-dimension ascending cut points, cells half-open on the
/// right: [c_k, c_{k+1})) or an explicit lookup table from feature vectors to
/// integer labels, built from a labeled dataset.
class Partition {
public:
    static std::shared_ptr<const Partition> grid(std::vector<std::vector<double>> cuts);
    static std::shared_ptr<const Partition> from_labels(const Dataset& labeled);
    /// Adds the labeled rows of another dataset to an explicit table.
    static std::shared_ptr<const Partition> extend(const Partition& base, const Dataset& labeled);

    std::size_t dimension() const noexcept { return dim_; }
    std::size_t cell_count() const noexcept { return cells_; }
    bool is_grid() const noexcept { return grid_; }
    const std::vector<std::vector<double>>& cuts() const noexcept { return cuts_; }

    /// Every cell id: 0..cell_count()-1 for grids, the distinct labels otherwise.
    std::vector<int> cell_ids() const;

    /// Throws InputError on dimension mismatch or an unlabeled point.
    int label(const Eigen::Ref<const Eigen::VectorXd>& x) const;

private:
    bool grid_ = true;
    std::size_t dim_ = 0;
    std::size_t cells_ = 1;
    std::vector<std::vector<double>> cuts_;
    std::map<std::vector<double>, int> table_;
};

struct FullSpace {};
struct EmptySet {};
struct PartitionCell {
    std::shared_ptr<const Partition> partition;
    int id = 0;
};
/// Closed interval [lo, hi] on the first coordinate.
struct Interval1d {
    double lo = 0.0;
    double hi = 0.0;
};
/// Closed l2 ball.
struct Ball {
    Eigen::VectorXd center;
    double radius = 0.0;
};
/// Closed half-space {x : <normal, x> <= offset}.
struct HalfSpace {
    Eigen::VectorXd normal;
    double offset = 0.0;
};

using SetDescriptor = std::variant<FullSpace, EmptySet, PartitionCell, Interval1d, Ball, HalfSpace>;

/// Closed-set membership. Throws InputError on dimension mismatch.
bool contains(const SetDescriptor& set, const Eigen::Ref<const Eigen::VectorXd>& x);

std::string describe(const SetDescriptor& set);

enum class SetClassKind { full_space_only, finite_partition, intervals_1d, l2_balls, half_spaces };

std::string to_string(SetClassKind kind);
SetClassKind parse_set_class_kind(const std::string& name);

/// A class of feature-space subsets. R^d and the empty set are always members.
class SetClass {
public:
    static SetClass full_space_only(std::size_t dimension);
    static SetClass finite_partition(std::shared_ptr<const Partition> partition);
    static SetClass intervals_1d();
    static SetClass l2_balls(std::size_t dimension);
    static SetClass half_spaces(std::size_t dimension);

    SetClassKind kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept { return dim_; }
    const std::shared_ptr<const Partition>& partition() const noexcept { return partition_; }
    /// True when induced_subsets returns the complete induced family.
    bool exact_enumeration() const noexcept;
    std::string name() const { return to_string(kind_); }

private:
    SetClassKind kind_ = SetClassKind::full_space_only;
    std::size_t dim_ = 1;
    std::shared_ptr<const Partition> partition_;
};

/// Indices (ascending) of the listed points lying in `witness`.
struct InducedSubset {
    std::vector<std::size_t> indices;
    SetDescriptor witness;
};

struct InducedFamily {
    /// Distinct subsets ordered by (size, lexicographic index order).
    std::vector<InducedSubset> subsets;
    bool exact = true;
};

/// Every distinct subset of the rows of `points` cut out by a member of the
/// class, each with a witness whose membership reproduces it exactly.
/// Exact for full-space-only, finite-partition, intervals-1d and for balls
/// and half-spaces in d <= 2; candidate-based (a sub-family) otherwise.
InducedFamily induced_subsets(const SetClass& set_class, const Eigen::MatrixXd& points);

inline constexpr std::size_t kShatterCap = 25;

/// True iff every subset of the rows is induced. Throws SizeCapError above kShatterCap points.
bool shatters(const SetClass& set_class, const Eigen::MatrixXd& points);

struct VcEstimate {
    /// Largest m for which some sampled m-point set was shattered.
    std::size_t vc_lower = 0;
    /// shatter_fraction[m - 1]: fraction of sampled m-point sets that were shattered.
    std::vector<double> shatter_fraction;
    std::size_t sets_per_m = 0;
};

/// Samples `sets_per_m` standard-normal point sets of each size 1..max_m and
/// checks which are shattered.
VcEstimate vc_estimate(const SetClass& set_class, std::size_t max_m, std::size_t sets_per_m, std::uint64_t seed);

namespace detail {

/// Exact disk-induced subsets of planar points; exposed for testing.
void enumerate_disks_2d(const Eigen::MatrixXd& points, const std::function<void(const SetDescriptor&)>& emit);

/// Half-plane separations of planar points as (normal, offset, inside indices).
struct HalfPlaneCut {
    Eigen::Vector2d normal;
    double offset = 0.0;
    std::vector<std::size_t> inside;
};
/// Offsets sit strictly between the last included and first excluded
/// projection, or 1 beyond the extremes for the empty and full cuts.
std::vector<HalfPlaneCut> halfplane_cuts(const std::vector<Eigen::Vector2d>& points);

}  // namespace detail

}  // namespace covlab
