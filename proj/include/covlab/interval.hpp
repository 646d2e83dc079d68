#pragma once

#include <limits>
#include <vector>

namespace covlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// One closed piece [lo, hi] with extended-real endpoints.
struct Piece {
    double lo;
    double hi;

    bool contains(double y) const noexcept { return lo <= y && y <= hi; }
    friend bool operator==(const Piece&, const Piece&) = default;
};

/// Finite union of disjoint closed intervals on the real line.
///
/// Pieces are kept sorted by lower endpoint and merged whenever they overlap
/// or touch, so two intervals describing the same set compare equal.
/// Degenerate pieces [a, a] are allowed and contribute zero length.
class PredictionInterval {
public:
    PredictionInterval() = default;
    explicit PredictionInterval(std::vector<Piece> pieces);

    static PredictionInterval empty() { return {}; }
    static PredictionInterval whole_line() { return PredictionInterval({{-kInf, kInf}}); }
    /// [center - half_width, center + half_width]; the whole line when half_width is +inf.
    static PredictionInterval symmetric(double center, double half_width);

    const std::vector<Piece>& pieces() const noexcept { return pieces_; }
    bool is_empty() const noexcept { return pieces_.empty(); }
    bool contains(double y) const noexcept;
    bool is_bounded() const noexcept;

    /// Hull endpoints; both NaN for the empty set.
    double lower() const noexcept;
    double upper() const noexcept;

    friend bool operator==(const PredictionInterval&, const PredictionInterval&) = default;

private:
    std::vector<Piece> pieces_;
};

/// Lebesgue measure; +inf if any piece is unbounded.
double interval_length(const PredictionInterval& interval);

/// Lebesgue measure of the symmetric difference of two unions.
double symmetric_difference_length(const PredictionInterval& a, const PredictionInterval& b);

/// Sort and merge raw pieces. Throws InputError for lo > hi or NaN endpoints.
std::vector<Piece> normalize_pieces(std::vector<Piece> pieces);

}  // namespace covlab
