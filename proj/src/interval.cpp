#include "covlab/interval.hpp"

#include <algorithm>
#include <cmath>

#include "covlab/error.hpp"

namespace covlab {

std::vector<Piece> normalize_pieces(std::vector<Piece> pieces)
{
    for (const auto& p : pieces) {
        if (std::isnan(p.lo) || std::isnan(p.hi) || p.lo > p.hi) {
            throw InputError("interval piece must satisfy lo <= hi");
        }
    }
    std::sort(pieces.begin(), pieces.end(),
              [](const Piece& a, const Piece& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });

    std::vector<Piece> merged;
    merged.reserve(pieces.size());
    for (const auto& p : pieces) {
        if (!merged.empty() && p.lo <= merged.back().hi) {
            merged.back().hi = std::max(merged.back().hi, p.hi);
        } else {
            merged.push_back(p);
        }
    }
    return merged;
}

PredictionInterval::PredictionInterval(std::vector<Piece> pieces)
    : pieces_(normalize_pieces(std::move(pieces)))
{
}

PredictionInterval PredictionInterval::symmetric(double center, double half_width)
{
    if (std::isnan(half_width) || half_width < 0.0) {
        throw InputError("half width must be nonnegative or +inf");
    }
    if (std::isinf(half_width)) {
        return whole_line();
    }
    return PredictionInterval({{center - half_width, center + half_width}});
}

bool PredictionInterval::contains(double y) const noexcept
{
    // pieces are sorted, so find the last piece starting at or before y
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), y,
                               [](double v, const Piece& p) { return v < p.lo; });
    if (it == pieces_.begin()) {
        return false;
    }
    return std::prev(it)->contains(y);
}

bool PredictionInterval::is_bounded() const noexcept
{
    return pieces_.empty() || (std::isfinite(pieces_.front().lo) && std::isfinite(pieces_.back().hi));
}

double PredictionInterval::lower() const noexcept
{
    return pieces_.empty() ? std::nan("") : pieces_.front().lo;
}

double PredictionInterval::upper() const noexcept
{
    return pieces_.empty() ? std::nan("") : pieces_.back().hi;
}

double interval_length(const PredictionInterval& interval)
{
    double total = 0.0;
    for (const auto& p : interval.pieces()) {
        if (std::isinf(p.lo) || std::isinf(p.hi)) {
            return kInf;
        }
        total += p.hi - p.lo;
    }
    return total;
}

double symmetric_difference_length(const PredictionInterval& a, const PredictionInterval& b)
{
    std::vector<double> cuts;
    for (const auto* iv : {&a, &b}) {
        for (const auto& p : iv->pieces()) {
            if (std::isfinite(p.lo)) cuts.push_back(p.lo);
            if (std::isfinite(p.hi)) cuts.push_back(p.hi);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Membership is constant on each open segment between consecutive cuts.
    auto differs = [&](double probe) { return a.contains(probe) != b.contains(probe); };

    if (cuts.empty()) {
        return differs(0.0) ? kInf : 0.0;
    }
    if (differs(cuts.front() - 1.0) || differs(cuts.back() + 1.0)) {
        return kInf;
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double mid = cuts[i] + 0.5 * (cuts[i + 1] - cuts[i]);
        if (differs(mid)) {
            total += cuts[i + 1] - cuts[i];
        }
    }
    return total;
}

}  // namespace covlab
