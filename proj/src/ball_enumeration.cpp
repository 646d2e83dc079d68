// Exact enumeration of the subsets of a planar point set cut out by closed disks.
//
// Lifting p -> (p, |p|^2) turns disks into lower half-spaces {z <= 2c.p + r^2 - |c|^2}
// and lines into vertical planes. Each realizable subset is a cell of the
// arrangement of lifted points' dual planes, and every cell that meets the
// region of upward-pointing normals touches a vertex: a plane through three
// lifted points. We visit every such plane, then perturb it in all ways that
// separate its on-plane points differently, and map the perturbed plane back
// to a disk. Four far-away auxiliary points make the arrangement essential so
// degenerate inputs (collinear, cocircular, m < 4) still have vertices; they
// only refine cells and never appear in the output.

#include <algorithm>
#include <cmath>
#include <vector>

#include "covlab/set_classes.hpp"

namespace covlab::detail {

namespace {

struct Frame {
    Eigen::Vector2d origin = Eigen::Vector2d::Zero();
    double scale = 1.0;

    Ball to_ball(const Eigen::Vector2d& center, double radius) const
    {
        return Ball{Eigen::VectorXd(origin + scale * center), scale * radius};
    }
};

Eigen::Vector3d lift(const Eigen::Vector2d& p)
{
    return {p.x(), p.y(), p.squaredNorm()};
}

/// Disk approximating {u.p <= t} on the given points: center pushed far along -u.
void emit_halfplane_disk(const Eigen::Vector2d& u, double t, const std::vector<Eigen::Vector2d>& pts,
                         const Frame& frame, const std::function<void(const SetDescriptor&)>& emit)
{
    const Eigen::Vector2d foot = t * u;
    double radius = 1.0;
    bool any_inside = false;
    for (const auto& p : pts) {
        const double gap = t - u.dot(p);
        if (gap > 0.0) {
            any_inside = true;
            radius = std::max(radius, (p - foot).squaredNorm() / gap);
        }
    }
    if (!any_inside) return;
    radius *= 2.0;
    emit(frame.to_ball(foot - radius * u, radius));
}

/// Disks close to the vertical plane {u.p = t}: on-line points selected as a
/// contiguous run, off-line points on the side given by the plane.
void emit_line_runs(const Eigen::Vector2d& u, double t, const std::vector<std::size_t>& on_line,
                    const std::vector<Eigen::Vector2d>& pts, const Frame& frame,
                    const std::function<void(const SetDescriptor&)>& emit)
{
    const Eigen::Vector2d e(-u.y(), u.x());
    std::vector<double> s;
    for (auto i : on_line) s.push_back(e.dot(pts[i]));
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    const std::size_t k = s.size();

    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a; b < k; ++b) {
            if (a == 0 && b + 1 == k) continue;  // full run is a half-plane pattern
            double margin = 0.5;
            if (a > 0) margin = std::min(margin, 0.5 * (s[a] - s[a - 1]));
            if (b + 1 < k) margin = std::min(margin, 0.5 * (s[b + 1] - s[b]));
            const double mid = s[a] + 0.5 * (s[b] - s[a]);
            const double h = 0.5 * (s[b] - s[a]) + margin;
            const Eigen::Vector2d foot = t * u + mid * e;

            double big = 1.0;
            for (std::size_t l = 0; l < pts.size(); ++l) {
                if (std::binary_search(on_line.begin(), on_line.end(), l)) continue;
                const auto& p = pts[l];
                const double gamma = t - u.dot(p);
                const double along = e.dot(p) - mid;
                if (gamma > 0.0) {
                    big = std::max(big, (along * along + gamma * gamma - h * h) / (2.0 * gamma));
                } else if (gamma < 0.0) {
                    big = std::max(big, (h * h - along * along - gamma * gamma) / (-2.0 * gamma));
                }
            }
            big *= 2.0;
            emit(frame.to_ball(foot - big * u, std::sqrt(big * big + h * h)));
        }
    }
}

}  // namespace

void enumerate_disks_2d(const Eigen::MatrixXd& points, const std::function<void(const SetDescriptor&)>& emit)
{
    const auto m = static_cast<std::size_t>(points.rows());
    if (m == 0) return;

    Frame frame;
    for (std::size_t i = 0; i < m; ++i) frame.origin += points.row(static_cast<Eigen::Index>(i)).transpose();
    frame.origin /= static_cast<double>(m);
    double radius = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        radius = std::max(radius, (points.row(static_cast<Eigen::Index>(i)).transpose() - frame.origin).norm());
    }
    frame.scale = radius > 0.0 ? radius : 1.0;

    std::vector<Eigen::Vector2d> pts(m);
    for (std::size_t i = 0; i < m; ++i) {
        pts[i] = (points.row(static_cast<Eigen::Index>(i)).transpose() - frame.origin) / frame.scale;
    }

    // Half-plane patterns are limits of disks.
    for (const auto& cut : halfplane_cuts(pts)) emit_halfplane_disk(cut.normal, cut.offset, pts, frame, emit);

    std::vector<Eigen::Vector2d> all = pts;
    for (const Eigen::Vector2d& v : {Eigen::Vector2d(3.17, 0.41), Eigen::Vector2d(-2.63, 2.29),
                                    Eigen::Vector2d(-0.73, -3.37), Eigen::Vector2d(2.11, -2.83)}) {
        all.push_back(v);
    }
    std::vector<Eigen::Vector3d> lifted;
    lifted.reserve(all.size());
    for (const auto& p : all) lifted.push_back(lift(p));

    const std::size_t total = all.size();
    constexpr double plane_tol = 1e-11;
    std::vector<double> side(m);
    std::vector<std::size_t> on_plane;

    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t j = i + 1; j < total; ++j) {
            if (all[i] == all[j]) continue;
            for (std::size_t k = j + 1; k < total; ++k) {
                if (all[k] == all[i] || all[k] == all[j]) continue;
                Eigen::Vector3d n = (lifted[j] - lifted[i]).cross(lifted[k] - lifted[i]);
                const double norm = n.norm();
                if (norm < 1e-13) continue;
                n /= norm;
                const double t0 = n.dot(lifted[i]);

                on_plane.clear();
                for (std::size_t l = 0; l < m; ++l) {
                    side[l] = n.dot(lifted[l]) - t0;
                    if (std::abs(side[l]) <= plane_tol * (1.0 + lifted[l].norm())) {
                        side[l] = 0.0;
                        on_plane.push_back(l);
                    }
                }

                for (double orient : {1.0, -1.0}) {
                    const Eigen::Vector3d w = orient * n;
                    const double t = orient * t0;

                    if (std::abs(w.z()) <= 1e-12) {
                        // Vertical plane: the lifted points of a line. Runs along the line.
                        if (on_plane.empty()) continue;
                        const Eigen::Vector2d wxy(w.x(), w.y());
                        const double len = wxy.norm();
                        emit_line_runs(wxy / len, t / len, on_plane, pts, frame, emit);
                        continue;
                    }
                    if (w.z() < 0.0) continue;  // upper half-spaces are disk complements

                    // Orthonormal frame of the plane, anchored at lifted[i].
                    const Eigen::Vector3d e1 = (lifted[j] - lifted[i]).normalized();
                    const Eigen::Vector3d e2 = w.cross(e1).normalized();
                    std::vector<Eigen::Vector2d> plane_pts;
                    for (auto l : on_plane) {
                        const Eigen::Vector3d r = lifted[l] - lifted[i];
                        plane_pts.emplace_back(e1.dot(r), e2.dot(r));
                    }
                    std::vector<HalfPlaneCut> cuts =
                        plane_pts.empty() ? std::vector<HalfPlaneCut>{{Eigen::Vector2d(1.0, 0.0), 0.0, {}}}
                                          : halfplane_cuts(plane_pts);

                    for (const auto& cut : cuts) {
                        const Eigen::Vector3d dw = cut.normal.x() * e1 + cut.normal.y() * e2;
                        const double dt = dw.dot(lifted[i]) + cut.offset;
                        // Step small enough that no off-plane point changes side and the normal stays upward.
                        double eps = 1.0;
                        for (std::size_t l = 0; l < m; ++l) {
                            if (side[l] == 0.0) continue;
                            const double g = std::abs(dw.dot(lifted[l]) - dt);
                            if (g > 0.0) eps = std::min(eps, 0.5 * std::abs(side[l]) / g);
                        }
                        if (dw.z() < 0.0) eps = std::min(eps, 0.5 * w.z() / -dw.z());

                        const Eigen::Vector3d wp = w + eps * dw;
                        const double tp = t + eps * dt;
                        const Eigen::Vector2d center(-wp.x() / (2.0 * wp.z()), -wp.y() / (2.0 * wp.z()));
                        const double r2 = tp / wp.z() + center.squaredNorm();
                        if (r2 < 0.0) continue;
                        emit(frame.to_ball(center, std::sqrt(r2)));
                    }
                }
            }
        }
    }
}

}  // namespace covlab::detail
