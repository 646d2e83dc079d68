#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace covlab {

using Point = Eigen::VectorXd;

/// (X_i, Y_i) sample: an n x d feature matrix and n responses.
///
/// Optionally carries one integer label per row, used by partition classes
/// whose cells are given explicitly rather than by a grid.
class Dataset {
public:
    Dataset() = default;
    /// Throws InputError if row counts differ, n == 0, or any entry is non-finite.
    Dataset(Eigen::MatrixXd features, Eigen::VectorXd responses,
            std::optional<std::vector<int>> labels = std::nullopt);

    std::size_t size() const noexcept { return static_cast<std::size_t>(responses_.size()); }
    std::size_t dimension() const noexcept { return static_cast<std::size_t>(features_.cols()); }

    const Eigen::MatrixXd& features() const noexcept { return features_; }
    const Eigen::VectorXd& responses() const noexcept { return responses_; }
    const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }

    Point row(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)).transpose(); }
    double response(std::size_t i) const { return responses_(static_cast<Eigen::Index>(i)); }

    /// New dataset made of the given rows, in the given order.
    Dataset select(const std::vector<std::size_t>& rows) const;

private:
    Eigen::MatrixXd features_;
    Eigen::VectorXd responses_;
    std::optional<std::vector<int>> labels_;
};

enum class SplitMode { first_rows, seeded_random };

struct SplitConfig {
    std::size_t n0 = 0;
    std::size_t n1 = 0;
    std::uint64_t seed = 0;
    SplitMode mode = SplitMode::seeded_random;
};

struct CoverageSpec {
    double alpha = 0.1;
    double delta = 1.0;

    /// Throws ConfigError unless 0 < alpha < 1 and 0 < delta <= 1.
    void validate() const;
};

struct SplitResult {
    Dataset train;
    Dataset calib;
};

/// Partition rows into a model-fitting part (n0 rows) and a calibration part (n1 rows).
SplitResult split_dataset(const Dataset& data, const SplitConfig& cfg);

/// Reads "x1,...,xd,y" CSV with a header row. A column named "label" is
/// taken as the partition label. When `require_response` is false the y
/// column may be absent and responses are filled with zeros.
Dataset read_dataset_csv(const std::string& path, bool require_response = true);
Dataset parse_dataset_csv(const std::string& text, bool require_response = true);

std::string format_dataset_csv(const Dataset& data);

}  // namespace covlab
