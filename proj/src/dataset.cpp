#include "covlab/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "covlab/error.hpp"
#include "covlab/rng.hpp"

namespace covlab {

Dataset::Dataset(Eigen::MatrixXd features, Eigen::VectorXd responses, std::optional<std::vector<int>> labels)
    : features_(std::move(features)), responses_(std::move(responses)), labels_(std::move(labels))
{
    if (features_.rows() != responses_.size()) {
        throw InputError("feature rows and responses differ in count");
    }
    if (responses_.size() == 0) {
        throw InputError("dataset must contain at least one row");
    }
    if (!features_.allFinite() || !responses_.allFinite()) {
        throw InputError("dataset entries must be finite");
    }
    if (labels_ && labels_->size() != size()) {
        throw InputError("label column length differs from row count");
    }
}

Dataset Dataset::select(const std::vector<std::size_t>& rows) const
{
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), features_.cols());
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    std::optional<std::vector<int>> labels;
    if (labels_) labels.emplace();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= size()) throw InputError("row index out of range");
        const auto r = static_cast<Eigen::Index>(rows[i]);
        x.row(static_cast<Eigen::Index>(i)) = features_.row(r);
        y(static_cast<Eigen::Index>(i)) = responses_(r);
        if (labels) labels->push_back((*labels_)[rows[i]]);
    }
    return Dataset(std::move(x), std::move(y), std::move(labels));
}

void CoverageSpec::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in (0, 1]");
}

SplitResult split_dataset(const Dataset& data, const SplitConfig& cfg)
{
    if (cfg.n0 < 1 || cfg.n1 < 1 || cfg.n0 + cfg.n1 != data.size()) {
        throw ConfigError("split sizes n0=" + std::to_string(cfg.n0) + ", n1=" + std::to_string(cfg.n1) +
                          " do not partition n=" + std::to_string(data.size()));
    }
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.mode == SplitMode::seeded_random) {
        auto eng = make_engine(cfg.seed, {tag(StreamTag::split)});
        // Fisher-Yates with our own uniform draw so the permutation does not
        // depend on the standard library's shuffle implementation.
        for (std::size_t i = order.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(uniform01(eng) * static_cast<double>(i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }
    }
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.n0));
    std::vector<std::size_t> calib(order.begin() + static_cast<std::ptrdiff_t>(cfg.n0), order.end());
    return {data.select(train), data.select(calib)};
}

namespace {

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, std::size_t line)
{
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ParseError(line, "expected a finite decimal value, got '" + s + "'");
    }
    return v;
}

}  // namespace

Dataset parse_dataset_csv(const std::string& text, bool require_response)
{
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            header = split_fields(line);
            break;
        }
    }
    if (header.empty()) throw ParseError(line_no, "missing header row");

    std::ptrdiff_t y_col = -1;
    std::ptrdiff_t label_col = -1;
    std::vector<std::size_t> x_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "y") {
            y_col = static_cast<std::ptrdiff_t>(c);
        } else if (header[c] == "label") {
            label_col = static_cast<std::ptrdiff_t>(c);
        } else {
            x_cols.push_back(c);
        }
    }
    if (require_response && y_col < 0) throw ParseError(line_no, "header has no 'y' column");
    if (x_cols.empty()) throw ParseError(line_no, "header has no feature columns");

    std::vector<std::vector<double>> rows;
    std::vector<double> ys;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw ParseError(line_no, "expected " + std::to_string(header.size()) + " columns, found " +
                                          std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(x_cols.size());
        for (auto c : x_cols) row.push_back(parse_number(fields[c], line_no));
        rows.push_back(std::move(row));
        ys.push_back(y_col >= 0 ? parse_number(fields[static_cast<std::size_t>(y_col)], line_no) : 0.0);
        if (label_col >= 0) {
            const double lv = parse_number(fields[static_cast<std::size_t>(label_col)], line_no);
            if (lv != std::floor(lv)) throw ParseError(line_no, "label must be an integer");
            labels.push_back(static_cast<int>(lv));
        }
    }
    if (rows.empty()) throw ParseError(line_no, "no data rows");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(x_cols.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < x_cols.size(); ++j) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        y(static_cast<Eigen::Index>(i)) = ys[i];
    }
    std::optional<std::vector<int>> lab;
    if (label_col >= 0) lab = std::move(labels);
    return Dataset(std::move(x), std::move(y), std::move(lab));
}

Dataset read_dataset_csv(const std::string& path, bool require_response)
{
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_dataset_csv(buf.str(), require_response);
}

std::string format_dataset_csv(const Dataset& data)
{
    std::ostringstream out;
    out.precision(17);
    for (std::size_t j = 0; j < data.dimension(); ++j) out << 'x' << (j + 1) << ',';
    if (data.labels()) out << "label,";
    out << "y\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.dimension(); ++j) {
            out << data.features()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) << ',';
        }
        if (data.labels()) out << (*data.labels())[i] << ',';
        out << data.response(i) << '\n';
    }
    return out.str();
}

}  // namespace covlab
