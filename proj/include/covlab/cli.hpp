#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "covlab/error.hpp"
#include "covlab/report_json.hpp"
#include "covlab/sim_harness.hpp"

namespace covlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitConfig = 2;

/// Read access to one JSON config object. Every key read is copied, with its
/// default filled in, into resolved(); finish() rejects keys never read.
class ConfigNode {
public:
    ConfigNode(const Json& object, std::string path);

    bool has(const std::string& key) const;
    const Json* raw(const std::string& key);

    template <typename T>
    T get(const std::string& key, const T& fallback)
    {
        const Json* v = raw(key);
        T out = v ? convert<T>(*v, key) : fallback;
        resolved_[key] = Json(out);
        return out;
    }

    template <typename T>
    T require(const std::string& key)
    {
        const Json* v = raw(key);
        if (!v) throw ConfigError(where(key) + " is required");
        T out = convert<T>(*v, key);
        resolved_[key] = Json(out);
        return out;
    }

    double get_real(const std::string& key, double fallback);
    std::optional<std::size_t> get_optional_count(const std::string& key);

    /// Child object; an absent key reads as {}.
    ConfigNode child(const std::string& key);
    /// Stores a finished child's resolved object under key.
    void adopt(const std::string& key, ConfigNode& child);
    void store(const std::string& key, Json value) { resolved_[key] = std::move(value); seen_.insert(key); }

    void finish() const;
    const Json& resolved() const noexcept { return resolved_; }
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    template <typename T>
    T convert(const Json& v, const std::string& key) const
    {
        try {
            if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
                if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
                    throw ConfigError(where(key) + " must be a nonnegative integer");
            }
            return v.get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(where(key) + " has the wrong type: " + v.dump());
        }
    }

    Json object_;
    std::string path_;
    std::set<std::string> seen_;
    Json resolved_ = Json::object();
};

/// Sets a dotted path ("family.noise.scale") in a JSON object, creating objects on the way.
void set_dotted(Json& root, const std::string& path, Json value);
/// KEY=VALUE: VALUE is parsed as JSON when possible, otherwise taken as a string.
void apply_assignment(Json& root, const std::string& assignment);

LocationFamily parse_family(ConfigNode& node);
/// `labels` supplies the partition for {"partition": {"kind": "labels"}}.
SetClass parse_set_class(ConfigNode& node, std::size_t dimension,
                         const std::shared_ptr<const Partition>& labels = nullptr);
MethodSpec parse_method(ConfigNode& node, std::size_t dimension,
                        const std::shared_ptr<const Partition>& labels = nullptr);
RegressorOptions parse_regressor(ConfigNode& node);
SetDescriptor parse_set_descriptor(ConfigNode& node, std::size_t dimension,
                                   const std::shared_ptr<const Partition>& partition);
Eigen::VectorXd parse_point(const Json& j, std::size_t dimension, const std::string& where);

/// Reads the experiment part of a simulate or sandwich config from `root`.
ExperimentConfig parse_experiment(ConfigNode& root, std::size_t default_trials = 1000);

struct CommandResult {
    Json report;
    int exit_code = kExitOk;
    /// Where the report goes; stdout when unset.
    std::optional<std::string> out_path;
    /// Optional per-trial CSV and where to write it.
    std::optional<std::string> csv_path;
    std::string csv;
};

/// Runs one command on a config object (already merged with overrides).
/// Throws ConfigError / InputError / ParseError on bad input.
CommandResult run_command(const std::string& command, const Json& config);

/// Full entry point: parses argv, runs, writes output, maps errors to exit codes.
int main(int argc, char** argv);

}  // namespace covlab::cli
