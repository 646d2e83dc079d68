#pragma once

#include <string>

#include <json.hpp>

#include "covlab/oracle_bounds.hpp"
#include "covlab/sim_harness.hpp"

namespace covlab {

using Json = nlohmann::ordered_json;

/// Doubles as JSON numbers; +-inf as the strings "inf" / "-inf", NaN as null.
Json extended_real(double v);
/// Inverse of extended_real; also accepts plain numbers.
double parse_extended_real(const Json& j);

Json to_json(const PredictionInterval& interval);
Json to_json(const Proportion& p);
Json to_json(const SetDescriptor& set);
Json to_json(const SetClass& set_class);
Json to_json(const LocationFamily& family);
Json to_json(const HardnessBound& bound);
Json to_json(const SandwichLevels& levels);
Json to_json(const ExperimentConfig& cfg);
Json to_json(const CoverageReport& report);
Json to_json(const SandwichReport& report);

/// Two-space indented dump with a trailing newline.
std::string dump_json(const Json& j);

/// trial,probe_id,covered,length
std::string format_records_csv(const CoverageReport& report);

}  // namespace covlab
