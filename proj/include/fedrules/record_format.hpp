#pragma once

#include <json.hpp>

#include "fedrules/fl_client.hpp"
#include "fedrules/fl_server.hpp"
#include "fedrules/harness.hpp"
#include "fedrules/metrics.hpp"
#include "fedrules/rule_algebra.hpp"

// Structured-record (JSON) forms of every message and report. The default
// nlohmann object type keeps keys sorted, so serialization is canonical:
// equal values produce equal bytes.

namespace fedrules {

nlohmann::json schema_to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

nlohmann::json rule_to_json(const DnfRule& rule, const FeatureSchema& schema);
DnfRule rule_from_json(const nlohmann::json& j, const FeatureSchema& schema);

nlohmann::json rule_report_to_json(const RuleReport& report, const FeatureSchema& schema);
RuleReport rule_report_from_json(const nlohmann::json& j, const FeatureSchema& schema);

nlohmann::json global_round_to_json(const GlobalRound& round, const FeatureSchema& schema);

nlohmann::json metrics_to_json(const MetricsReport& metrics);

nlohmann::json run_config_to_json(const RunConfig& config);

// Canonical form: excludes wall-clock duration and raw model parameters
// (the model ships separately as a checkpoint file).
nlohmann::json run_report_to_json(const RunReport& report);

}  // namespace fedrules
