#pragma once

#include <string>

#include <json.hpp>

#include "properpo/constructors.hpp"
#include "properpo/dpo_pipeline.hpp"
#include "properpo/klst.hpp"
#include "properpo/loss_catalog.hpp"
#include "properpo/trainer.hpp"

namespace properpo::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Malformed JSON text, with 1-based line and column.
struct ParseError : InvalidArgument {
    std::size_t line = 0, column = 0;
    ParseError(const std::string& what, std::size_t l, std::size_t c) : InvalidArgument(what), line(l), column(c) {}
};

/// Schema violation; `path` names the offending field, e.g. "spec.margin.a".
struct SchemaError : InvalidArgument {
    std::string path;
    SchemaError(const std::string& p, const std::string& what) : InvalidArgument(p + ": " + what), path(p) {}
};

json parse_text(const std::string& text);
json read_file(const std::string& path);

/// FNV-1a over the canonical dump, as 16 hex digits.
std::string config_hash(const json& config);

json to_json(const ProperCertificate& c);
json to_json(const FConditionReport& r);
json to_json(const EligibilityReport& r);
json to_json(const AxiomVerdict& v);
json to_json(const KlstCertificate& c);
json to_json(const Representation& r);
json to_json(const ChoiceTable& t);
json to_json(const SeparabilityReport& r);

ChoiceTable table_from_json(const json& j, const std::string& path = "table");
catalog::Params params_from_json(const json& j, const std::string& path);

/// {"recipe": "pppo" | "pmpo" | "phi_po" | "dpo", "n": ..., ...}; see README.
PipelineSpec spec_from_json(const json& j, const std::string& path = "spec");
TaskParams task_from_json(const json& j, const std::string& path = "task");
TrainOptions train_options_from_json(const json& j, const std::string& path = "train");

}  // namespace properpo::io
