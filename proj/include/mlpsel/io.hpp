#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlpsel/dataset.hpp"
#include "mlpsel/identifiability.hpp"
#include "mlpsel/mlp.hpp"
#include "mlpsel/optimizer.hpp"
#include "mlpsel/selection.hpp"
#include "mlpsel/simulate.hpp"

namespace mlpsel::io {

// Shortest-exact double formatting for text outputs ("%.17g").
std::string fmt(double v);

// Writes content to path via a temporary file and rename, so a failed run
// never leaves a partial output behind.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

// Rejects unknown keys so config typos fail fast instead of being ignored.
void require_keys(const nlohmann::json& j, const std::string& context,
                  const std::vector<std::string>& allowed);

// Parameter file: {"k":., "d":., "transfer":"tanh"|"logistic", "flat_theta":[...]}
// with flat_theta in the (beta, a_1..a_k, b_1..b_k, w_11..w_kd) order.
nlohmann::json params_to_json(const MlpParams& theta, Transfer transfer);
std::pair<MlpParams, Transfer> params_from_json(const nlohmann::json& j);
void write_params(const std::filesystem::path& path, const MlpParams& theta, Transfer transfer);
std::pair<MlpParams, Transfer> read_params(const std::filesystem::path& path);

// Dataset CSV: header x1..xd,y then one row per observation.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

// CSV/JSON emitters. header_lines are echoed as leading '#' comments.
std::string selection_csv(const SelectionResult& sel, const std::vector<std::string>& header_lines);
nlohmann::json selection_json(const SelectionResult& sel, Transfer transfer);
std::string consistency_csv(const ConsistencyTable& table,
                            const std::vector<std::string>& header_lines);
nlohmann::json consistency_json(const ConsistencyTable& table);
std::string consistency_raw_csv(const ConsistencyTable& table,
                                const std::vector<std::string>& header_lines);
std::string lrs_csv(const LrsTable& table, const std::vector<std::string>& header_lines);
nlohmann::json lrs_json(const LrsTable& table);
std::string gram_csv(const GramReport& rep, const std::vector<std::string>& header_lines);
nlohmann::json gram_json(const GramReport& rep);
std::string h4_csv(const H4Report& rep, const std::vector<std::string>& header_lines);

struct ExpandRow {
  int path = 0;
  double h = 0.0;
  double D = 0.0;
  double remainder = 0.0;       // mean |ratio - 1 - first - second/2| over the z sample
  double remainder_over_D = 0.0;
};
std::string expand_csv(const std::vector<ExpandRow>& rows,
                       const std::vector<std::string>& header_lines);

}  // namespace mlpsel::io
