#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "snm/linalg.hpp"

namespace snm {

enum class ExperimentTag { Ex1Bands, Ex1BetaSweep, Ex1Violation, Ex2Shrink };

std::string_view to_string(ExperimentTag tag);
ExperimentTag experiment_tag_from_string(std::string_view name);

/// Fixed CSV column schema of each experiment.
const std::vector<std::string>& schema_columns(ExperimentTag tag);

inline constexpr int kSchemaVersion = 1;

using Cell = std::variant<std::int64_t, double, ExtendedReal, std::string>;

struct FigureRow {
  std::uint64_t run = 0;  ///< shard-independent ordering key, not printed unless in the schema
  std::vector<Cell> cells;
};

struct FigureData {
  ExperimentTag experiment = ExperimentTag::Ex1Bands;
  std::vector<FigureRow> rows;
  nlohmann::json meta = nlohmann::json::object();

  const std::vector<std::string>& columns() const { return schema_columns(experiment); }
  /// Index of `name` in the schema; throws SCHEMA_MISMATCH when absent.
  std::size_t column(std::string_view name) const;
};

std::string cell_to_string(const Cell& c);
double cell_to_double(const Cell& c);

/// Header row plus one line per row; "inf" for UNBOUNDED.
std::string to_csv(const FigureData& data);
/// Array of objects keyed by the schema columns.
nlohmann::json to_json_rows(const FigureData& data);

/// Combines shards of one experiment. Count tables (EX1_VIOLATION) are summed
/// per (delta, method) and their rates recomputed; other tables are
/// concatenated and stably ordered by run index. Throws SCHEMA_MISMATCH when
/// the inputs disagree on the experiment or a row has the wrong width.
FigureData aggregate(const std::vector<FigureData>& parts);

}  // namespace snm
