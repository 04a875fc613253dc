#include "snm/figure_data.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "snm/error.hpp"
#include "snm/io.hpp"

namespace snm {

std::string_view to_string(ExperimentTag tag) {
  switch (tag) {
    case ExperimentTag::Ex1Bands: return "EX1_BANDS";
    case ExperimentTag::Ex1BetaSweep: return "EX1_BETA_SWEEP";
    case ExperimentTag::Ex1Violation: return "EX1_VIOLATION";
    case ExperimentTag::Ex2Shrink: return "EX2_SHRINK";
  }
  return "UNKNOWN";
}

ExperimentTag experiment_tag_from_string(std::string_view name) {
  for (auto tag : {ExperimentTag::Ex1Bands, ExperimentTag::Ex1BetaSweep,
                   ExperimentTag::Ex1Violation, ExperimentTag::Ex2Shrink}) {
    if (to_string(tag) == name) return tag;
  }
  throw Error(ErrorCode::SchemaMismatch, "unknown experiment tag: " + std::string(name));
}

const std::vector<std::string>& schema_columns(ExperimentTag tag) {
  static const std::vector<std::string> bands{"run", "u", "g_true", "g_hat", "band_halfwidth"};
  static const std::vector<std::string> sweep{"run", "c_theta", "lhs", "beta_thm2",
                                              "beta_existing"};
  static const std::vector<std::string> violation{"delta", "method", "n_runs", "n_violations",
                                                  "rate"};
  static const std::vector<std::string> shrink{"t", "method", "lhs", "rhs"};
  switch (tag) {
    case ExperimentTag::Ex1Bands: return bands;
    case ExperimentTag::Ex1BetaSweep: return sweep;
    case ExperimentTag::Ex1Violation: return violation;
    case ExperimentTag::Ex2Shrink: return shrink;
  }
  throw Error(ErrorCode::SchemaMismatch, "unknown experiment tag");
}

std::size_t FigureData::column(std::string_view name) const {
  const auto& cols = columns();
  const auto it = std::find(cols.begin(), cols.end(), name);
  if (it == cols.end()) throw Error(ErrorCode::SchemaMismatch, "no column " + std::string(name));
  return static_cast<std::size_t>(it - cols.begin());
}

std::string cell_to_string(const Cell& c) {
  struct Visitor {
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const ExtendedReal& v) const {
      return v.is_finite() ? format_double(v.value()) : "inf";
    }
    std::string operator()(const std::string& v) const { return v; }
  };
  return std::visit(Visitor{}, c);
}

double cell_to_double(const Cell& c) {
  struct Visitor {
    double operator()(std::int64_t v) const { return static_cast<double>(v); }
    double operator()(double v) const { return v; }
    double operator()(const ExtendedReal& v) const { return v.to_double(); }
    double operator()(const std::string&) const {
      throw Error(ErrorCode::SchemaMismatch, "string cell is not numeric");
    }
  };
  return std::visit(Visitor{}, c);
}

std::string to_csv(const FigureData& data) {
  std::ostringstream out;
  const auto& cols = data.columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& row : data.rows) {
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      out << (i ? "," : "") << cell_to_string(row.cells[i]);
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json to_json_rows(const FigureData& data) {
  nlohmann::json arr = nlohmann::json::array();
  const auto& cols = data.columns();
  for (const auto& row : data.rows) {
    nlohmann::json obj = nlohmann::json::object();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const Cell& c = row.cells[i];
      if (const auto* v = std::get_if<std::int64_t>(&c)) {
        obj[cols[i]] = *v;
      } else if (const auto* d = std::get_if<double>(&c)) {
        obj[cols[i]] = *d;
      } else if (const auto* e = std::get_if<ExtendedReal>(&c)) {
        if (e->is_finite()) {
          obj[cols[i]] = e->value();
        } else {
          obj[cols[i]] = "inf";
        }
      } else {
        obj[cols[i]] = std::get<std::string>(c);
      }
    }
    arr.push_back(std::move(obj));
  }
  return arr;
}

FigureData aggregate(const std::vector<FigureData>& parts) {
  if (parts.empty()) throw Error(ErrorCode::SchemaMismatch, "nothing to aggregate");
  FigureData out;
  out.experiment = parts.front().experiment;
  out.meta = parts.front().meta;
  const std::size_t width = out.columns().size();
  for (const auto& p : parts) {
    if (p.experiment != out.experiment) {
      throw Error(ErrorCode::SchemaMismatch, "cannot aggregate " + std::string(to_string(p.experiment)) +
                                                 " into " + std::string(to_string(out.experiment)));
    }
    for (const auto& row : p.rows) {
      if (row.cells.size() != width) throw Error(ErrorCode::SchemaMismatch, "row width");
    }
  }

  if (out.experiment == ExperimentTag::Ex1Violation) {
    std::map<std::pair<double, std::string>, std::pair<std::int64_t, std::int64_t>> counts;
    for (const auto& p : parts) {
      for (const auto& row : p.rows) {
        const auto key = std::make_pair(std::get<double>(row.cells[0]),
                                        std::get<std::string>(row.cells[1]));
        auto& acc = counts[key];
        acc.first += std::get<std::int64_t>(row.cells[2]);
        acc.second += std::get<std::int64_t>(row.cells[3]);
      }
    }
    for (const auto& [key, acc] : counts) {
      const double rate = acc.first ? static_cast<double>(acc.second) / acc.first : 0.0;
      out.rows.push_back({0, {key.first, key.second, acc.first, acc.second, rate}});
    }
    return out;
  }

  for (const auto& p : parts) out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const FigureRow& a, const FigureRow& b) { return a.run < b.run; });
  return out;
}

}  // namespace snm
