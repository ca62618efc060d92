#include "maff/survey.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "csv_common.hpp"
#include "maff/errors.hpp"

namespace maff {

std::size_t SurveyDataset::febrile_count() const {
  std::size_t n = 0;
  for (const auto &rec : records) n += rec.fever ? 1 : 0;
  return n;
}

std::size_t SurveyDataset::afebrile_count() const {
  return records.size() - febrile_count();
}

std::vector<double> SurveyDataset::febrile_densities() const {
  std::vector<double> out;
  for (const auto &rec : records)
    if (rec.fever) out.push_back(rec.density);
  return out;
}

std::vector<double> SurveyDataset::afebrile_densities() const {
  std::vector<double> out;
  for (const auto &rec : records)
    if (!rec.fever) out.push_back(rec.density);
  return out;
}

double SurveyDataset::max_density() const {
  double best = 0.0;
  for (const auto &rec : records) best = std::max(best, rec.density);
  return best;
}

void SurveyDataset::validate() const {
  if (records.empty()) throw ValidationError("dataset is empty");
  for (const auto &rec : records)
    if (!(rec.density >= 0.0) || !std::isfinite(rec.density))
      throw ValidationError("densities must be finite and nonnegative");
}

double SummaryTable::fever_prevalence() const {
  if (n() == 0) throw ValidationError("empty summary table");
  return static_cast<double>(febrile()) / static_cast<double>(n());
}

double SummaryTable::positive_given_febrile() const {
  if (febrile() == 0)
    throw ValidationError("no febrile records: p_f is undefined");
  return static_cast<double>(febrile_positive) /
         static_cast<double>(febrile());
}

double SummaryTable::positive_given_afebrile() const {
  if (afebrile() == 0)
    throw ValidationError("no afebrile records: p_a is undefined");
  return static_cast<double>(afebrile_positive) /
         static_cast<double>(afebrile());
}

SurveyDataset parse_survey_csv(std::istream &in) {
  const auto rows = csv::read_rows(in, "fever,density");
  SurveyDataset dataset;
  dataset.records.reserve(rows.size());
  for (const auto &row : rows) {
    if (row.fields.size() != 2)
      throw ParseError("expected 2 fields", row.line);
    SurveyRecord rec;
    const std::string &fever = row.fields[0];
    if (fever == "0")
      rec.fever = false;
    else if (fever == "1")
      rec.fever = true;
    else
      throw ParseError("fever must be 0 or 1, got '" + fever + "'", row.line);
    rec.density = csv::parse_number(row.fields[1], row.line, "density");
    if (!(rec.density >= 0.0) || !std::isfinite(rec.density))
      throw ParseError("density must be finite and nonnegative", row.line);
    dataset.records.push_back(rec);
  }
  if (dataset.records.empty()) throw ParseError("no records in file");
  return dataset;
}

SurveyDataset load_survey_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_survey_csv(in);
}

std::string format_double(double value) {
  // %.17g always round-trips; prefer the shorter %.15g form when it does.
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", value);
  if (std::strtod(buf, nullptr) != value)
    std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void serialize_survey_csv(const SurveyDataset &dataset, std::ostream &out) {
  out << "fever,density\n";
  for (const auto &rec : dataset.records)
    out << (rec.fever ? '1' : '0') << ',' << format_double(rec.density)
        << '\n';
}

SummaryTable summarize(const SurveyDataset &dataset) {
  dataset.validate();
  SummaryTable table;
  for (const auto &rec : dataset.records) {
    const bool positive = rec.density > 0.0;
    if (rec.fever)
      ++(positive ? table.febrile_positive : table.febrile_zero);
    else
      ++(positive ? table.afebrile_positive : table.afebrile_zero);
  }
  if (table.febrile() == 0)
    throw ValidationError("no febrile records: p_f is undefined");
  if (table.afebrile() == 0)
    throw ValidationError("no afebrile records: p_a is undefined");
  return table;
}

}  // namespace maff
