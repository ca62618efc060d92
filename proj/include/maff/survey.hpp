#ifndef MAFF_SURVEY_HPP
#define MAFF_SURVEY_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace maff {

// One surveyed child: current fever status and measured parasite density
// (per microlitre; nonnegative, zero meaning slide-negative).
struct SurveyRecord {
  bool fever = false;
  double density = 0.0;
};

struct SurveyDataset {
  std::vector<SurveyRecord> records;

  std::size_t size() const { return records.size(); }
  std::size_t febrile_count() const;
  std::size_t afebrile_count() const;
  std::vector<double> febrile_densities() const;
  std::vector<double> afebrile_densities() const;
  double max_density() const;
  void validate() const;
};

// 2x2 fever-by-parasitaemia counts plus the derived fractions.
struct SummaryTable {
  std::size_t afebrile_zero = 0;
  std::size_t afebrile_positive = 0;
  std::size_t febrile_zero = 0;
  std::size_t febrile_positive = 0;

  std::size_t n() const {
    return afebrile_zero + afebrile_positive + febrile_zero + febrile_positive;
  }
  std::size_t febrile() const { return febrile_zero + febrile_positive; }
  std::size_t afebrile() const { return afebrile_zero + afebrile_positive; }
  double fever_prevalence() const;       // p
  double positive_given_febrile() const;  // p_f
  double positive_given_afebrile() const; // p_a
};

// CSV format: header `fever,density`, one record per line, fever in {0,1},
// '#' comment lines and blank lines ignored, UTF-8 with optional BOM.
SurveyDataset parse_survey_csv(std::istream &in);
SurveyDataset load_survey_csv(const std::string &path);

// Full-precision round-tripping writer (reads back bit-identically).
void serialize_survey_csv(const SurveyDataset &dataset, std::ostream &out);

// Errors if either fever group is empty, since p_f or p_a would be 0/0.
SummaryTable summarize(const SurveyDataset &dataset);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace maff

#endif
