#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ccoach/context.hpp"

namespace ccoach {

enum class ResponseType { Peer, Tutor };

/// One reviewer's judgment of one error/explanation pair.
struct RubricRecord {
  std::string pair_id;
  std::string reviewer_id;
  Phase phase = Phase::CompileTime;
  bool conceptual_accuracy = false;
  bool no_inaccuracy = false;
  bool correctness = false;
  bool relevance = false;
  bool completeness = false;
  bool code_solution_present = false;
  ResponseType response_type = ResponseType::Peer;
};

enum class Category {
  ConceptualAccuracy,
  NoInaccuracy,
  Correctness,
  Relevance,
  Completeness,
  CodeSolution,
  ResponseType,
};

inline constexpr std::array<Category, 7> kAllCategories = {
    Category::ConceptualAccuracy, Category::NoInaccuracy, Category::Correctness,
    Category::Relevance,          Category::Completeness, Category::CodeSolution,
    Category::ResponseType,
};

std::string_view to_string(Category category);
std::optional<Category> category_from_string(std::string_view name);

/// Category value as a label ("Y"/"N", or "Peer"/"Tutor").
std::string label_of(const RubricRecord& record, Category category);

/// Reads the review spreadsheet export. Throws ParseError with the line number.
std::vector<RubricRecord> parse_rubric_csv(std::string_view text);

/// Throws LengthMismatch / EmptyInput.
double cohen_kappa(const std::vector<std::string>& labels_a, const std::vector<std::string>& labels_b);

struct PairwiseKappa {
  std::string reviewer_a;
  std::string reviewer_b;
  std::size_t common_items = 0;
  double kappa = 0.0;
};

struct LightsKappa {
  double kappa = 0.0;
  std::vector<PairwiseKappa> pairwise;
};

/// Mean of Cohen's kappa over every reviewer pair with common items.
/// Throws NoOverlap when no pair shares an item.
LightsKappa lights_kappa(const std::vector<RubricRecord>& records, Category category);

enum class AgreementBand { Poor, Slight, Fair, Moderate, Substantial, AlmostPerfect };
std::string_view to_string(AgreementBand band);
AgreementBand interpret_kappa(double kappa);

struct CategoryFrequency {
  std::optional<double> compile_yes_pct;  // absent when no compile-time records
  std::optional<double> runtime_yes_pct;
};

struct ReliabilityReport {
  std::map<Category, LightsKappa> per_category;
  std::map<Category, CategoryFrequency> frequencies;
  std::map<Category, AgreementBand> interpretation;
  std::vector<std::string> warnings;
};

ReliabilityReport build_reliability_report(const std::vector<RubricRecord>& records);

/// The reliability table layout: one row per measure (peer and tutor split), percent Yes
/// per phase and Light's kappa. Peer and tutor percentages always sum to 100.
std::string frequency_table(const std::vector<RubricRecord>& records);

std::string format_reliability(const ReliabilityReport& report);

struct Assignment {
  std::string reviewer;
  std::string pair_id;
  bool overlap = false;
};

/// Disjoint base sets of `per_reviewer` pairs, plus ceil(overlap_fraction *
/// per_reviewer) of every other reviewer's base pairs. Deterministic in `seed`.
std::map<std::string, std::vector<Assignment>> assign_reviews(const std::vector<std::string>& pair_ids,
                                                              const std::vector<std::string>& reviewers,
                                                              int per_reviewer, double overlap_fraction,
                                                              std::uint64_t seed);

std::string format_assignment_csv(const std::map<std::string, std::vector<Assignment>>& assignment);

}  // namespace ccoach
