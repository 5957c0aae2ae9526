#include "ccoach/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "ccoach/errors.hpp"

namespace ccoach {

namespace {

constexpr std::array<std::string_view, 10> kColumns = {
    "pair_id",   "reviewer_id", "phase",        "conceptual",    "no_inaccuracy",
    "correctness", "relevance", "completeness", "code_solution", "response_type",
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_csv_line(std::string_view line, int line_number) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw ParseError("line " + std::to_string(line_number) + ": unterminated quote");
  fields.push_back(trim(field));
  return fields;
}

bool parse_yes_no(const std::string& value, int line_number, std::string_view column) {
  std::string v = lower(value);
  if (v == "y" || v == "yes" || v == "1" || v == "true") return true;
  if (v == "n" || v == "no" || v == "0" || v == "false") return false;
  throw ParseError("line " + std::to_string(line_number) + ": " + std::string(column) + " must be Y or N, got '" +
                   value + "'");
}

std::string pct(std::optional<double> value) {
  if (!value) return "n/a";
  return std::to_string(std::lround(*value)) + "%";
}

std::string kappa_cell(const std::map<Category, LightsKappa>& per_category, Category c) {
  auto it = per_category.find(c);
  if (it == per_category.end()) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", it->second.kappa);
  return buf;
}

/// Uniform integer in [0, bound) by rejection, independent of the standard
/// library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

template <typename T>
void fisher_yates(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = bounded(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace

std::string_view to_string(Category category) {
  switch (category) {
    case Category::ConceptualAccuracy: return "conceptual";
    case Category::NoInaccuracy: return "no_inaccuracy";
    case Category::Correctness: return "correctness";
    case Category::Relevance: return "relevance";
    case Category::Completeness: return "completeness";
    case Category::CodeSolution: return "code_solution";
    case Category::ResponseType: return "response_type";
  }
  return "";
}

std::optional<Category> category_from_string(std::string_view name) {
  for (Category c : kAllCategories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string label_of(const RubricRecord& r, Category category) {
  auto yn = [](bool b) { return std::string(b ? "Y" : "N"); };
  switch (category) {
    case Category::ConceptualAccuracy: return yn(r.conceptual_accuracy);
    case Category::NoInaccuracy: return yn(r.no_inaccuracy);
    case Category::Correctness: return yn(r.correctness);
    case Category::Relevance: return yn(r.relevance);
    case Category::Completeness: return yn(r.completeness);
    case Category::CodeSolution: return yn(r.code_solution_present);
    case Category::ResponseType: return r.response_type == ResponseType::Tutor ? "Tutor" : "Peer";
  }
  return {};
}

std::vector<RubricRecord> parse_rubric_csv(std::string_view text) {
  std::vector<RubricRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  std::array<std::size_t, kColumns.size()> index{};
  bool have_header = false;
  int line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_number;
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto fields = split_csv_line(line, line_number);
    if (!have_header) {
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        auto it = std::find_if(fields.begin(), fields.end(), [&](const std::string& f) { return lower(f) == kColumns[c]; });
        if (it == fields.end()) throw ParseError("header is missing column '" + std::string(kColumns[c]) + "'");
        index[c] = static_cast<std::size_t>(it - fields.begin());
      }
      have_header = true;
      continue;
    }
    auto get = [&](std::size_t c) -> const std::string& {
      if (index[c] >= fields.size()) {
        throw ParseError("line " + std::to_string(line_number) + ": missing " + std::string(kColumns[c]));
      }
      return fields[index[c]];
    };
    RubricRecord r;
    r.pair_id = get(0);
    r.reviewer_id = get(1);
    if (r.pair_id.empty() || r.reviewer_id.empty()) {
      throw ParseError("line " + std::to_string(line_number) + ": empty pair_id or reviewer_id");
    }
    std::string phase = lower(get(2));
    if (phase == "ct" || phase == "compile" || phase == "compile-time" || phase == "compiletime") {
      r.phase = Phase::CompileTime;
    } else if (phase == "rt" || phase == "runtime" || phase == "run-time") {
      r.phase = Phase::RunTime;
    } else {
      throw ParseError("line " + std::to_string(line_number) + ": phase must be CT or RT, got '" + get(2) + "'");
    }
    r.conceptual_accuracy = parse_yes_no(get(3), line_number, kColumns[3]);
    r.no_inaccuracy = parse_yes_no(get(4), line_number, kColumns[4]);
    r.correctness = parse_yes_no(get(5), line_number, kColumns[5]);
    r.relevance = parse_yes_no(get(6), line_number, kColumns[6]);
    r.completeness = parse_yes_no(get(7), line_number, kColumns[7]);
    r.code_solution_present = parse_yes_no(get(8), line_number, kColumns[8]);
    std::string type = lower(get(9));
    if (type == "peer") {
      r.response_type = ResponseType::Peer;
    } else if (type == "tutor") {
      r.response_type = ResponseType::Tutor;
    } else {
      throw ParseError("line " + std::to_string(line_number) + ": response_type must be peer or tutor, got '" +
                       get(9) + "'");
    }
    if (!seen.emplace(r.pair_id, r.reviewer_id).second) {
      throw ParseError("line " + std::to_string(line_number) + ": duplicate record for pair " + r.pair_id +
                       " and reviewer " + r.reviewer_id);
    }
    records.push_back(std::move(r));
  }
  if (!have_header) throw ParseError("empty rubric file");
  return records;
}

double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) throw LengthMismatch("label lists differ in length");
  if (a.empty()) throw EmptyInput("label lists are empty");
  std::map<std::string, std::pair<long long, long long>> marginals;
  long long agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++marginals[a[i]].first;
    ++marginals[b[i]].second;
    if (a[i] == b[i]) ++agree;
  }
  long long n = static_cast<long long>(a.size());
  long long expected = 0;
  for (const auto& [label, counts] : marginals) expected += counts.first * counts.second;
  long long n2 = n * n;
  if (expected == n2) return 1.0;
  return static_cast<double>(agree * n - expected) / static_cast<double>(n2 - expected);
}

LightsKappa lights_kappa(const std::vector<RubricRecord>& records, Category category) {
  std::map<std::string, std::map<std::string, std::string>> by_reviewer;
  for (const auto& r : records) by_reviewer[r.reviewer_id][r.pair_id] = label_of(r, category);
  LightsKappa result;
  double sum = 0.0;
  for (auto a = by_reviewer.begin(); a != by_reviewer.end(); ++a) {
    for (auto b = std::next(a); b != by_reviewer.end(); ++b) {
      std::vector<std::string> la;
      std::vector<std::string> lb;
      for (const auto& [pair, label] : a->second) {
        auto it = b->second.find(pair);
        if (it == b->second.end()) continue;
        la.push_back(label);
        lb.push_back(it->second);
      }
      if (la.empty()) continue;
      PairwiseKappa pk{a->first, b->first, la.size(), cohen_kappa(la, lb)};
      sum += pk.kappa;
      result.pairwise.push_back(std::move(pk));
    }
  }
  if (result.pairwise.empty()) throw NoOverlap("no two reviewers rated a common pair");
  result.kappa = sum / static_cast<double>(result.pairwise.size());
  return result;
}

std::string_view to_string(AgreementBand band) {
  switch (band) {
    case AgreementBand::Poor: return "Poor";
    case AgreementBand::Slight: return "Slight";
    case AgreementBand::Fair: return "Fair";
    case AgreementBand::Moderate: return "Moderate";
    case AgreementBand::Substantial: return "Substantial";
    case AgreementBand::AlmostPerfect: return "Almost perfect";
  }
  return "";
}

AgreementBand interpret_kappa(double kappa) {
  if (kappa < 0.0) return AgreementBand::Poor;
  if (kappa <= 0.20) return AgreementBand::Slight;
  if (kappa <= 0.40) return AgreementBand::Fair;
  if (kappa <= 0.60) return AgreementBand::Moderate;
  if (kappa <= 0.80) return AgreementBand::Substantial;
  return AgreementBand::AlmostPerfect;
}

ReliabilityReport build_reliability_report(const std::vector<RubricRecord>& records) {
  ReliabilityReport report;
  for (Category c : kAllCategories) {
    std::string yes = c == Category::ResponseType ? "Tutor" : "Y";
    long long ct = 0, ct_yes = 0, rt = 0, rt_yes = 0;
    for (const auto& r : records) {
      bool hit = label_of(r, c) == yes;
      if (r.phase == Phase::CompileTime) {
        ++ct;
        ct_yes += hit;
      } else {
        ++rt;
        rt_yes += hit;
      }
    }
    CategoryFrequency f;
    if (ct) f.compile_yes_pct = 100.0 * static_cast<double>(ct_yes) / static_cast<double>(ct);
    if (rt) f.runtime_yes_pct = 100.0 * static_cast<double>(rt_yes) / static_cast<double>(rt);
    report.frequencies[c] = f;
    try {
      LightsKappa k = lights_kappa(records, c);
      report.interpretation[c] = interpret_kappa(k.kappa);
      report.per_category[c] = std::move(k);
    } catch (const NoOverlap&) {
      report.warnings.push_back(std::string(to_string(c)) + ": no reviewer pair shares an item; kappa not computed");
    }
  }
  return report;
}

std::string frequency_table(const std::vector<RubricRecord>& records) {
  ReliabilityReport report = build_reliability_report(records);
  long long ct = 0;
  long long rt = 0;
  for (const auto& r : records) (r.phase == Phase::CompileTime ? ct : rt) += 1;

  struct Row {
    std::string measure;
    std::string ct;
    std::string rt;
    std::string kappa;
  };
  std::vector<Row> rows;
  rows.push_back({"Measure (n=" + std::to_string(records.size()) + ")", "CT (n=" + std::to_string(ct) + ")",
                  "RT (n=" + std::to_string(rt) + ")", "Light's kappa"});
  const std::array<std::pair<Category, std::string_view>, 6> yes_rows{{
      {Category::ConceptualAccuracy, "Conceptually accurate"},
      {Category::NoInaccuracy, "No Inaccuracy in solution"},
      {Category::Correctness, "Correctness of response"},
      {Category::Relevance, "Relevance of response"},
      {Category::Completeness, "Completeness of response"},
      {Category::CodeSolution, "Solution is provided"},
  }};
  for (const auto& [c, name] : yes_rows) {
    const auto& f = report.frequencies[c];
    rows.push_back({std::string(name), pct(f.compile_yes_pct), pct(f.runtime_yes_pct), kappa_cell(report.per_category, c)});
  }
  const auto& type = report.frequencies[Category::ResponseType];
  auto tutor = [](std::optional<double> p) -> std::optional<double> {
    if (!p) return std::nullopt;
    return static_cast<double>(std::lround(*p));
  };
  auto peer = [&](std::optional<double> p) -> std::optional<double> {
    if (!p) return std::nullopt;
    return 100.0 - *tutor(p);
  };
  std::string type_kappa = kappa_cell(report.per_category, Category::ResponseType);
  rows.push_back({"Response of peer quality", pct(peer(type.compile_yes_pct)), pct(peer(type.runtime_yes_pct)), type_kappa});
  rows.push_back({"Response of tutor quality", pct(tutor(type.compile_yes_pct)), pct(tutor(type.runtime_yes_pct)), type_kappa});

  std::size_t w0 = 0, w1 = 0, w2 = 0, w3 = 0;
  for (const auto& r : rows) {
    w0 = std::max(w0, r.measure.size());
    w1 = std::max(w1, r.ct.size());
    w2 = std::max(w2, r.rt.size());
    w3 = std::max(w3, r.kappa.size());
  }
  std::string out;
  auto pad_left = [](const std::string& s, std::size_t w) { return std::string(w - s.size(), ' ') + s; };
  for (const auto& r : rows) {
    out += r.measure + std::string(w0 - r.measure.size(), ' ') + "  " + pad_left(r.ct, w1) + "  " +
           pad_left(r.rt, w2) + "  " + pad_left(r.kappa, w3) + "\n";
  }
  return out;
}

std::string format_reliability(const ReliabilityReport& report) {
  std::ostringstream out;
  for (Category c : kAllCategories) {
    auto it = report.per_category.find(c);
    if (it == report.per_category.end()) continue;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", it->second.kappa);
    out << to_string(c) << ": Light's kappa " << buf << " (" << to_string(report.interpretation.at(c)) << ")\n";
    for (const auto& p : it->second.pairwise) {
      std::snprintf(buf, sizeof buf, "%.3f", p.kappa);
      out << "  " << p.reviewer_a << " / " << p.reviewer_b << ": " << buf << " over " << p.common_items
          << " common items\n";
    }
  }
  for (const auto& w : report.warnings) out << "warning: " << w << "\n";
  return out.str();
}

std::map<std::string, std::vector<Assignment>> assign_reviews(const std::vector<std::string>& pair_ids,
                                                              const std::vector<std::string>& reviewers,
                                                              int per_reviewer, double overlap_fraction,
                                                              std::uint64_t seed) {
  if (reviewers.empty()) throw UsageError("at least one reviewer is needed");
  if (std::set<std::string>(reviewers.begin(), reviewers.end()).size() != reviewers.size()) {
    throw UsageError("reviewer names must be distinct");
  }
  if (per_reviewer < 0) throw UsageError("per-reviewer count must not be negative");
  if (!(overlap_fraction >= 0.0 && overlap_fraction <= 1.0)) throw UsageError("overlap must be between 0 and 1");
  std::size_t needed = reviewers.size() * static_cast<std::size_t>(per_reviewer);
  if (pair_ids.size() < needed) {
    throw InsufficientPairs("need " + std::to_string(needed) + " pairs, have " + std::to_string(pair_ids.size()));
  }
  std::mt19937_64 rng(seed);
  std::vector<std::string> pool = pair_ids;
  fisher_yates(pool, rng);

  std::size_t per = static_cast<std::size_t>(per_reviewer);
  auto k = static_cast<std::size_t>(std::ceil(overlap_fraction * per_reviewer - 1e-9));
  std::map<std::string, std::vector<Assignment>> result;
  std::vector<std::vector<std::string>> samples(reviewers.size());
  for (std::size_t r = 0; r < reviewers.size(); ++r) {
    std::vector<std::string> base(pool.begin() + static_cast<std::ptrdiff_t>(r * per),
                                  pool.begin() + static_cast<std::ptrdiff_t>((r + 1) * per));
    auto& list = result[reviewers[r]];
    for (const auto& p : base) list.push_back({reviewers[r], p, false});
    fisher_yates(base, rng);
    samples[r].assign(base.begin(), base.begin() + static_cast<std::ptrdiff_t>(std::min(k, base.size())));
  }
  for (std::size_t r = 0; r < reviewers.size(); ++r) {
    auto& list = result[reviewers[r]];
    for (std::size_t other = 0; other < reviewers.size(); ++other) {
      if (other == r) continue;
      for (const auto& p : samples[other]) list.push_back({reviewers[r], p, true});
    }
  }
  return result;
}

std::string format_assignment_csv(const std::map<std::string, std::vector<Assignment>>& assignment) {
  std::string out = "reviewer,pair_id,overlap\n";
  for (const auto& [reviewer, list] : assignment) {
    for (const auto& a : list) out += a.reviewer + "," + a.pair_id + "," + (a.overlap ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace ccoach
