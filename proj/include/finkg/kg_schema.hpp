#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finkg/decimal.hpp"

namespace finkg {

enum class PeriodKind { Annual, Quarter, AsOf, After, Before, Unknown };

/// Temporal qualifier of a fact. Canonical text forms: "YYYY", "YYYY-Qn",
/// "AS_OF_YYYY", "AFTER_YYYY", "BEFORE_YYYY", "UNKNOWN".
struct Period {
  PeriodKind kind = PeriodKind::Unknown;
  std::optional<int> year;
  std::optional<int> quarter;

  static Period annual(int year) { return {PeriodKind::Annual, year, std::nullopt}; }
  static Period quarterly(int year, int quarter) { return {PeriodKind::Quarter, year, quarter}; }
  static Period as_of(int year) { return {PeriodKind::AsOf, year, std::nullopt}; }
  static Period after(int year) { return {PeriodKind::After, year, std::nullopt}; }
  static Period before(int year) { return {PeriodKind::Before, year, std::nullopt}; }
  static Period unknown() { return {}; }

  bool valid() const;
  std::string canonical() const;

  /// Strict inverse of `canonical`; nullopt for anything else.
  static std::optional<Period> from_canonical(std::string_view text);

  friend bool operator==(const Period&, const Period&) = default;
};

/// Maps free-text period expressions onto a Period:
///   "2007", "fiscal 2015", "FY 2015", "year ended ... 2015"  -> ANNUAL
///   "2007-Q4", "Q4 2007", "fourth quarter 2007"             -> QUARTER
///   "as of ... 2010", "december 31, 2010"                   -> AS_OF
///   "after 2015"; "thereafter" -> AFTER max(context_years)  -> AFTER
///   "prior to 2015", "before 2015"                          -> BEFORE
/// Canonical strings are fixed points. Anything else is UNKNOWN.
Period normalize_period(std::string_view raw, std::span<const int> context_years = {});

/// Every 4-digit token in 1900..2100, in order of appearance.
std::vector<int> find_years(std::string_view text);

struct NormalizedValue {
  Decimal magnitude;
  std::string unit;  // "million USD", "percent", "USD", "" ...

  friend bool operator==(const NormalizedValue&, const NormalizedValue&) = default;
};

/// "{magnitude} {unit}", or just the magnitude when the unit is empty.
std::string render_value(const NormalizedValue& value);

/// Parses the first number in `raw`.
///
/// Currency symbols and digit grouping are stripped, accounting parentheses
/// and leading minus signs negate, "%"/"percent" become unit "percent", scale
/// words and suffixes (K/M/B, thousand/million/billion) are kept in the unit
/// ahead of the currency. The stated face value is never rescaled. Throws
/// NotNumeric when `raw` has no digit.
NormalizedValue parse_numeric(std::string_view raw);

/// Like parse_numeric, but only succeeds when nothing except currency,
/// sign, and approximation words precedes the number.
std::optional<NormalizedValue> parse_numeric_strict(std::string_view raw);

/// 10^3, 10^6, 10^9, 10^12 for the scale word leading `unit`; 1 otherwise.
int unit_scale_exponent(std::string_view unit);

/// Re-expresses a value at a scale exponent (0, 3, 6, 9, 12), e.g.
/// 100690000 USD -> 100.69 million USD. Exact; the optional rescale step.
NormalizedValue rescale(const NormalizedValue& value, int target_exponent);

/// Uppercase, non-alphanumeric runs collapsed to "_", trimmed.
/// Throws EmptyAfterNormalization.
std::string canonical_metric(std::string_view raw);

struct Triplet {
  std::string subject;   // "METRIC" or "METRIC:Company"
  std::string relation;  // HAS_VALUE_IN_2015, HAS_VALUE_AS_OF_2010, ... or HAS_VALUE
  std::string object;    // "5829 million USD"
  std::string metric_type;
  std::optional<std::string> company;
  Period period;
  Decimal value;
  std::string unit;
  std::string source_doc;
  std::string triplet_id;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

std::string relation_for(const Period& period);
std::string compute_triplet_id(std::string_view source_doc, std::string_view subject, std::string_view relation,
                               std::string_view object);

/// Assembles a schema triplet from normalized parts: subject, relation,
/// object and id are all derived.
Triplet make_triplet(std::string metric_type, std::optional<std::string> company, Period period,
                     const NormalizedValue& value, std::string source_doc);

/// Recomputes triplet_id from the current content.
void refresh_triplet_id(Triplet& triplet);

enum class Violation {
  SubjectEmpty,
  MetricNotCanonical,
  RelationMalformed,
  ObjectValueMismatch,
  PeriodInvalid,
  TripletIdMismatch,
};

std::string_view violation_name(Violation v);

/// Empty iff every Triplet invariant holds.
std::vector<Violation> validate_triplet(const Triplet& t);

std::string serialize_triplet(const Triplet& t);
/// Newline-delimited JSON, one triplet per line, fixed key order.
std::string serialize_triplets(std::span<const Triplet> triplets);
/// Throws ParseError naming the 1-based line on malformed input.
std::vector<Triplet> parse_triplets_file(std::string_view text);

}  // namespace finkg
