#include "finkg/kg_schema.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

#include <json.hpp>

#include "finkg/errors.hpp"
#include "finkg/hashing.hpp"
#include "finkg/io.hpp"

namespace finkg {
namespace {

constexpr int kMinYear = 1900;
constexpr int kMaxYear = 2100;

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string collapse(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (is_space(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

bool in_year_range(int y) { return y >= kMinYear && y <= kMaxYear; }

std::optional<int> parse_year(std::string_view digits) {
  if (digits.size() != 4 || !std::all_of(digits.begin(), digits.end(), is_digit)) return std::nullopt;
  const int y = std::stoi(std::string(digits));
  if (!in_year_range(y)) return std::nullopt;
  return y;
}

// ---------------------------------------------------------------- numbers

enum class Scale { None, Thousand, Million, Billion, Trillion };

std::string_view scale_word(Scale s) {
  switch (s) {
    case Scale::Thousand: return "thousand";
    case Scale::Million: return "million";
    case Scale::Billion: return "billion";
    case Scale::Trillion: return "trillion";
    case Scale::None: break;
  }
  return "";
}

Scale scale_from_token(std::string_view token) {
  const auto t = to_lower(token);
  if (t == "k" || t == "thousand" || t == "thousands") return Scale::Thousand;
  if (t == "m" || t == "mm" || t == "mn" || t == "million" || t == "millions") return Scale::Million;
  if (t == "b" || t == "bn" || t == "billion" || t == "billions") return Scale::Billion;
  if (t == "trillion" || t == "trillions") return Scale::Trillion;
  return Scale::None;
}

std::string currency_from_token(std::string_view token) {
  if (token == "$" || token == "US$") return "USD";
  if (token == "\xE2\x82\xAC") return "EUR";  // €
  if (token == "\xC2\xA3") return "GBP";      // £
  const auto t = to_upper(token);
  if (t == "USD" || t == "EUR" || t == "GBP") return t;
  return {};
}

bool is_percent_token(std::string_view token) {
  const auto t = to_lower(token);
  return t == "%" || t == "percent" || t == "pct";
}

bool is_minus(std::string_view token) { return token == "-" || token == "\xE2\x88\x92"; }

// Tokens: runs of letters, a multi-byte symbol, or a single other char.
std::vector<std::string_view> tokenize(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    if (s.substr(i, 3) == "US$") {
      j = i + 3;
    } else if (is_alpha(s[i])) {
      while (j < s.size() && is_alpha(s[j])) ++j;
    } else if (static_cast<unsigned char>(s[i]) >= 0x80) {
      ++j;
      while (j < s.size() && (static_cast<unsigned char>(s[j]) & 0xC0) == 0x80) ++j;
    } else {
      ++j;
    }
    tokens.push_back(s.substr(i, j - i));
    i = j;
  }
  return tokens;
}

struct NumericScan {
  NormalizedValue value;
  std::string leading_text;  // unrecognized text before the number
};

NumericScan scan_numeric(std::string_view raw) {
  std::size_t first_digit = 0;
  while (first_digit < raw.size() && !is_digit(raw[first_digit])) ++first_digit;
  if (first_digit == raw.size()) throw NotNumeric("no digit in \"" + std::string(raw) + "\"");

  std::size_t start = first_digit;
  if (start > 0 && raw[start - 1] == '.') --start;
  std::string number;
  bool seen_point = false;
  std::size_t end = start;
  while (end < raw.size()) {
    const char c = raw[end];
    const bool next_digit = end + 1 < raw.size() && is_digit(raw[end + 1]);
    if (is_digit(c)) {
      number.push_back(c);
    } else if (c == ',' && next_digit && !seen_point && !number.empty()) {
      // grouping separator
    } else if (c == '.' && next_digit && !seen_point) {
      seen_point = true;
      number.push_back(c);
    } else {
      break;
    }
    ++end;
  }
  auto magnitude = Decimal::parse(number);
  if (!magnitude) throw NotNumeric("number out of range in \"" + std::string(raw) + "\"");

  bool negative = false;
  bool open_paren = false;
  std::string currency;
  Scale scale = Scale::None;
  bool percent = false;

  // Leading side, right to left.
  auto leading = tokenize(raw.substr(0, start));
  while (!leading.empty()) {
    const auto token = leading.back();
    if (is_minus(token)) {
      negative = true;
    } else if (token == "(") {
      open_paren = true;
    } else if (token == "+") {
    } else if (auto c = currency_from_token(token); !c.empty()) {
      if (currency.empty()) currency = c;
    } else {
      break;
    }
    leading.pop_back();
  }
  std::string leading_text;
  if (!leading.empty()) {
    const auto* begin = leading.front().data();
    const auto* stop = leading.back().data() + leading.back().size();
    leading_text = collapse(std::string_view(begin, static_cast<std::size_t>(stop - begin)));
  }

  // Trailing side, left to right.
  const auto trailing_view = raw.substr(end);
  auto trailing = tokenize(trailing_view);
  std::size_t k = 0;
  for (; k < trailing.size(); ++k) {
    const auto token = trailing[k];
    if (token == ")" && open_paren) {
      negative = true;
      open_paren = false;
    } else if (is_percent_token(token)) {
      percent = true;
    } else if (auto s = scale_from_token(token); s != Scale::None && scale == Scale::None && !percent) {
      scale = s;
    } else if (auto c = currency_from_token(token); !c.empty() && currency.empty()) {
      currency = c;
    } else {
      break;
    }
  }
  std::string rest;
  if (k < trailing.size()) {
    const auto offset = static_cast<std::size_t>(trailing[k].data() - trailing_view.data());
    rest = collapse(trailing_view.substr(offset));
    while (!rest.empty() && (rest.back() == '.' || rest.back() == ',' || rest.back() == ';')) rest.pop_back();
    rest = std::string(trim(rest));
  }

  std::string unit;
  auto append = [&unit](std::string_view part) {
    if (part.empty()) return;
    if (!unit.empty()) unit.push_back(' ');
    unit += part;
  };
  append(scale_word(scale));
  append(percent ? std::string("percent") : currency);
  append(rest);

  NumericScan scan;
  scan.value.magnitude = negative ? magnitude->negated() : *magnitude;
  scan.value.unit = unit;
  scan.leading_text = leading_text;
  return scan;
}

// ---------------------------------------------------------------- periods

std::optional<int> quarter_in(const std::string& lower) {
  static const std::regex q_token(R"((^|[^a-z0-9])q([1-4])([^0-9]|$))");
  static const std::regex ordinal(R"((first|second|third|fourth|1st|2nd|3rd|4th)\s+(fiscal\s+)?quarter)");
  std::smatch m;
  if (std::regex_search(lower, m, q_token)) return std::stoi(m[2]);
  if (std::regex_search(lower, m, ordinal)) {
    const auto word = m[1].str();
    if (word == "first" || word == "1st") return 1;
    if (word == "second" || word == "2nd") return 2;
    if (word == "third" || word == "3rd") return 3;
    return 4;
  }
  return std::nullopt;
}

bool contains_word(const std::string& lower, std::string_view phrase) {
  std::size_t pos = 0;
  while ((pos = lower.find(phrase, pos)) != std::string::npos) {
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]));
    const auto after = pos + phrase.size();
    const bool right = after >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[after]));
    if (left && right) return true;
    ++pos;
  }
  return false;
}

// First year appearing after `phrase`.
std::optional<int> year_after(const std::string& lower, std::string_view phrase) {
  const auto pos = lower.find(phrase);
  if (pos == std::string::npos) return std::nullopt;
  auto years = find_years(std::string_view(lower).substr(pos + phrase.size()));
  if (years.empty()) return std::nullopt;
  return years.front();
}

bool has_month_name(const std::string& lower) {
  static constexpr std::array<std::string_view, 12> kMonths = {
      "january", "february", "march", "april", "may", "june",
      "july", "august", "september", "october", "november", "december"};
  static constexpr std::array<std::string_view, 11> kAbbrev = {
      "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov"};
  for (auto m : kMonths) {
    if (contains_word(lower, m)) return true;
  }
  for (auto m : kAbbrev) {
    if (contains_word(lower, m)) return true;
  }
  return contains_word(lower, "dec");
}

// "2015", "2015 ( a )", "2015 (1)": a lone year with only a footnote marker.
bool is_bare_year(const std::string& lower, int year) {
  auto rest = lower;
  const auto y = std::to_string(year);
  rest.erase(rest.find(y), y.size());
  static const std::regex footnote(R"(\(\s*[a-z0-9]\s*\)|\*)");
  rest = std::regex_replace(rest, footnote, "");
  return trim(rest).empty();
}

}  // namespace

// ------------------------------------------------------------------ Period

bool Period::valid() const {
  if (kind == PeriodKind::Unknown) return !year && !quarter;
  if (!year || !in_year_range(*year)) return false;
  if (kind == PeriodKind::Quarter) return quarter && *quarter >= 1 && *quarter <= 4;
  return !quarter;
}

std::string Period::canonical() const {
  if (kind == PeriodKind::Unknown || !year) return "UNKNOWN";
  const auto y = std::to_string(*year);
  switch (kind) {
    case PeriodKind::Annual: return y;
    case PeriodKind::Quarter: return y + "-Q" + std::to_string(quarter.value_or(0));
    case PeriodKind::AsOf: return "AS_OF_" + y;
    case PeriodKind::After: return "AFTER_" + y;
    case PeriodKind::Before: return "BEFORE_" + y;
    case PeriodKind::Unknown: break;
  }
  return "UNKNOWN";
}

std::optional<Period> Period::from_canonical(std::string_view text) {
  if (text == "UNKNOWN") return Period::unknown();
  auto with_prefix = [&](std::string_view prefix) -> std::optional<int> {
    if (text.substr(0, prefix.size()) != prefix) return std::nullopt;
    return parse_year(text.substr(prefix.size()));
  };
  if (auto y = parse_year(text)) return Period::annual(*y);
  if (text.size() == 7 && text.substr(4, 2) == "-Q" && text[6] >= '1' && text[6] <= '4') {
    if (auto y = parse_year(text.substr(0, 4))) return Period::quarterly(*y, text[6] - '0');
  }
  if (auto y = with_prefix("AS_OF_")) return Period::as_of(*y);
  if (auto y = with_prefix("AFTER_")) return Period::after(*y);
  if (auto y = with_prefix("BEFORE_")) return Period::before(*y);
  return std::nullopt;
}

std::vector<int> find_years(std::string_view text) {
  std::vector<int> years;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_digit(text[j])) ++j;
    const bool glued_left = i >= 2 && (text[i - 1] == '.' || text[i - 1] == ',') && is_digit(text[i - 2]);
    const bool glued_right = j + 1 < text.size() && (text[j] == '.' || text[j] == ',') && is_digit(text[j + 1]);
    if (!glued_left && !glued_right) {
      if (auto y = parse_year(text.substr(i, j - i))) years.push_back(*y);
    }
    i = j;
  }
  return years;
}

Period normalize_period(std::string_view raw, std::span<const int> context_years) {
  const auto trimmed = trim(raw);
  if (auto canonical = Period::from_canonical(to_upper(trimmed))) return *canonical;

  const auto lower = collapse(to_lower(trimmed));
  if (lower.empty()) return Period::unknown();

  if (contains_word(lower, "thereafter")) {
    if (context_years.empty()) return Period::unknown();
    return Period::after(*std::max_element(context_years.begin(), context_years.end()));
  }

  const auto years = find_years(lower);
  if (years.empty()) return Period::unknown();

  if (auto q = quarter_in(lower)) return Period::quarterly(years.front(), *q);
  if (lower.find("as of") != std::string::npos || lower.find("as at") != std::string::npos) {
    return Period::as_of(years.back());
  }
  if (auto y = year_after(lower, "prior to")) return Period::before(*y);
  if (contains_word(lower, "before")) {
    if (auto y = year_after(lower, "before")) return Period::before(*y);
  }
  if (contains_word(lower, "after")) {
    if (auto y = year_after(lower, "after")) return Period::after(*y);
  }
  if (contains_word(lower, "fiscal") || contains_word(lower, "fy") || lower.starts_with("fy")) {
    return Period::annual(years.back());
  }
  if (lower.find("year ended") != std::string::npos || lower.find("years ended") != std::string::npos ||
      lower.find("year ending") != std::string::npos) {
    return Period::annual(years.front());
  }
  if (years.size() == 1 && has_month_name(lower)) return Period::as_of(years.front());
  if (years.size() == 1 && is_bare_year(lower, years.front())) return Period::annual(years.front());
  return Period::unknown();
}

// ----------------------------------------------------------------- values

std::string render_value(const NormalizedValue& value) {
  auto text = value.magnitude.to_string();
  if (!value.unit.empty()) text += " " + value.unit;
  return text;
}

NormalizedValue parse_numeric(std::string_view raw) { return scan_numeric(raw).value; }

std::optional<NormalizedValue> parse_numeric_strict(std::string_view raw) {
  NumericScan scan;
  try {
    scan = scan_numeric(raw);
  } catch (const NotNumeric&) {
    return std::nullopt;
  }
  if (!scan.leading_text.empty()) {
    static const std::regex allowed(R"(^((approximately|approx|about|around|roughly|~|=|\.|:)\s*)*$)",
                                    std::regex::icase);
    if (!std::regex_match(scan.leading_text, allowed)) return std::nullopt;
  }
  return scan.value;
}

int unit_scale_exponent(std::string_view unit) {
  const auto space = unit.find(' ');
  switch (scale_from_token(unit.substr(0, space))) {
    case Scale::Thousand: return 3;
    case Scale::Million: return 6;
    case Scale::Billion: return 9;
    case Scale::Trillion: return 12;
    case Scale::None: break;
  }
  return 0;
}

NormalizedValue rescale(const NormalizedValue& value, int target_exponent) {
  const int current = unit_scale_exponent(value.unit);
  std::string_view base = value.unit;
  if (current != 0) {
    const auto space = base.find(' ');
    base = space == std::string_view::npos ? std::string_view() : base.substr(space + 1);
  }
  Scale target = Scale::None;
  switch (target_exponent) {
    case 3: target = Scale::Thousand; break;
    case 6: target = Scale::Million; break;
    case 9: target = Scale::Billion; break;
    case 12: target = Scale::Trillion; break;
    default: target_exponent = 0; break;
  }
  NormalizedValue out;
  out.magnitude = value.magnitude.shifted(current - target_exponent);
  out.unit = std::string(scale_word(target));
  if (!base.empty()) {
    if (!out.unit.empty()) out.unit.push_back(' ');
    out.unit += base;
  }
  return out;
}

// ---------------------------------------------------------------- metrics

std::string canonical_metric(std::string_view raw) {
  std::string out;
  bool pending = false;
  for (char c : raw) {
    if (std::isalnum(static_cast<unsigned char>(c)) && static_cast<unsigned char>(c) < 0x80) {
      if (pending && !out.empty()) out.push_back('_');
      pending = false;
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    } else {
      pending = true;
    }
  }
  if (out.empty()) throw EmptyAfterNormalization("metric \"" + std::string(raw) + "\" is empty after normalization");
  return out;
}

// --------------------------------------------------------------- triplets

std::string relation_for(const Period& period) {
  switch (period.kind) {
    case PeriodKind::Annual:
    case PeriodKind::Quarter: return "HAS_VALUE_IN_" + period.canonical();
    case PeriodKind::AsOf:
    case PeriodKind::After:
    case PeriodKind::Before: return "HAS_VALUE_" + period.canonical();
    case PeriodKind::Unknown: break;
  }
  return "HAS_VALUE";
}

std::string compute_triplet_id(std::string_view source_doc, std::string_view subject, std::string_view relation,
                               std::string_view object) {
  std::string key;
  key.reserve(source_doc.size() + subject.size() + relation.size() + object.size() + 3);
  key.append(source_doc).push_back('\x1f');
  key.append(subject).push_back('\x1f');
  key.append(relation).push_back('\x1f');
  key.append(object);
  return content_hash128(key);
}

void refresh_triplet_id(Triplet& t) { t.triplet_id = compute_triplet_id(t.source_doc, t.subject, t.relation, t.object); }

Triplet make_triplet(std::string metric_type, std::optional<std::string> company, Period period,
                     const NormalizedValue& value, std::string source_doc) {
  Triplet t;
  t.metric_type = std::move(metric_type);
  if (company && trim(*company).empty()) company.reset();
  t.company = std::move(company);
  t.subject = t.company ? t.metric_type + ":" + *t.company : t.metric_type;
  t.period = period;
  t.relation = relation_for(period);
  t.value = value.magnitude;
  t.unit = value.unit;
  t.object = render_value(value);
  t.source_doc = std::move(source_doc);
  refresh_triplet_id(t);
  return t;
}

std::string_view violation_name(Violation v) {
  switch (v) {
    case Violation::SubjectEmpty: return "SubjectEmpty";
    case Violation::MetricNotCanonical: return "MetricNotCanonical";
    case Violation::RelationMalformed: return "RelationMalformed";
    case Violation::ObjectValueMismatch: return "ObjectValueMismatch";
    case Violation::PeriodInvalid: return "PeriodInvalid";
    case Violation::TripletIdMismatch: return "TripletIdMismatch";
  }
  return "Unknown";
}

std::vector<Violation> validate_triplet(const Triplet& t) {
  static const std::regex metric_re("^[A-Z][A-Z0-9_]*$");
  std::vector<Violation> out;
  if (trim(t.subject).empty()) out.push_back(Violation::SubjectEmpty);
  if (!std::regex_match(t.metric_type, metric_re)) out.push_back(Violation::MetricNotCanonical);
  if (t.relation != relation_for(t.period)) out.push_back(Violation::RelationMalformed);
  const auto rendered = t.value.to_string();
  const bool prefixed = t.object.starts_with(rendered) &&
                        (t.object.size() == rendered.size() || t.object[rendered.size()] == ' ');
  if (!prefixed) out.push_back(Violation::ObjectValueMismatch);
  if (!t.period.valid()) out.push_back(Violation::PeriodInvalid);
  if (t.triplet_id != compute_triplet_id(t.source_doc, t.subject, t.relation, t.object)) {
    out.push_back(Violation::TripletIdMismatch);
  }
  return out;
}

// ---------------------------------------------------------- serialization

std::string serialize_triplet(const Triplet& t) {
  nlohmann::ordered_json j;
  j["subject"] = t.subject;
  j["relation"] = t.relation;
  j["object"] = t.object;
  j["metric_type"] = t.metric_type;
  j["company"] = t.company ? nlohmann::ordered_json(*t.company) : nlohmann::ordered_json(nullptr);
  j["period"] = t.period.canonical();
  j["value"] = t.value.to_string();
  j["unit"] = t.unit;
  j["source_doc"] = t.source_doc;
  j["triplet_id"] = t.triplet_id;
  return j.dump();
}

std::string serialize_triplets(std::span<const Triplet> triplets) {
  std::string out;
  for (const auto& t : triplets) {
    out += serialize_triplet(t);
    out.push_back('\n');
  }
  return out;
}

std::vector<Triplet> parse_triplets_file(std::string_view text) {
  std::vector<Triplet> out;
  const auto lines = io::split_lines(text);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line_no = std::to_string(n + 1);
    if (trim(lines[n]).empty()) continue;
    auto j = nlohmann::json::parse(lines[n], nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("line " + line_no + ": not a JSON object");
    auto str = [&](const char* key) -> std::string {
      auto it = j.find(key);
      if (it == j.end() || !it->is_string()) throw ParseError("line " + line_no + ": missing string field " + key);
      return it->get<std::string>();
    };
    Triplet t;
    t.subject = str("subject");
    t.relation = str("relation");
    t.object = str("object");
    t.metric_type = str("metric_type");
    if (auto it = j.find("company"); it != j.end() && it->is_string()) {
      t.company = it->get<std::string>();
    } else if (it == j.end() || !it->is_null()) {
      throw ParseError("line " + line_no + ": company must be a string or null");
    }
    const auto period = Period::from_canonical(str("period"));
    if (!period) throw ParseError("line " + line_no + ": period is not canonical");
    t.period = *period;
    const auto value = Decimal::parse(str("value"));
    if (!value) throw ParseError("line " + line_no + ": value is not a decimal");
    t.value = *value;
    t.unit = str("unit");
    t.source_doc = str("source_doc");
    t.triplet_id = str("triplet_id");
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace finkg
