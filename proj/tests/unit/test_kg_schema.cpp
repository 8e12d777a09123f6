#include <gtest/gtest.h>

#include <random>

#include "finkg/errors.hpp"
#include "finkg/kg_schema.hpp"

using namespace finkg;

namespace {

NormalizedValue nv(const char* magnitude, std::string unit) { return {*Decimal::parse(magnitude), std::move(unit)}; }

}  // namespace

TEST(Period, NormalizesFreeText) {
  const int ctx[] = {2013, 2014, 2015};
  EXPECT_EQ(normalize_period("2007").canonical(), "2007");
  EXPECT_EQ(normalize_period("fiscal 2015").canonical(), "2015");
  EXPECT_EQ(normalize_period("FY2015").canonical(), "2015");
  EXPECT_EQ(normalize_period("year ended december 31 , 2015").canonical(), "2015");
  EXPECT_EQ(normalize_period("2007-Q4").canonical(), "2007-Q4");
  EXPECT_EQ(normalize_period("Q4 2007").canonical(), "2007-Q4");
  EXPECT_EQ(normalize_period("fourth quarter of 2007").canonical(), "2007-Q4");
  EXPECT_EQ(normalize_period("as of december 31 , 2010").canonical(), "AS_OF_2010");
  EXPECT_EQ(normalize_period("december 31, 2010").canonical(), "AS_OF_2010");
  EXPECT_EQ(normalize_period("after 2015").canonical(), "AFTER_2015");
  EXPECT_EQ(normalize_period("thereafter", ctx).canonical(), "AFTER_2015");
  EXPECT_EQ(normalize_period("thereafter").canonical(), "UNKNOWN");
  EXPECT_EQ(normalize_period("prior to 2015").canonical(), "BEFORE_2015");
  EXPECT_EQ(normalize_period("total").canonical(), "UNKNOWN");
  EXPECT_EQ(normalize_period("").canonical(), "UNKNOWN");
}

TEST(Period, CanonicalFormsAreFixedPoints) {
  const std::vector<Period> periods = {Period::annual(2007),  Period::quarterly(2007, 4), Period::as_of(2010),
                                       Period::after(2015),   Period::before(2015),        Period::unknown()};
  for (const auto& p : periods) {
    const auto c = p.canonical();
    EXPECT_EQ(normalize_period(c), p) << c;
    EXPECT_EQ(normalize_period(normalize_period(c).canonical()), normalize_period(c)) << c;
    ASSERT_TRUE(Period::from_canonical(c)) << c;
    EXPECT_EQ(*Period::from_canonical(c), p);
  }
  EXPECT_FALSE(Period::from_canonical("2007-Q5"));
  EXPECT_FALSE(Period::from_canonical("as_of_2010"));
}

TEST(Period, FindYears) {
  EXPECT_EQ(find_years("from 2008 to 2009"), (std::vector<int>{2008, 2009}));
  EXPECT_TRUE(find_years("1,2009 and 12345 and 2200").empty());
}

TEST(Numeric, ParsesFinancialForms) {
  EXPECT_EQ(parse_numeric("$5,829 million"), nv("5829", "million USD"));
  EXPECT_EQ(parse_numeric("( 1,234 )"), nv("-1234", ""));
  EXPECT_EQ(parse_numeric("12.5%"), nv("12.5", "percent"));
  EXPECT_EQ(parse_numeric("3.2 percent"), nv("3.2", "percent"));
  EXPECT_EQ(parse_numeric("$1.2B"), nv("1.2", "billion USD"));
  EXPECT_EQ(parse_numeric("−7"), nv("-7", ""));
  EXPECT_EQ(parse_numeric("€ 40"), nv("40", "EUR"));
  EXPECT_THROW(parse_numeric("n/a"), NotNumeric);
}

TEST(Numeric, StrictRejectsLeadingWords) {
  EXPECT_TRUE(parse_numeric_strict("approximately $ 26 million"));
  EXPECT_FALSE(parse_numeric_strict("rose to 26"));
  EXPECT_FALSE(parse_numeric_strict("yes"));
}

TEST(Numeric, RescaleIsExact) {
  EXPECT_EQ(rescale(nv("100690000", "USD"), 6), nv("100.69", "million USD"));
  EXPECT_EQ(rescale(nv("1.5", "billion USD"), 6), nv("1500", "million USD"));
  EXPECT_EQ(unit_scale_exponent("thousand"), 3);
  EXPECT_EQ(unit_scale_exponent("percent"), 0);
}

TEST(Metric, Canonicalizes) {
  EXPECT_EQ(canonical_metric("net revenue"), "NET_REVENUE");
  EXPECT_EQ(canonical_metric("  long-term debt ( total ) "), "LONG_TERM_DEBT_TOTAL");
  EXPECT_THROW(canonical_metric(" -- "), EmptyAfterNormalization);
}

TEST(Triplet, IdMatchesIndependentDigest) {
  auto t = make_triplet("REVENUE", "Acme", Period::annual(2009), nv("120.5", "million USD"), "ACME/2009/page_41.pdf-1");
  EXPECT_EQ(t.subject, "REVENUE:Acme");
  EXPECT_EQ(t.relation, "HAS_VALUE_IN_2009");
  EXPECT_EQ(t.object, "120.5 million USD");
  // sha256 of the 0x1f-joined fields, first 16 bytes
  EXPECT_EQ(t.triplet_id, "790d97e8976a430be3808bb8fff0d544");
  EXPECT_TRUE(validate_triplet(t).empty());
}

TEST(Triplet, ValidationCatchesEachInvariant) {
  const auto good = make_triplet("REVENUE", std::nullopt, Period::as_of(2010), nv("7", "USD"), "d");
  auto has = [](const Triplet& t, Violation v) {
    const auto vs = validate_triplet(t);
    return std::find(vs.begin(), vs.end(), v) != vs.end();
  };
  auto t = good;
  t.subject.clear();
  EXPECT_TRUE(has(t, Violation::SubjectEmpty));
  t = good;
  t.metric_type = "revenue";
  EXPECT_TRUE(has(t, Violation::MetricNotCanonical));
  t = good;
  t.relation = "HAS_VALUE_IN_2010";
  EXPECT_TRUE(has(t, Violation::RelationMalformed));
  t = good;
  t.object = "70 USD";
  EXPECT_TRUE(has(t, Violation::ObjectValueMismatch));
  t = good;
  t.period = Period{PeriodKind::Quarter, 2010, 7};
  EXPECT_TRUE(has(t, Violation::PeriodInvalid));
  t = good;
  t.triplet_id[0] = t.triplet_id[0] == '0' ? '1' : '0';
  EXPECT_TRUE(has(t, Violation::TripletIdMismatch));
}

TEST(Triplet, SerializationRoundTrip) {
  std::mt19937_64 rng(7);
  const char* metrics[] = {"REVENUE", "NET_INCOME", "LONG_TERM_DEBT", "EPS"};
  const char* units[] = {"", "USD", "million USD", "percent", "thousand EUR"};
  std::vector<Triplet> ts;
  for (int i = 0; i < 200; ++i) {
    const int year = 1990 + static_cast<int>(rng() % 40);
    Period p;
    switch (rng() % 6) {
      case 0: p = Period::annual(year); break;
      case 1: p = Period::quarterly(year, 1 + static_cast<int>(rng() % 4)); break;
      case 2: p = Period::as_of(year); break;
      case 3: p = Period::after(year); break;
      case 4: p = Period::before(year); break;
      default: p = Period::unknown(); break;
    }
    auto value = *Decimal::parse(std::to_string(static_cast<long>(rng() % 2000000) - 1000000) + "." +
                                 std::to_string(rng() % 100));
    std::optional<std::string> company;
    if (rng() % 2) company = "Co" + std::to_string(rng() % 10);
    ts.push_back(make_triplet(metrics[rng() % 4], company, p, {value, units[rng() % 5]}, "doc-" + std::to_string(i)));
  }
  const auto text = serialize_triplets(ts);
  const auto back = parse_triplets_file(text);
  ASSERT_EQ(back.size(), ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    EXPECT_EQ(back[i], ts[i]);
    EXPECT_TRUE(validate_triplet(back[i]).empty());
  }
  EXPECT_EQ(serialize_triplets(back), text);
}

TEST(Triplet, ParseErrorNamesLine) {
  const auto t = make_triplet("REVENUE", std::nullopt, Period::annual(2009), nv("1", ""), "d");
  const auto text = serialize_triplet(t) + "\n{not json\n";
  try {
    parse_triplets_file(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

namespace {

Triplet entergy() {
  return make_triplet(canonical_metric("net revenue"), "Entergy", normalize_period("2015"),
                      parse_numeric("5829 million USD"), "ETR/2015/page_10.pdf-1");
}

}  // namespace

TEST(Numeric, ObjectAndGroupingForms) {
  EXPECT_EQ(parse_numeric("5829 million USD"), nv("5829", "million USD"));
  EXPECT_EQ(parse_numeric("$100,690,000"), nv("100690000", "USD"));
  EXPECT_EQ(parse_numeric("(12.5)%"), nv("-12.5", "percent"));
  EXPECT_EQ(canonical_metric("operating  expenses (total)"), "OPERATING_EXPENSES_TOTAL");
  EXPECT_EQ(canonical_metric("NET_REVENUE"), "NET_REVENUE");
  EXPECT_EQ(normalize_period("fiscal 2015", std::vector<int>{2014, 2015}), Period::annual(2015));
}

TEST(Triplet, EntergyExample) {
  const auto t = entergy();
  EXPECT_EQ(t.subject, "NET_REVENUE:Entergy");
  EXPECT_EQ(t.relation, "HAS_VALUE_IN_2015");
  EXPECT_EQ(t.object, "5829 million USD");
  EXPECT_TRUE(validate_triplet(t).empty());
  const auto line = serialize_triplet(t);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  const auto back = parse_triplets_file(line);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], t);
  EXPECT_EQ(serialize_triplets({}), "");
  EXPECT_TRUE(parse_triplets_file("").empty());

  auto missing_prefix = t;
  missing_prefix.object = "million USD";
  refresh_triplet_id(missing_prefix);
  EXPECT_EQ(validate_triplet(missing_prefix), std::vector<Violation>{Violation::ObjectValueMismatch});
  auto lower = t;
  lower.metric_type = "net revenue";
  EXPECT_EQ(validate_triplet(lower), std::vector<Violation>{Violation::MetricNotCanonical});
}
