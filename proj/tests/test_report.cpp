#include <gtest/gtest.h>

#include <sstream>

#include "solarcoop/csv.hpp"
#include "solarcoop/errors.hpp"
#include "solarcoop/report.hpp"
#include "test_support.hpp"

using namespace solarcoop;

namespace {

CommunityDataset fix_a() { return load_csv(std::string(SOLARCOOP_TEST_DATA) + "/fix_a.csv"); }

std::vector<std::vector<std::string>> read_all(const std::string& text) {
  std::istringstream in(text);
  std::size_t line = 0;
  std::vector<std::vector<std::string>> out;
  while (auto rec = csv::read_record(in, line)) out.push_back(*rec);
  return out;
}

// Parses "12.34" / "-0.05" into hundredths exactly.
std::int64_t hundredths(const std::string& s) {
  const bool neg = !s.empty() && s[0] == '-';
  const std::string body = neg ? s.substr(1) : s;
  const auto dot = body.find('.');
  const std::int64_t v = std::stoll(body.substr(0, dot)) * 100 + std::stoll(body.substr(dot + 1));
  return neg ? -v : v;
}

}  // namespace

TEST(Table, RendersAllFormats) {
  Table t("demo", {{"name", ColumnKind::Text},
                   {"energy", ColumnKind::Energy},
                   {"cost", ColumnKind::Money},
                   {"base", ColumnKind::Money},
                   {"share", ColumnKind::Percent, std::make_pair(std::size_t{2}, std::size_t{3})}});
  t.add_row({std::string("a, \"quoted\""), 1.005, 1234.5, 5000.0, 12.5});
  t.add_row({std::string("b"), 2.0, -0.4, -1000.0, std::nan("")});
  t.set_totals("total");

  const std::string csv = t.to_csv();
  EXPECT_EQ(csv,
            "name,energy_kwh,cost_usd,base_usd,share_pct\r\n"
            "\"a, \"\"quoted\"\"\",1.00,12.34,50.00,12.50\r\n"
            "b,2.00,0.00,-10.00,n/a\r\n"
            "total,3.00,12.34,40.00,30.85\r\n");

  const auto j = t.to_json();
  EXPECT_EQ(j["schema"], "v1");
  EXPECT_EQ(j["table"], "demo");
  EXPECT_EQ(j["rows"][0]["cost_cents"], 1234);  // half-even
  EXPECT_TRUE(j["rows"][1]["share_pct"].is_null());
  EXPECT_EQ(j["totals"]["cost_cents"], 1234);

  const std::string md = t.to_markdown();
  EXPECT_NE(md.find("| name | energy_kwh | cost_usd | base_usd | share_pct |"), std::string::npos);
  EXPECT_NE(md.find("| **total** |"), std::string::npos);
}

TEST(Table, RejectsBadRows) {
  Table t("demo", {{"name", ColumnKind::Text}, {"v", ColumnKind::Energy}});
  EXPECT_THROW(t.add_row({std::string("x")}), Error);
  EXPECT_THROW(t.add_row({1.0, 2.0}), Error);
}

TEST(Table, FormatParsing) {
  EXPECT_EQ(parse_output_format("csv"), OutputFormat::Csv);
  EXPECT_EQ(parse_output_format("md"), OutputFormat::Markdown);
  EXPECT_THROW(parse_output_format("xml"), Error);
  EXPECT_EQ(format_fixed2(-0.001), "0.00");
  EXPECT_EQ(format_fixed2(0.125), "0.12");
  EXPECT_EQ(format_percent(std::nan("")), "n/a");
}

TEST(PlanPeriods, CalendarMonthsClippedToData) {
  SynthProfile p;
  p.start = parse_timestamp("2016-01-15T00:00:00Z");
  const auto d = synth_community(2, 96 * 40, p, 1);  // 40 days
  const auto periods = plan_periods(d.grid(), "all", {});
  ASSERT_EQ(periods.size(), 2u);
  EXPECT_EQ(periods[0].label, "2016-01");
  EXPECT_EQ(periods[0].period.t0, d.grid().start);
  EXPECT_EQ(periods[0].period.tf, parse_timestamp("2016-02-01T00:00:00Z"));
  EXPECT_EQ(periods[1].period.tf, d.grid().end());
  EXPECT_EQ(plan_periods(d.grid(), "2016-02", {}).size(), 1u);
  try {
    plan_periods(d.grid(), "2016-05", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PeriodOutOfRange);
  }
  EXPECT_THROW(plan_periods(d.grid(), "2016-13", {}), Error);
}

TEST(PlanPeriods, UtcOffsetAndWindows) {
  SynthProfile p;
  const auto d = synth_community(2, 96 * 31, p, 1);  // January UTC
  CalendarOptions cal;
  cal.utc_offset = parse_utc_offset("-06:00");
  const auto periods = plan_periods(d.grid(), "all", cal);
  ASSERT_EQ(periods.size(), 2u);
  EXPECT_EQ(periods[0].label, "2015-12");
  EXPECT_EQ(periods[1].period.t0, parse_timestamp("2016-01-01T06:00:00Z"));

  CalendarOptions win;
  win.window = std::chrono::hours{24 * 7};
  const auto weeks = plan_periods(d.grid(), "all", win);
  ASSERT_EQ(weeks.size(), 5u);
  EXPECT_EQ(weeks.back().period.tf, d.grid().end());
  EXPECT_THROW(plan_periods(d.grid(), "2016-01", win), Error);

  CalendarOptions odd;
  odd.window = std::chrono::minutes{20};
  try {
    plan_periods(d.grid(), "all", odd);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnalignedBoundary);
  }
}

TEST(CoalitionSpec, Parse) {
  EXPECT_EQ(CoalitionSpec::parse("all").kind, CoalitionSpec::Kind::All);
  EXPECT_EQ(CoalitionSpec::parse("EACH").kind, CoalitionSpec::Kind::Each);
  const auto ids = CoalitionSpec::parse(" 3, 1 ,2");
  ASSERT_EQ(ids.ids.size(), 3u);
  EXPECT_EQ(ids.ids[1].str(), "1");
  EXPECT_THROW(CoalitionSpec::parse(""), Error);
  EXPECT_THROW(CoalitionSpec::parse("1,,2"), Error);
  EXPECT_THROW(CoalitionSpec::parse("1,"), Error);
  const auto d = fix_a();
  EXPECT_EQ(CoalitionSpec::parse("B,A").members(d), d.ids());
  EXPECT_THROW(CoalitionSpec::parse("each").members(d), Error);
}

TEST(Distribution, QuantilesAndSummary) {
  const auto s = summarize({5, 1, 4, 2, 3});
  EXPECT_EQ(s.count, 5u);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.q05, 1.2);
  EXPECT_DOUBLE_EQ(s.q95, 4.8);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 5.0);
  const auto one = summarize({7.5});
  EXPECT_EQ(one.q05, 7.5);
  EXPECT_EQ(one.q95, 7.5);
  EXPECT_THROW(summarize({}), Error);
  // the mean never leaves [min, max], even with rounding
  const auto flat = summarize(std::vector<double>(7, 0.1));
  EXPECT_GE(flat.mean, flat.min);
  EXPECT_LE(flat.mean, flat.max);
}

TEST(ReportTables, FixAAllocationAndBill) {
  const auto d = fix_a();
  const ReportContext ctx{d, PriceSchedule(2, 1), plan_periods(d.grid(), "all", {}), {}};
  const auto alloc = allocation_tables(ctx, Mechanism::NPS, d.ids());
  const auto j = alloc.monthly.to_json();
  EXPECT_EQ(j["rows"][0]["cost_without_sharing_cents"], 5);
  EXPECT_EQ(j["rows"][0]["cost_with_sharing_cents"], 2);
  EXPECT_EQ(j["rows"][0]["savings_cents"], 3);
  EXPECT_DOUBLE_EQ(j["rows"][0]["savings_pct"].get<double>(), 60.0);
  const auto h = alloc.households.to_json();
  EXPECT_EQ(h["rows"][1]["household"], "B");
  EXPECT_EQ(h["rows"][1]["savings_cents"], 2);

  const auto bill = bill_table(ctx, Mechanism::NM, CoalitionSpec::parse("all")).to_json();
  EXPECT_EQ(bill["rows"][0]["cost_cents"], 2);
  const auto each = bill_table(ctx, Mechanism::FiT, CoalitionSpec::parse("each")).to_json();
  ASSERT_EQ(each["rows"].size(), 2u);
  EXPECT_EQ(each["rows"][0]["cost_cents"], 5);
  EXPECT_EQ(each["totals"]["cost_cents"], 7);
  EXPECT_THROW(allocation_tables(ctx, Mechanism::FiT, d.ids()), Error);
}

TEST(ReportTables, TotalsEqualDisplayedColumnSums) {
  const auto d = synth_community(7, 96 * 70, SynthProfile{}, 9);
  const ReportContext ctx{d, PriceSchedule(11.02, 0.57 * 11.02), plan_periods(d.grid(), "all", {}), {}};
  const auto alloc = allocation_tables(ctx, Mechanism::NM, d.ids());
  const auto bill = bill_table(ctx, Mechanism::NPS, CoalitionSpec::parse("each"));
  const auto cmp = comparison_tables(ctx, d.ids());
  for (const Table* t : {&alloc.monthly, &alloc.households, &bill, &cmp.monthly, &cmp.households}) {
    const auto rows = read_all(t->to_csv());
    ASSERT_GE(rows.size(), 2u);
    for (std::size_t c = 0; c < t->columns().size(); ++c) {
      const ColumnKind k = t->columns()[c].kind;
      if (k != ColumnKind::Energy && k != ColumnKind::Money) continue;
      std::int64_t sum = 0;
      for (std::size_t r = 1; r + 1 < rows.size(); ++r) sum += hundredths(rows[r][c]);
      EXPECT_EQ(sum, hundredths(rows.back()[c])) << t->name() << " column " << t->columns()[c].name;
    }
  }
}

TEST(ReportTables, ComparisonGapMatchesGames) {
  const auto d = synth_community(5, 96 * 3, SynthProfile{}, 4);
  const PriceSchedule prices(2, 1);
  const ReportContext ctx{d, prices, plan_periods(d.grid(), "all", {}), {}};
  const auto j = comparison_tables(ctx, d.ids()).monthly.to_json();
  const auto p = ctx.periods[0].period;
  const auto nm = build_cost_game(d, Mechanism::NM, prices, p);
  const auto nps = build_cost_game(d, Mechanism::NPS, prices, p);
  EXPECT_EQ(j["rows"][0]["cost_gap_cents"], whole_cents(nps.grand_cost() - nm.grand_cost()));
  EXPECT_EQ(j["rows"][0]["cost_gap_cents"], j["rows"][0]["predicted_gap_cents"]);
}

TEST(GameCheck, FixAPassesAndExports) {
  const auto d = fix_a();
  const ReportContext ctx{d, PriceSchedule(2, 1), plan_periods(d.grid(), "all", {}), {}};
  const auto r = game_check(ctx, d.ids(), {Mechanism::NM, Mechanism::NPS});
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.verdict["verdict"], "pass");
  EXPECT_EQ(r.verdict["schema"], "v1");
  const auto& nps = r.verdict["periods"][0]["mechanisms"]["nps"];
  EXPECT_EQ(nps["grand_cost_cents"], 2);
  EXPECT_EQ(nps["allocation"]["amounts_cents"]["A"], 2);
  EXPECT_TRUE(nps["shapley"]["budget_balanced"].get<bool>());
  ASSERT_EQ(r.games.size(), 2u);
  const auto exported = game_export_json(r.games[1], "2016-01");
  EXPECT_EQ(exported["costs"], (nlohmann::ordered_json{{"1", 3}, {"2", 2}, {"3", 2}}));
  EXPECT_EQ(exported["players"], (nlohmann::ordered_json{"A", "B"}));
}

TEST(GameCheck, ConverseFails) {
  const auto d = load_csv(std::string(SOLARCOOP_TEST_DATA) + "/converse.csv");
  const ReportContext ctx{d, PriceSchedule(1, 2), plan_periods(d.grid(), "all", {}), {}};
  const auto r = game_check(ctx, d.ids(), {Mechanism::NM});
  EXPECT_FALSE(r.passed);
  const auto& w = r.verdict["periods"][0]["mechanisms"]["nm"]["subadditivity"]["witness"];
  EXPECT_EQ(w["cost_union_cents"], 0);
  EXPECT_EQ(w["cost_s_cents"].get<int>() + w["cost_t_cents"].get<int>(), -1);
  EXPECT_FALSE(r.verdict["periods"][0]["cost_gap"]["asserted"].get<bool>());
}

TEST(GameCheck, SizeCap) {
  const auto d = synth_community(21, 4, SynthProfile{}, 1);
  const ReportContext ctx{d, PriceSchedule(2, 1), plan_periods(d.grid(), "all", {}), {}};
  try {
    game_check(ctx, d.ids(), {Mechanism::NM});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooManyPlayers);
  }
}

TEST(Svg, BandChartIsDeterministicAndWellFormed) {
  const std::vector<DistributionSummary> s{{3, 100, 50, 150, 40, 160}, {3, -20, -50, 10, -60, 20}};
  const std::string a = band_chart_svg("Cost & <savings>", {"2016-01", "2016-02"}, {{"x", "#123456", s}});
  const std::string b = band_chart_svg("Cost & <savings>", {"2016-01", "2016-02"}, {{"x", "#123456", s}});
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("<svg ", 0), 0u);
  EXPECT_NE(a.find("Cost &amp; &lt;savings&gt;"), std::string::npos);
  EXPECT_NE(a.find("</svg>\n"), std::string::npos);
}
