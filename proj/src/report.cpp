#include "solarcoop/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "solarcoop/csv.hpp"
#include "solarcoop/errors.hpp"

namespace solarcoop {

using json = nlohmann::ordered_json;

// ---- billing calendar ------------------------------------------------------

namespace {

void require_boundary(const TimeGrid& grid, Timestamp t, const std::string& what) {
  if (!grid.on_boundary(t)) {
    throw Error(ErrorKind::UnalignedBoundary,
                what + " boundary " + format_timestamp(t) + " falls inside a metering interval");
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<LabeledPeriod> plan_periods(const TimeGrid& grid, std::string_view spec, const CalendarOptions& calendar) {
  const Timestamp start = grid.start;
  const Timestamp end = grid.end();
  if (grid.length == 0) throw Error(ErrorKind::PeriodOutOfRange, "dataset has no intervals");
  std::vector<LabeledPeriod> out;

  if (calendar.window) {
    const Duration w = *calendar.window;
    if (w <= Duration{0}) throw Error(ErrorKind::InvalidArgument, "billing window must be positive");
    if (lower(spec) != "all") {
      throw Error(ErrorKind::InvalidArgument, "--period must be 'all' when fixed-length windows are used");
    }
    require_boundary(grid, start + w, "window");
    for (Timestamp t0 = start; t0 < end; t0 += w) {
      out.push_back({format_timestamp(t0), BillingPeriod{t0, std::min(t0 + w, end)}});
    }
    return out;
  }

  auto month_period = [&](YearMonth ym) -> std::optional<LabeledPeriod> {
    const Timestamp m0 = month_start(ym, calendar.utc_offset);
    const Timestamp m1 = month_start(next_month(ym), calendar.utc_offset);
    const Timestamp t0 = std::max(m0, start);
    const Timestamp tf = std::min(m1, end);
    if (t0 >= tf) return std::nullopt;
    const std::string label = format_year_month(ym);
    require_boundary(grid, t0, "month " + label);
    require_boundary(grid, tf, "month " + label);
    return LabeledPeriod{label, BillingPeriod{t0, tf}};
  };

  if (lower(spec) == "all") {
    const YearMonth last = month_of(end - Duration{1}, calendar.utc_offset);
    for (YearMonth ym = month_of(start, calendar.utc_offset); ym <= last; ym = next_month(ym)) {
      if (auto p = month_period(ym)) out.push_back(std::move(*p));
    }
    return out;
  }
  const YearMonth ym = parse_year_month(spec);
  auto p = month_period(ym);
  if (!p) {
    throw Error(ErrorKind::PeriodOutOfRange, "no data in " + std::string(spec) + " (data covers " +
                                                 format_timestamp(start) + " to " + format_timestamp(end) + ")");
  }
  out.push_back(std::move(*p));
  return out;
}

// ---- coalition selection ---------------------------------------------------

CoalitionSpec CoalitionSpec::parse(std::string_view text) {
  const std::string t = lower(csv::trim(text));
  CoalitionSpec spec;
  if (t == "all") return spec;
  if (t == "each") {
    spec.kind = Kind::Each;
    return spec;
  }
  spec.kind = Kind::Ids;
  std::string_view rest = csv::trim(text);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view token = csv::trim(rest.substr(0, comma));
    if (token.empty()) throw Error(ErrorKind::InvalidArgument, "empty household id in coalition '" + std::string(text) + "'");
    spec.ids.emplace_back(std::string(token));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
    if (csv::trim(rest).empty()) throw Error(ErrorKind::InvalidArgument, "trailing comma in coalition");
  }
  if (spec.ids.empty()) throw Error(ErrorKind::EmptyCoalition, "coalition is empty");
  return spec;
}

std::vector<HouseholdId> CoalitionSpec::members(const CommunityDataset& dataset) const {
  switch (kind) {
    case Kind::All: return dataset.ids();
    case Kind::Ids: return normalize_coalition(dataset, ids);
    case Kind::Each: break;
  }
  throw Error(ErrorKind::InvalidArgument, "--coalition each names no single coalition; use all or an id list");
}

std::string CoalitionSpec::label() const {
  if (kind == Kind::All) return "all";
  if (kind == Kind::Each) return "each";
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += '+';
    out += id.str();
  }
  return out;
}

// ---- tables ----------------------------------------------------------------

namespace {

json price_meta(const PriceSchedule& p) { return json{{"lambda_cents_per_kwh", p.lambda()}, {"mu_cents_per_kwh", p.mu()}}; }

void common_meta(Table& t, const ReportContext& ctx, std::string_view mechanism, std::string_view coalition) {
  t.meta()["mechanism"] = mechanism;
  t.meta()["prices"] = price_meta(ctx.prices);
  t.meta()["coalition"] = coalition;
}

std::string members_label(const CommunityDataset& dataset, const std::vector<HouseholdId>& members) {
  if (members.size() == dataset.size()) return "all";
  std::string out;
  for (const auto& id : members) {
    if (!out.empty()) out += '+';
    out += id.str();
  }
  return out;
}

}  // namespace

Table bill_table(const ReportContext& ctx, Mechanism mechanism, const CoalitionSpec& coalition) {
  Table t("bill", {{"period", ColumnKind::Text},
                   {"entity", ColumnKind::Text},
                   {"consumption", ColumnKind::Energy},
                   {"generation", ColumnKind::Energy},
                   {"net", ColumnKind::Energy},
                   {"purchased", ColumnKind::Energy},
                   {"sold", ColumnKind::Energy},
                   {"cost", ColumnKind::Money}});
  common_meta(t, ctx, to_string(mechanism), coalition.label());
  t.set_totals("total");

  std::vector<MeterSeries> entities;
  std::vector<std::string> labels;
  if (coalition.kind == CoalitionSpec::Kind::Each) {
    for (const auto& s : ctx.dataset.households()) {
      entities.push_back(s);
      labels.push_back(s.household_id().str());
    }
  } else {
    const auto members = coalition.members(ctx.dataset);
    entities.push_back(aggregate_series(ctx.dataset, members));
    labels.push_back(members_label(ctx.dataset, members));
  }

  const std::size_t n = ctx.periods.size();
  std::vector<std::vector<std::vector<Cell>>> rows(n);
  run_tasks(n, ctx.exec, [&](std::size_t p) {
    const BillingPeriod& period = ctx.periods[p].period;
    for (std::size_t e = 0; e < entities.size(); ++e) {
      const EnergyTotals raw = energy_totals(entities[e], Mechanism::FiT, period);
      const EnergyTotals billed = energy_totals(entities[e], mechanism, period);
      const Money cost = cost_of(entities[e], mechanism, ctx.prices, period);
      rows[p].push_back({ctx.periods[p].label, labels[e], raw.q_total, raw.g_total, raw.net, billed.q_total,
                         billed.g_total, cost.cents()});
    }
  });
  for (auto& per : rows) {
    for (auto& row : per) t.add_row(std::move(row));
  }
  return t;
}

AllocationTables allocation_tables(const ReportContext& ctx, Mechanism mechanism,
                                   const std::vector<HouseholdId>& members) {
  if (mechanism == Mechanism::FiT) {
    throw Error(ErrorKind::InvalidArgument, "sharing allocations are defined for nm and nps, not fit");
  }
  const std::string coalition = members_label(ctx.dataset, members);
  AllocationTables out{
      Table("allocation", {{"period", ColumnKind::Text},
                           {"cost_without_sharing", ColumnKind::Money},
                           {"cost_with_sharing", ColumnKind::Money},
                           {"savings", ColumnKind::Money},
                           {"savings", ColumnKind::Percent, std::make_pair(std::size_t{3}, std::size_t{1})}}),
      Table("households", {{"household", ColumnKind::Text},
                           {"net", ColumnKind::Energy},
                           {"cost_without_sharing", ColumnKind::Money},
                           {"cost_with_sharing", ColumnKind::Money},
                           {"savings", ColumnKind::Money},
                           {"savings", ColumnKind::Percent, std::make_pair(std::size_t{4}, std::size_t{2})}}),
      {}};
  common_meta(out.monthly, ctx, to_string(mechanism), coalition);
  common_meta(out.households, ctx, to_string(mechanism), coalition);
  out.households.meta()["periods"] = ctx.periods.size();
  out.monthly.set_totals("total");
  out.households.set_totals("total");

  out.reports.resize(ctx.periods.size());
  run_tasks(ctx.periods.size(), ctx.exec, [&](std::size_t p) {
    out.reports[p] = savings(ctx.dataset, ctx.prices, ctx.periods[p].period, members, mechanism);
  });

  std::vector<HouseholdSavings> sums(members.size());
  for (std::size_t p = 0; p < ctx.periods.size(); ++p) {
    const SavingsReport& r = out.reports[p];
    out.monthly.add_row({ctx.periods[p].label, r.total_standalone.cents(), r.total_allocated.cents(),
                         r.total_saving.cents(), r.saving_pct});
    for (std::size_t i = 0; i < members.size(); ++i) {
      const HouseholdSavings& h = r.households[i];
      sums[i].net_kwh += h.net_kwh;
      sums[i].standalone += h.standalone;
      sums[i].allocated += h.allocated;
      sums[i].saving += h.saving;
    }
  }
  for (std::size_t i = 0; i < members.size(); ++i) {
    const HouseholdSavings& s = sums[i];
    out.households.add_row({members[i].str(), s.net_kwh, s.standalone.cents(), s.allocated.cents(),
                            s.saving.cents(), saving_percent(s.saving, s.standalone)});
  }
  return out;
}

ComparisonTables comparison_tables(const ReportContext& ctx, const std::vector<HouseholdId>& members) {
  const std::string coalition = members_label(ctx.dataset, members);
  ComparisonTables out{Table("comparison", {{"period", ColumnKind::Text},
                                            {"nm_cost_without_sharing", ColumnKind::Money},
                                            {"nm_cost_with_sharing", ColumnKind::Money},
                                            {"nm_savings", ColumnKind::Money},
                                            {"nps_cost_without_sharing", ColumnKind::Money},
                                            {"nps_cost_with_sharing", ColumnKind::Money},
                                            {"nps_savings", ColumnKind::Money},
                                            {"cost_gap", ColumnKind::Money},
                                            {"predicted_gap", ColumnKind::Money},
                                            {"boundary_intervals", ColumnKind::Integer}}),
                       Table("household_comparison", {{"household", ColumnKind::Text},
                                                      {"net", ColumnKind::Energy},
                                                      {"nm_savings", ColumnKind::Money},
                                                      {"nps_savings", ColumnKind::Money},
                                                      {"difference", ColumnKind::Money},
                                                      {"closed_form_difference", ColumnKind::Money},
                                                      {"boundary_intervals", ColumnKind::Integer}})};
  common_meta(out.monthly, ctx, "nm,nps", coalition);
  common_meta(out.households, ctx, "nm,nps", coalition);
  out.monthly.set_totals("total");
  out.households.set_totals("total");

  const std::size_t n = ctx.periods.size();
  std::vector<SavingsComparison> cmp(n);
  std::vector<CostGap> gaps(n);
  run_tasks(n, ctx.exec, [&](std::size_t p) {
    cmp[p] = compare_savings(ctx.dataset, ctx.prices, ctx.periods[p].period, members);
    gaps[p] = mechanism_cost_gap(ctx.dataset, ctx.prices, ctx.periods[p].period, members);
  });

  struct Sum {
    double net = 0.0;
    Money nm, nps, diff, closed;
    std::size_t boundary = 0;
  };
  std::vector<Sum> sums(members.size());
  for (std::size_t p = 0; p < n; ++p) {
    const SavingsComparison& c = cmp[p];
    out.monthly.add_row({ctx.periods[p].label, c.nm.total_standalone.cents(), c.nm.total_allocated.cents(),
                         c.nm.total_saving.cents(), c.nps.total_standalone.cents(), c.nps.total_allocated.cents(),
                         c.nps.total_saving.cents(), gaps[p].gap.cents(), gaps[p].predicted.cents(),
                         static_cast<double>(c.nps.boundary_flags.size())});
    for (std::size_t i = 0; i < members.size(); ++i) {
      sums[i].net += c.nm.households[i].net_kwh;
      sums[i].nm += c.nm.households[i].saving;
      sums[i].nps += c.nps.households[i].saving;
      sums[i].diff += c.differences[i].direct;
      sums[i].closed += c.differences[i].closed_form;
    }
    for (const auto& f : c.nps.boundary_flags) {
      const auto it = std::lower_bound(members.begin(), members.end(), f.household);
      ++sums[static_cast<std::size_t>(it - members.begin())].boundary;
    }
  }
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Sum& s = sums[i];
    out.households.add_row({members[i].str(), s.net, s.nm.cents(), s.nps.cents(), s.diff.cents(), s.closed.cents(),
                            static_cast<double>(s.boundary)});
  }
  return out;
}

// ---- distributions ---------------------------------------------------------

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

DistributionSummary summarize(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "distribution of an empty sample");
  std::sort(values.begin(), values.end());
  DistributionSummary s;
  s.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.min = values.front();
  s.max = values.back();
  s.mean = std::clamp(sum / static_cast<double>(values.size()), s.min, s.max);
  s.q05 = quantile_sorted(values, 0.05);
  s.q95 = quantile_sorted(values, 0.95);
  return s;
}

DistributionTables distribution_tables(const AllocationTables& allocation, const std::vector<LabeledPeriod>& periods) {
  auto money_columns = [](std::vector<Column> head) {
    for (const char* name : {"mean", "q05", "q95", "min", "max"}) head.push_back({name, ColumnKind::Money});
    return head;
  };
  DistributionTables out{
      Table("cost_distribution", money_columns({{"period", ColumnKind::Text},
                                                {"series", ColumnKind::Text},
                                                {"households", ColumnKind::Integer}})),
      Table("savings_distribution", money_columns({{"period", ColumnKind::Text}, {"households", ColumnKind::Integer}})),
      {},
      {},
      {}};
  for (Table* t : {&out.cost, &out.savings}) {
    auto& meta = t->meta();
    meta["mechanism"] = allocation.monthly.meta().value("mechanism", "");
    meta["prices"] = allocation.monthly.meta().value("prices", json::object());
    meta["coalition"] = allocation.monthly.meta().value("coalition", "");
  }
  auto row = [](std::vector<Cell> head, const DistributionSummary& s) {
    head.push_back(static_cast<double>(s.count));
    for (double v : {s.mean, s.q05, s.q95, s.min, s.max}) head.push_back(v);
    return head;
  };
  for (std::size_t p = 0; p < allocation.reports.size(); ++p) {
    const SavingsReport& r = allocation.reports[p];
    std::vector<double> without, with, saving;
    for (const auto& h : r.households) {
      without.push_back(h.standalone.cents());
      with.push_back(h.allocated.cents());
      saving.push_back(h.saving.cents());
    }
    out.cost_without.push_back(summarize(without));
    out.cost_with.push_back(summarize(with));
    out.saving.push_back(summarize(saving));
    out.cost.add_row(row({periods[p].label, std::string("without_sharing")}, out.cost_without.back()));
    out.cost.add_row(row({periods[p].label, std::string("with_sharing")}, out.cost_with.back()));
    out.savings.add_row(row({periods[p].label}, out.saving.back()));
  }
  return out;
}

// ---- charts ----------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  const double nice = f <= 1.0 ? 1.0 : f <= 2.0 ? 2.0 : f <= 5.0 ? 5.0 : 10.0;
  return nice * mag;
}

}  // namespace

std::string band_chart_svg(std::string_view title, const std::vector<std::string>& categories,
                           const std::vector<BandSeries>& series) {
  const double slot = 64.0;
  const double left = 84.0, right = 24.0, top = 56.0, bottom = 76.0, plot_h = 280.0;
  const double plot_w = std::max(360.0, slot * static_cast<double>(std::max<std::size_t>(categories.size(), 1)));
  const double width = left + plot_w + right;
  const double height = top + plot_h + bottom;

  // y range in dollars, always including zero
  double lo = 0.0, hi = 0.0;
  for (const auto& s : series) {
    for (const auto& d : s.summaries) {
      lo = std::min(lo, d.min / 100.0);
      hi = std::max(hi, d.max / 100.0);
    }
  }
  if (hi - lo <= 0.0) hi = lo + 1.0;
  const double step = nice_step(hi - lo);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;
  auto y_of = [&](double dollars) { return top + plot_h * (hi - dollars) / (hi - lo); };
  const double cat_w = plot_w / static_cast<double>(std::max<std::size_t>(categories.size(), 1));
  const double band_w = cat_w * 0.6 / static_cast<double>(std::max<std::size_t>(series.size(), 1));

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
    << "\" viewBox=\"0 0 " << num(width) << ' ' << num(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
    << "</text>\n";

  // grid and y ticks
  const int ticks = static_cast<int>(std::lround((hi - lo) / step));
  const int decimals = step >= 1.0 ? 0 : step >= 0.1 ? 1 : 2;
  for (int k = 0; k <= ticks; ++k) {
    const double v = lo + step * k;
    const double y = y_of(v);
    const bool zero = std::abs(v) < step * 1e-9;
    o << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left + plot_w) << "\" y2=\"" << num(y)
      << "\" stroke=\"" << (zero ? "#444" : "#ddd") << "\"/>\n";
    char label[48];
    std::snprintf(label, sizeof label, "%.*f", decimals, zero ? 0.0 : v);
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << label << "</text>\n";
  }
  o << "<text x=\"18\" y=\"" << num(top + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << num(top + plot_h / 2) << ")\">USD per household</text>\n";

  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double cx = left + cat_w * (static_cast<double>(c) + 0.5);
    const double ly = top + plot_h + 14;
    o << "<text x=\"" << num(cx) << "\" y=\"" << num(ly) << "\" text-anchor=\"end\" transform=\"rotate(-40 "
      << num(cx) << ' ' << num(ly) << ")\">" << xml_escape(categories[c]) << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (c >= series[s].summaries.size()) continue;
      const DistributionSummary& d = series[s].summaries[c];
      const double x0 = cx - cat_w * 0.3 + band_w * static_cast<double>(s);
      const double xm = x0 + band_w / 2;
      const std::string& color = series[s].color;
      o << "<line x1=\"" << num(xm) << "\" y1=\"" << num(y_of(d.min / 100.0)) << "\" x2=\"" << num(xm) << "\" y2=\""
        << num(y_of(d.max / 100.0)) << "\" stroke=\"" << color << "\"/>\n";
      const double yt = y_of(d.q95 / 100.0), yb = y_of(d.q05 / 100.0);
      o << "<rect x=\"" << num(x0 + 2) << "\" y=\"" << num(yt) << "\" width=\"" << num(band_w - 4) << "\" height=\""
        << num(std::max(yb - yt, 1.0)) << "\" fill=\"" << color << "\" fill-opacity=\"0.35\" stroke=\"" << color
        << "\"/>\n";
      o << "<line x1=\"" << num(x0 + 2) << "\" y1=\"" << num(y_of(d.mean / 100.0)) << "\" x2=\"" << num(x0 + band_w - 2)
        << "\" y2=\"" << num(y_of(d.mean / 100.0)) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    }
  }

  // legend
  double lx = left;
  for (const auto& s : series) {
    o << "<rect x=\"" << num(lx) << "\" y=\"34\" width=\"12\" height=\"12\" fill=\"" << s.color
      << "\" fill-opacity=\"0.35\" stroke=\"" << s.color << "\"/>\n";
    o << "<text x=\"" << num(lx + 16) << "\" y=\"44\">" << xml_escape(s.name) << "</text>\n";
    lx += 28.0 + 7.5 * static_cast<double>(s.name.size());
  }
  o << "<text x=\"" << num(left + plot_w) << "\" y=\"" << num(height - 8) << "\" text-anchor=\"end\" fill=\"#666\">band: 5-95%, whisker: "
       "min-max, bar: mean</text>\n";
  o << "</svg>\n";
  return o.str();
}

// ---- game checks -----------------------------------------------------------

namespace {

json ids_json(const std::vector<HouseholdId>& ids) {
  json a = json::array();
  for (const auto& id : ids) a.push_back(id.str());
  return a;
}

json amounts_json(const AllocationVector& x) {
  json o = json::object();
  for (std::size_t i = 0; i < x.size(); ++i) o[x.households[i].str()] = whole_cents(x.amounts[i]);
  return o;
}

json witness_json(const AxiomWitness& w) {
  json o;
  o["households"] = ids_json(w.households);
  if (!w.net_kwh.empty()) o["net_kwh"] = w.net_kwh;
  json amounts = json::array();
  for (const Money& m : w.allocated) amounts.push_back(whole_cents(m));
  o["allocated_cents"] = amounts;
  if (w.interval) o["interval"] = *w.interval;
  if (w.coalition) o["coalition_mask"] = std::to_string(*w.coalition);
  o["detail"] = w.detail;
  return o;
}

json axioms_json(const AxiomReport& r) {
  json o = json::object();
  for (const AxiomResult& a : r.results) {
    json e;
    e["status"] = to_string(a.status);
    e["guaranteed"] = a.guaranteed;
    e["per_interval"] = a.audited_per_interval;
    if (a.witness) e["witness"] = witness_json(*a.witness);
    o[std::string(to_string(a.axiom))] = e;
  }
  json out;
  out["results"] = o;
  out["findings"] = r.findings;
  out["all_pass_or_vacuous"] = r.all_pass_or_vacuous();
  return out;
}

json core_json(const CostGame& game, const CoreReport& c) {
  json o;
  o["in_core"] = c.in_core;
  o["budget_balanced"] = c.budget_balanced;
  o["allocated_total_cents"] = whole_cents(c.allocated_total);
  o["grand_cost_cents"] = whole_cents(c.grand_cost);
  o["violations"] = c.violations.size();
  if (!c.violations.empty()) {
    const CoreViolation& v = c.violations.front();
    o["first_violation"] = json{{"coalition_mask", std::to_string(v.coalition)},
                                {"members", ids_json(game.members(v.coalition))},
                                {"allocated_cents", whole_cents(v.allocated)},
                                {"cost_cents", whole_cents(v.cost)}};
  }
  return o;
}

json subadditivity_json(const CostGame& game, const SubadditivityReport& r) {
  json o;
  o["holds"] = r.holds;
  o["disjoint_pairs"] = r.disjoint_pairs;
  if (r.witness) {
    const auto& w = *r.witness;
    o["witness"] = json{{"s_mask", std::to_string(w.s)},
                        {"t_mask", std::to_string(w.t)},
                        {"s", ids_json(game.members(w.s))},
                        {"t", ids_json(game.members(w.t))},
                        {"cost_s_cents", whole_cents(w.cost_s)},
                        {"cost_t_cents", whole_cents(w.cost_t)},
                        {"cost_union_cents", whole_cents(w.cost_union)}};
  } else {
    o["witness"] = nullptr;
  }
  return o;
}

}  // namespace

GameCheckOutcome game_check(const ReportContext& ctx, const std::vector<HouseholdId>& members,
                            const std::vector<Mechanism>& mechanisms) {
  if (members.size() > kMaxGamePlayers) {
    throw Error(ErrorKind::TooManyPlayers, std::to_string(members.size()) + " players exceed the game limit of " +
                                               std::to_string(kMaxGamePlayers));
  }
  const CommunityDataset coalition =
      members.size() == ctx.dataset.size() ? ctx.dataset : ctx.dataset.subset(members);

  GameCheckOutcome out;
  json& v = out.verdict;
  v["schema"] = kSchemaVersion;
  v["command"] = "game-check";
  v["prices"] = price_meta(ctx.prices);
  v["price_order"] = ctx.prices.retail_at_least_sellback() ? "lambda>=mu" : "lambda<mu";
  v["players"] = ids_json(members);
  json failed = json::array();
  json periods = json::array();

  for (const LabeledPeriod& lp : ctx.periods) {
    json pj;
    pj["period"] = lp.label;
    pj["start"] = format_timestamp(lp.period.t0);
    pj["end"] = format_timestamp(lp.period.tf);
    json mj = json::object();
    for (const Mechanism mech : mechanisms) {
      const std::string tag = lp.label + " " + std::string(to_string(mech)) + " ";
      CostGame game = build_cost_game(coalition, mech, ctx.prices, lp.period, ctx.exec);
      json g;
      g["grand_cost_cents"] = whole_cents(game.grand_cost());
      const SubadditivityReport sub = check_subadditivity(game, ctx.exec);
      g["subadditivity"] = subadditivity_json(game, sub);
      if (!sub.holds) failed.push_back(tag + "subadditivity");

      if (mech != Mechanism::FiT) {
        const AllocationVector x = mech == Mechanism::NM ? allocate_nm(coalition, ctx.prices, lp.period, members)
                                                         : allocate_nps(coalition, ctx.prices, lp.period, members);
        const CoreReport core = check_core_membership(game, x);
        const AxiomReport axioms = audit_axioms(x, coalition, ctx.prices, lp.period, game);
        json a;
        a["rule"] = mech == Mechanism::NM ? "net-metering sharing" : "net purchase-and-sale sharing";
        a["amounts_cents"] = amounts_json(x);
        a["warnings"] = x.warnings;
        a["core"] = core_json(game, core);
        a["axioms"] = axioms_json(axioms);
        g["allocation"] = a;
        if (!core.in_core) failed.push_back(tag + "core");
        if (!axioms.all_pass_or_vacuous()) failed.push_back(tag + "axioms");
      }

      json sh;
      if (game.size() <= kMaxShapleyPlayers) {
        const AllocationVector phi = shapley_value(game);
        const bool balanced = std::abs((phi.total() - game.grand_cost()).cents()) <= kMoneyTolerance;
        bool symmetric = true;
        for (std::size_t i = 0; i < game.size() && symmetric; ++i) {
          for (std::size_t j = i + 1; j < game.size(); ++j) {
            if (symmetric_players(game, i, j) &&
                std::abs((phi.amounts[i] - phi.amounts[j]).cents()) > kMoneyTolerance) {
              symmetric = false;
              break;
            }
          }
        }
        sh["amounts_cents"] = amounts_json(phi);
        sh["budget_balanced"] = balanced;
        sh["symmetric_players_equal"] = symmetric;
        sh["axioms"] = axioms_json(audit_axioms(phi, coalition, ctx.prices, lp.period, game));
        if (!balanced) failed.push_back(tag + "shapley budget balance");
        if (!symmetric) failed.push_back(tag + "shapley symmetry");
      } else {
        sh["skipped"] = "more than " + std::to_string(kMaxShapleyPlayers) + " players";
      }
      g["shapley"] = sh;
      mj[std::string(to_string(mech))] = g;
      out.games.push_back(std::move(game));
    }
    pj["mechanisms"] = mj;

    json gap;
    try {
      const CostGap cg = mechanism_cost_gap(coalition, ctx.prices, lp.period, members);
      gap["gap_cents"] = whole_cents(cg.gap);
      gap["predicted_cents"] = whole_cents(cg.predicted);
      gap["asserted"] = !cg.price_order_violated;
      gap["holds"] = cg.price_order_violated ? json(nullptr) : json(true);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::IdentityViolation) throw;
      gap["asserted"] = true;
      gap["holds"] = false;
      gap["detail"] = e.what();
      failed.push_back(lp.label + " cost gap identity");
    }
    pj["cost_gap"] = gap;
    periods.push_back(pj);
  }
  v["periods"] = periods;
  out.passed = failed.empty();
  v["verdict"] = out.passed ? "pass" : "fail";
  v["failed_checks"] = failed;
  return out;
}

json game_export_json(const CostGame& game, std::string_view period_label) {
  json o;
  o["schema"] = kSchemaVersion;
  o["mechanism"] = to_string(game.mechanism());
  o["period"] = period_label;
  o["players"] = ids_json(game.players());
  json costs = json::object();
  for (CoalitionMask m = 1; m <= game.full_mask(); ++m) costs[std::to_string(m)] = whole_cents(game.cost(m));
  o["costs"] = costs;
  return o;
}

}  // namespace solarcoop
