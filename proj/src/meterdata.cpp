#include "solarcoop/meterdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <tuple>

#include "solarcoop/csv.hpp"
#include "solarcoop/errors.hpp"

namespace solarcoop {

namespace {

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return c >= '0' && c <= '9'; });
}

std::string_view strip_leading_zeros(const std::string& s) {
  std::string_view v = s;
  while (v.size() > 1 && v.front() == '0') v.remove_prefix(1);
  return v;
}

std::string describe(Timestamp t) { return format_timestamp(t); }

}  // namespace

std::strong_ordering operator<=>(const HouseholdId& a, const HouseholdId& b) {
  const bool na = all_digits(a.value_);
  const bool nb = all_digits(b.value_);
  if (na != nb) return na ? std::strong_ordering::less : std::strong_ordering::greater;
  if (na) {
    const auto va = strip_leading_zeros(a.value_);
    const auto vb = strip_leading_zeros(b.value_);
    if (va.size() != vb.size()) return va.size() <=> vb.size();
    if (const auto c = va.compare(vb); c != 0) return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  // distinct spellings of the same number ("07" vs "7") still order totally
  const auto c = a.value_.compare(b.value_);
  if (c == 0) return std::strong_ordering::equal;
  return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
}

bool TimeGrid::on_boundary(Timestamp t) const {
  if (resolution.count() <= 0) return false;
  return (t - start) % resolution == Duration{0};
}

MeterSeries::MeterSeries(HouseholdId id, Timestamp start, Duration resolution,
                         std::vector<double> consumption, std::vector<double> generation)
    : id_(std::move(id)),
      grid_{start, resolution, consumption.size()},
      consumption_(std::move(consumption)),
      generation_(std::move(generation)) {
  if (resolution.count() <= 0) {
    throw Error(ErrorKind::InvalidArgument, "household " + id_.str() + ": resolution must be positive");
  }
  if (consumption_.empty()) throw Error(ErrorKind::InvalidArgument, "household " + id_.str() + ": no intervals");
  if (consumption_.size() != generation_.size()) {
    throw Error(ErrorKind::InvalidArgument, "household " + id_.str() + ": consumption/generation length mismatch");
  }
  for (std::size_t i = 0; i < consumption_.size(); ++i) {
    const double q = consumption_[i];
    const double g = generation_[i];
    if (!std::isfinite(q) || !std::isfinite(g)) {
      throw Error(ErrorKind::MalformedRow,
                  "household " + id_.str() + " at " + describe(grid_.at(i)) + ": non-finite energy");
    }
    if (q < 0.0 || g < 0.0) {
      throw Error(ErrorKind::NegativeEnergy,
                  "household " + id_.str() + " at " + describe(grid_.at(i)) + ": negative energy");
    }
  }
}

MeterInterval MeterSeries::interval(std::size_t i) const {
  return {grid_.at(i), consumption_.at(i), generation_.at(i)};
}

CommunityDataset::CommunityDataset(std::vector<MeterSeries> households) : households_(std::move(households)) {
  if (households_.empty()) throw Error(ErrorKind::InvalidArgument, "dataset has no households");
  std::sort(households_.begin(), households_.end(),
            [](const MeterSeries& a, const MeterSeries& b) { return a.household_id() < b.household_id(); });
  for (std::size_t i = 1; i < households_.size(); ++i) {
    if (households_[i].household_id() == households_[i - 1].household_id()) {
      throw Error(ErrorKind::DuplicateHousehold, "household " + households_[i].household_id().str());
    }
  }
}

std::vector<HouseholdId> CommunityDataset::ids() const {
  std::vector<HouseholdId> out;
  out.reserve(households_.size());
  for (const auto& h : households_) out.push_back(h.household_id());
  return out;
}

std::optional<std::size_t> CommunityDataset::index_of(const HouseholdId& id) const {
  const auto it = std::lower_bound(households_.begin(), households_.end(), id,
                                   [](const MeterSeries& s, const HouseholdId& v) { return s.household_id() < v; });
  if (it == households_.end() || it->household_id() != id) return std::nullopt;
  return static_cast<std::size_t>(it - households_.begin());
}

const MeterSeries& CommunityDataset::household(const HouseholdId& id) const {
  const auto idx = index_of(id);
  if (!idx) throw Error(ErrorKind::UnknownHousehold, "household " + id.str());
  return households_[*idx];
}

CommunityDataset CommunityDataset::subset(std::span<const HouseholdId> ids) const {
  if (ids.empty()) throw Error(ErrorKind::EmptyCoalition, "empty household subset");
  std::vector<MeterSeries> picked;
  picked.reserve(ids.size());
  for (const auto& id : ids) picked.push_back(household(id));
  return CommunityDataset(std::move(picked));
}

bool CommunityDataset::is_aligned() const { return validate_alignment(*this).empty(); }

void CommunityDataset::require_aligned() const {
  const auto violations = validate_alignment(*this);
  if (!violations.empty()) {
    throw Error(ErrorKind::MisalignedGrid, violations.front().detail);
  }
}

std::vector<AlignmentViolation> validate_alignment(const CommunityDataset& dataset) {
  std::vector<AlignmentViolation> out;
  const TimeGrid& ref = dataset.grid();
  for (const auto& s : dataset.households()) {
    const TimeGrid& g = s.grid();
    if (g.start != ref.start || g.resolution != ref.resolution) {
      out.push_back({s.household_id(), AlignmentViolation::Kind::Misalignment,
                     "household " + s.household_id().str() + " starts " + describe(g.start) + " step " +
                         std::to_string(g.resolution.count()) + "s; reference starts " + describe(ref.start) +
                         " step " + std::to_string(ref.resolution.count()) + "s"});
    } else if (g.length != ref.length) {
      out.push_back({s.household_id(), AlignmentViolation::Kind::LengthMismatch,
                     "household " + s.household_id().str() + " has " + std::to_string(g.length) +
                         " intervals; reference has " + std::to_string(ref.length)});
    }
  }
  return out;
}

namespace {

struct Row {
  Timestamp t;
  double q;
  double g;
  std::size_t line;
};

std::size_t column_index(const std::vector<std::string>& header, const std::string& name, bool required) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (csv::trim(header[i]) == name) return i;
  }
  if (required) throw Error(ErrorKind::MalformedRow, "header is missing column '" + name + "'");
  return header.size();
}

[[noreturn]] void row_error(ErrorKind kind, std::size_t line, const std::string& what) {
  throw Error(kind, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

CommunityDataset parse_csv(std::istream& in, const CsvSchema& schema) {
  std::size_t line = 0;
  auto header = csv::read_record(in, line);
  if (!header) throw Error(ErrorKind::MalformedRow, "empty input");
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) header->front().erase(0, 3);

  const std::size_t ts_col = column_index(*header, schema.timestamp_column, true);
  const std::size_t id_col = column_index(*header, schema.household_column, true);
  const std::size_t q_col = column_index(*header, schema.consumption_column, true);
  const std::size_t g_col = column_index(*header, schema.generation_column, false);
  const bool has_gen = g_col < header->size();

  std::map<HouseholdId, std::vector<Row>> grouped;
  while (auto rec = csv::read_record(in, line)) {
    if (rec->size() == 1 && csv::trim(rec->front()).empty()) continue;
    if (rec->size() != header->size()) {
      row_error(ErrorKind::MalformedRow, line,
                "expected " + std::to_string(header->size()) + " fields, got " + std::to_string(rec->size()));
    }
    const auto& f = *rec;
    const Timestamp t = [&] {
      try {
        return parse_timestamp(csv::trim(f[ts_col]));
      } catch (const Error& e) {
        row_error(ErrorKind::MalformedRow, line, e.what());
      }
    }();
    const auto id = csv::trim(f[id_col]);
    if (id.empty()) row_error(ErrorKind::MalformedRow, line, "empty household id");

    const auto q = csv::parse_double(f[q_col]);
    if (!q) row_error(ErrorKind::MalformedRow, line, "unparseable consumption '" + f[q_col] + "'");
    double g = 0.0;
    // a blank generation cell means the meter has no PV channel
    if (has_gen && !csv::trim(f[g_col]).empty()) {
      const auto parsed = csv::parse_double(f[g_col]);
      if (!parsed) row_error(ErrorKind::MalformedRow, line, "unparseable generation '" + f[g_col] + "'");
      g = *parsed;
    }
    if (!std::isfinite(*q) || !std::isfinite(g)) row_error(ErrorKind::MalformedRow, line, "non-finite energy");
    if (*q < 0.0) row_error(ErrorKind::NegativeEnergy, line, "consumption is negative");
    if (g < 0.0) row_error(ErrorKind::NegativeEnergy, line, "generation is negative");
    grouped[HouseholdId(std::string(id))].push_back({t, *q, g, line});
  }
  if (grouped.empty()) throw Error(ErrorKind::MalformedRow, "no data rows");

  for (auto& [id, rows] : grouped) {
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].t == rows[i - 1].t) {
        row_error(ErrorKind::MalformedRow, rows[i].line,
                  "duplicate timestamp " + describe(rows[i].t) + " for household " + id.str());
      }
    }
  }

  Duration resolution{0};
  if (schema.resolution) {
    resolution = *schema.resolution;
    if (resolution.count() <= 0) throw Error(ErrorKind::InvalidArgument, "resolution must be positive");
  } else {
    for (const auto& [id, rows] : grouped) {
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const Duration step = rows[i].t - rows[i - 1].t;
        if (resolution.count() == 0 || step < resolution) resolution = step;
      }
    }
    if (resolution.count() == 0) {
      throw Error(ErrorKind::MixedResolution, "cannot infer grid step: every household has a single row");
    }
  }

  Timestamp span_start = Timestamp::max();
  Timestamp span_end = Timestamp::min();
  for (const auto& [id, rows] : grouped) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const Duration step = rows[i].t - rows[i - 1].t;
      if (step % resolution != Duration{0}) {
        row_error(ErrorKind::MixedResolution, rows[i].line,
                  "step of " + std::to_string(step.count()) + "s is not a multiple of " +
                      std::to_string(resolution.count()) + "s");
      }
      if (step != resolution && !schema.fill_gaps) {
        row_error(ErrorKind::GapInSeries, rows[i].line,
                  "household " + id.str() + " has no data between " + describe(rows[i - 1].t) + " and " +
                      describe(rows[i].t));
      }
    }
    span_start = std::min(span_start, rows.front().t);
    span_end = std::max(span_end, rows.back().t + resolution);
  }

  const double energy_scale =
      schema.power_kw ? std::chrono::duration<double, std::ratio<3600>>(resolution).count() : 1.0;

  std::vector<MeterSeries> series;
  series.reserve(grouped.size());
  for (auto& [id, rows] : grouped) {
    Timestamp start = rows.front().t;
    Timestamp end = rows.back().t + resolution;
    if (schema.fill_gaps) {
      if ((start - span_start) % resolution != Duration{0}) {
        throw Error(ErrorKind::MisalignedGrid, "household " + id.str() + " is off the common grid phase");
      }
      start = span_start;
      end = span_end;
    }
    const auto n = static_cast<std::size_t>((end - start) / resolution);
    std::vector<double> q(n, 0.0), g(n, 0.0);
    for (const auto& r : rows) {
      const auto idx = static_cast<std::size_t>((r.t - start) / resolution);
      q[idx] = r.q * energy_scale;
      g[idx] = r.g * energy_scale;
    }
    series.emplace_back(id, start, resolution, std::move(q), std::move(g));
  }
  CommunityDataset dataset(std::move(series));
  dataset.require_aligned();
  return dataset;
}

CommunityDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return parse_csv(in, schema);
}

void render_csv(const CommunityDataset& dataset, std::ostream& out, const CsvSchema& schema) {
  csv::write_record(out, {schema.timestamp_column, schema.household_column, schema.consumption_column,
                          schema.generation_column});
  for (const auto& s : dataset.households()) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      csv::write_record(out, {format_timestamp(s.grid().at(i)), s.household_id().str(),
                              csv::format_double(s.consumption()[i]), csv::format_double(s.generation()[i])});
    }
  }
}

BillingPeriod full_span(const TimeGrid& grid) { return {grid.start, grid.end()}; }

MeterSeries slice_series(const MeterSeries& series, const BillingPeriod& period) {
  const TimeGrid& g = series.grid();
  if (period.t0 >= period.tf) {
    throw Error(ErrorKind::PeriodOutOfRange, "empty period [" + describe(period.t0) + ", " + describe(period.tf) + ")");
  }
  if (period.t0 < g.start || period.tf > g.end()) {
    throw Error(ErrorKind::PeriodOutOfRange, "period [" + describe(period.t0) + ", " + describe(period.tf) +
                                                 ") outside data span [" + describe(g.start) + ", " +
                                                 describe(g.end()) + ")");
  }
  if (!g.on_boundary(period.t0) || !g.on_boundary(period.tf)) {
    throw Error(ErrorKind::UnalignedBoundary, "period [" + describe(period.t0) + ", " + describe(period.tf) +
                                                  ") is not on the interval grid");
  }
  const auto first = static_cast<std::size_t>((period.t0 - g.start) / g.resolution);
  const auto last = static_cast<std::size_t>((period.tf - g.start) / g.resolution);
  if (first == 0 && last == g.length) return series;
  const auto q = series.consumption();
  const auto gen = series.generation();
  return MeterSeries(series.household_id(), period.t0, g.resolution,
                     std::vector<double>(q.begin() + first, q.begin() + last),
                     std::vector<double>(gen.begin() + first, gen.begin() + last));
}

CommunityDataset slice_period(const CommunityDataset& dataset, const BillingPeriod& period) {
  dataset.require_aligned();
  std::vector<MeterSeries> out;
  out.reserve(dataset.size());
  for (const auto& s : dataset.households()) out.push_back(slice_series(s, period));
  return CommunityDataset(std::move(out));
}

double pv_envelope(Timestamp interval_start, Duration resolution, Duration utc_offset) {
  using namespace std::chrono;
  const auto local = interval_start + utc_offset;
  const auto midpoint = local - floor<days>(local) + resolution / 2;
  const double hour = duration<double, std::ratio<3600>>(midpoint).count();
  if (hour < 6.0 || hour >= 18.0) return 0.0;
  return std::sin(std::numbers::pi * (hour - 6.0) / 12.0);
}

CommunityDataset synth_community(std::size_t households, std::size_t intervals, const SynthProfile& profile,
                                 std::uint64_t seed) {
  if (households == 0 || intervals == 0) {
    throw Error(ErrorKind::InvalidArgument, "synthetic community needs n >= 1 and t >= 1");
  }
  if (profile.resolution.count() <= 0) throw Error(ErrorKind::InvalidArgument, "resolution must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double sigma = std::max(profile.consumption_sigma, 0.0);
  // lognormal with the requested mean
  std::lognormal_distribution<double> load(std::log(std::max(profile.mean_consumption_kwh, 1e-12)) - sigma * sigma / 2,
                                           sigma);

  std::vector<double> envelope(intervals);
  for (std::size_t t = 0; t < intervals; ++t) {
    const Timestamp at = profile.start + profile.resolution * static_cast<std::int64_t>(t);
    envelope[t] = profile.daylight_envelope ? pv_envelope(at, profile.resolution, profile.utc_offset) : 1.0;
  }

  std::vector<MeterSeries> out;
  out.reserve(households);
  for (std::size_t h = 0; h < households; ++h) {
    const double capacity =
        profile.mean_pv_peak_kwh * (1.0 - profile.pv_capacity_spread + 2.0 * profile.pv_capacity_spread * unit(rng));
    std::vector<double> q(intervals), g(intervals);
    for (std::size_t t = 0; t < intervals; ++t) {
      q[t] = profile.mean_consumption_kwh > 0.0 ? load(rng) : 0.0;
      const double attenuation = 1.0 - profile.cloudiness * unit(rng);
      g[t] = envelope[t] > 0.0 ? std::max(capacity, 0.0) * envelope[t] * attenuation : 0.0;
    }
    out.emplace_back(HouseholdId(std::to_string(h + 1)), profile.start, profile.resolution, std::move(q), std::move(g));
  }
  return CommunityDataset(std::move(out));
}

}  // namespace solarcoop
