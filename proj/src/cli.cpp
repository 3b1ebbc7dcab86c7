#include "solarcoop/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "solarcoop/report.hpp"

namespace solarcoop::cli {

namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string input;
  std::size_t synth = 0;
  std::size_t intervals = 2976;  // one 31-day month at 15 minutes
  std::uint64_t seed = 1;
  std::string mechanism = "nm";
  double lambda = 11.02;
  std::optional<double> mu;  // defaults to 0.57 * lambda
  std::string period = "all";
  std::string coalition = "all";
  std::string format = "md";
  bool svg = false;
  bool fill_gaps = false;
  bool power_kw = false;
  std::optional<unsigned> resolution_minutes;
  std::string utc_offset = "+00:00";
  std::optional<double> window_hours;
  unsigned workers = 0;
  std::string out_dir = ".";
  std::string export_path;
  bool export_game = false;
  bool detail = false;
  CsvSchema schema;
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  f << content;
  f.close();
  if (!f) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::Io, "cannot create output directory " + dir);
  return fs::path(dir);
}

CommunityDataset load_dataset(const RunConfig& cfg, Duration utc_offset) {
  if (cfg.synth > 0) {
    SynthProfile profile;
    profile.utc_offset = utc_offset;
    return synth_community(cfg.synth, cfg.intervals, profile, cfg.seed);
  }
  if (cfg.input.empty()) {
    throw Error(ErrorKind::InvalidArgument, "no input: pass --input PATH, set SOLAR_COOP_DATA, or use --synth N");
  }
  CsvSchema schema = cfg.schema;
  schema.fill_gaps = cfg.fill_gaps;
  schema.power_kw = cfg.power_kw;
  if (cfg.resolution_minutes) schema.resolution = std::chrono::minutes{*cfg.resolution_minutes};
  CommunityDataset d = load_csv(cfg.input, schema);
  d.require_aligned();
  return d;
}

Table ingest_table(const CommunityDataset& d) {
  Table t("ingest", {{"household", ColumnKind::Text},
                     {"intervals", ColumnKind::Integer},
                     {"start", ColumnKind::Text},
                     {"end", ColumnKind::Text},
                     {"consumption", ColumnKind::Energy},
                     {"generation", ColumnKind::Energy},
                     {"net", ColumnKind::Energy}});
  const TimeGrid& g = d.grid();
  t.meta()["households"] = d.size();
  t.meta()["resolution_seconds"] = g.resolution.count();
  t.meta()["start"] = format_timestamp(g.start);
  t.meta()["end"] = format_timestamp(g.end());
  t.set_totals("total");
  for (const MeterSeries& s : d.households()) {
    const EnergyTotals e = energy_totals(s.consumption(), s.generation(), Mechanism::FiT);
    t.add_row({s.household_id().str(), static_cast<double>(s.size()), format_timestamp(s.grid().start),
               format_timestamp(s.grid().end()), e.q_total, e.g_total, e.net});
  }
  return t;
}

Table game_summary_table(const nlohmann::ordered_json& verdict) {
  Table t("game_check", {{"period", ColumnKind::Text},
                         {"mechanism", ColumnKind::Text},
                         {"check", ColumnKind::Text},
                         {"status", ColumnKind::Text},
                         {"detail", ColumnKind::Text}});
  auto status = [](bool ok) { return std::string(ok ? "pass" : "fail"); };
  for (const auto& p : verdict["periods"]) {
    const std::string period = p["period"];
    for (const auto& [mech, g] : p["mechanisms"].items()) {
      const auto& sub = g["subadditivity"];
      std::string detail = std::to_string(sub["disjoint_pairs"].get<std::uint64_t>()) + " disjoint pairs";
      if (!sub["witness"].is_null()) {
        const auto& w = sub["witness"];
        detail = "C(" + w["s_mask"].get<std::string>() + "|" + w["t_mask"].get<std::string>() +
                 ")=" + std::to_string(w["cost_union_cents"].get<std::int64_t>()) + " > C(" +
                 w["s_mask"].get<std::string>() + ")+C(" + w["t_mask"].get<std::string>() + ")=" +
                 std::to_string(w["cost_s_cents"].get<std::int64_t>() + w["cost_t_cents"].get<std::int64_t>());
      }
      t.add_row({period, mech, std::string("subadditivity"), status(sub["holds"]), detail});
      if (g.contains("allocation")) {
        const auto& a = g["allocation"];
        t.add_row({period, mech, std::string("core"), status(a["core"]["in_core"]),
                   std::to_string(a["core"]["violations"].get<std::size_t>()) + " violations"});
        std::string failed;
        for (const auto& [axiom, r] : a["axioms"]["results"].items()) {
          if (r["status"] == "fail") failed += (failed.empty() ? "" : ", ") + axiom;
        }
        t.add_row({period, mech, std::string("axioms"), status(a["axioms"]["all_pass_or_vacuous"]),
                   failed.empty() ? std::string("all pass or vacuous") : "failed: " + failed});
      }
      const auto& sh = g["shapley"];
      if (sh.contains("skipped")) {
        t.add_row({period, mech, std::string("shapley"), std::string("skipped"), sh["skipped"].get<std::string>()});
      } else {
        const bool ok = sh["budget_balanced"].get<bool>() && sh["symmetric_players_equal"].get<bool>();
        t.add_row({period, mech, std::string("shapley"), status(ok), std::string("budget balance and symmetry")});
      }
    }
    const auto& gap = p["cost_gap"];
    const bool asserted = gap["asserted"];
    t.add_row({period, std::string("nps-nm"), std::string("cost gap identity"),
               asserted ? status(gap["holds"].get<bool>()) : std::string("not asserted"),
               asserted ? std::string() : std::string("lambda < mu")});
  }
  return t;
}

int dispatch(CLI::App& app, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::string command = app.get_subcommands().front()->get_name();
  auto explicitly = [&](const char* name) { return app.get_option(name)->count() > 0; };

  const OutputFormat format = explicitly("--format") ? parse_output_format(cfg.format)
                              : command == "game-check" ? OutputFormat::Json
                              : command == "report"     ? OutputFormat::Csv
                                                        : parse_output_format(cfg.format);
  const Mechanism mechanism = parse_mechanism(cfg.mechanism);
  const PriceSchedule prices(cfg.lambda, cfg.mu.value_or(0.57 * cfg.lambda));
  const CoalitionSpec coalition = CoalitionSpec::parse(cfg.coalition);
  CalendarOptions calendar;
  calendar.utc_offset = parse_utc_offset(cfg.utc_offset);
  if (cfg.window_hours) {
    if (!(*cfg.window_hours > 0.0)) throw Error(ErrorKind::InvalidArgument, "--window-hours must be positive");
    calendar.window = Duration{static_cast<std::int64_t>(std::llround(*cfg.window_hours * 3600.0))};
  }
  const ExecutionOptions exec{cfg.workers};

  const CommunityDataset dataset = load_dataset(cfg, calendar.utc_offset);

  if (command == "ingest") {
    out << ingest_table(dataset).render(format);
    if (!cfg.export_path.empty()) {
      std::ofstream f(cfg.export_path, std::ios::binary | std::ios::trunc);
      if (!f) throw Error(ErrorKind::Io, "cannot open " + cfg.export_path + " for writing");
      render_csv(dataset, f, cfg.schema);
      if (!f) throw Error(ErrorKind::Io, "failed writing " + cfg.export_path);
    }
    return kExitOk;
  }

  const ReportContext ctx{dataset, prices, plan_periods(dataset.grid(), cfg.period, calendar), exec};
  if (!prices.retail_at_least_sellback() && command != "bill") {
    err << "warning: lambda < mu; sharing results are computed but the core and cost-causation guarantees do not "
           "apply\n";
  }

  auto require_single_coalition = [&] {
    if (coalition.kind == CoalitionSpec::Kind::Each) {
      throw Error(ErrorKind::InvalidArgument, "--coalition each is only meaningful for bill");
    }
    return coalition.members(dataset);
  };
  auto require_sharing_mechanism = [&] {
    if (mechanism == Mechanism::FiT) {
      throw Error(ErrorKind::InvalidArgument, command + " needs --mechanism nm or nps (fit has no sharing)");
    }
  };
  auto write_svgs = [&](const AllocationTables& alloc, const fs::path& dir) {
    const DistributionTables dist = distribution_tables(alloc, ctx.periods);
    std::vector<std::string> cats;
    for (const auto& p : ctx.periods) cats.push_back(p.label);
    const std::string mech(to_string(mechanism));
    const std::string upper = mechanism == Mechanism::NM ? "NM" : "NPS";
    std::vector<fs::path> written{dir / ("cost_distribution_" + mech + ".svg"),
                                  dir / ("savings_distribution_" + mech + ".svg")};
    write_file(written[0], band_chart_svg("Monthly cost per household (" + upper + ")", cats,
                                          {{"without sharing", "#c0504d", dist.cost_without},
                                           {"with sharing", "#4f81bd", dist.cost_with}}));
    write_file(written[1], band_chart_svg("Monthly savings per household (" + upper + ")", cats,
                                          {{"savings", "#9bbb59", dist.saving}}));
    return written;
  };

  if (command == "bill") {
    out << bill_table(ctx, mechanism, coalition).render(format);
    return kExitOk;
  }
  if (command == "allocate") {
    require_sharing_mechanism();
    const AllocationTables alloc = allocation_tables(ctx, mechanism, require_single_coalition());
    out << (cfg.detail ? alloc.households : alloc.monthly).render(format);
    if (cfg.svg) {
      for (const auto& p : write_svgs(alloc, prepare_out_dir(cfg.out_dir))) err << "wrote " << p.string() << '\n';
    }
    return kExitOk;
  }
  if (command == "compare") {
    const ComparisonTables cmp = comparison_tables(ctx, require_single_coalition());
    out << (cfg.detail ? cmp.households : cmp.monthly).render(format);
    return kExitOk;
  }
  if (command == "game-check") {
    std::vector<Mechanism> mechanisms{Mechanism::NM, Mechanism::NPS};
    if (explicitly("--mechanism")) mechanisms = {mechanism};
    const auto members = require_single_coalition();
    const GameCheckOutcome result = game_check(ctx, members, mechanisms);
    if (format == OutputFormat::Json) {
      out << dump_json(result.verdict);
    } else {
      out << game_summary_table(result.verdict).render(format);
    }
    if (cfg.export_game) {
      const fs::path dir = prepare_out_dir(cfg.out_dir);
      std::size_t k = 0;
      for (const auto& lp : ctx.periods) {
        for (std::size_t m = 0; m < mechanisms.size(); ++m, ++k) {
          const CostGame& game = result.games[k];
          const fs::path path =
              dir / ("game_" + std::string(to_string(game.mechanism())) + "_" + lp.label + ".json");
          write_file(path, dump_json(game_export_json(game, lp.label)));
          err << "wrote " << path.string() << '\n';
        }
      }
    }
    if (!result.passed) {
      for (const auto& f : result.verdict["failed_checks"]) err << "check failed: " << f.get<std::string>() << '\n';
      return kExitCheckFailed;
    }
    return kExitOk;
  }
  if (command == "report") {
    require_sharing_mechanism();
    const auto members = require_single_coalition();
    const fs::path dir = prepare_out_dir(cfg.out_dir);
    const std::string mech(to_string(mechanism));
    const std::string ext(file_extension(format));
    const AllocationTables alloc = allocation_tables(ctx, mechanism, members);
    const DistributionTables dist = distribution_tables(alloc, ctx.periods);
    const std::vector<std::pair<std::string, const Table*>> files{
        {"allocation_" + mech, &alloc.monthly},
        {"households_" + mech, &alloc.households},
        {"cost_distribution_" + mech, &dist.cost},
        {"savings_distribution_" + mech, &dist.savings},
    };
    const Table bill = bill_table(ctx, mechanism, coalition);
    std::vector<fs::path> written;
    written.push_back(dir / ("bill_" + mech + "." + ext));
    write_file(written.back(), bill.render(format));
    for (const auto& [stem, table] : files) {
      written.push_back(dir / (stem + "." + ext));
      write_file(written.back(), table->render(format));
    }
    if (cfg.svg) {
      for (auto& p : write_svgs(alloc, dir)) written.push_back(std::move(p));
    }
    for (const auto& p : written) out << p.string() << '\n';
    return kExitOk;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown command " + command);
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TooManyPlayers: return kExitSizeCap;
    case ErrorKind::IdentityViolation: return kExitCheckFailed;
    case ErrorKind::Io:
    case ErrorKind::MalformedRow:
    case ErrorKind::NegativeEnergy:
    case ErrorKind::MixedResolution:
    case ErrorKind::GapInSeries:
    case ErrorKind::MisalignedGrid:
    case ErrorKind::DuplicateHousehold: return kExitIo;
    default: return kExitUsage;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Community solar billing, sharing allocations and cooperative-game checks.", "solar-coop"};
  app.set_version_flag("--version", "solar-coop 1.0.0");
  app.fallthrough();
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "Read key = value settings from FILE (flags override it)");

  RunConfig cfg;
  app.add_option("--input,-i", cfg.input, "Meter data CSV (default: $SOLAR_COOP_DATA)")->envname("SOLAR_COOP_DATA");
  app.add_option("--synth", cfg.synth, "Use a synthetic community of N households instead of --input");
  app.add_option("--intervals", cfg.intervals, "Intervals per synthetic household")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Seed for synthetic data")->capture_default_str();
  app.add_option("--mechanism,-m", cfg.mechanism, "Billing mechanism: fit, nm or nps")->capture_default_str();
  app.add_option("--lambda", cfg.lambda, "Retail price, cents per kWh")->capture_default_str();
  app.add_option("--mu", cfg.mu, "Sell-back price, cents per kWh (default 0.57 * lambda)");
  app.add_option("--period", cfg.period, "Billing month YYYY-MM, or all")->capture_default_str();
  app.add_option("--coalition", cfg.coalition, "all, each, or comma-separated household ids")->capture_default_str();
  app.add_option("--format,-f", cfg.format, "Output format: csv, json or md")->capture_default_str();
  app.add_flag("--svg", cfg.svg, "Also write cost and savings distribution charts (allocate, report)");
  app.add_flag("--fill-gaps", cfg.fill_gaps, "Zero-fill missing intervals instead of rejecting the input");
  app.add_flag("--power-kw", cfg.power_kw, "Readings are average kW over the interval, not kWh");
  app.add_option("--resolution-minutes", cfg.resolution_minutes, "Interval length (inferred when omitted)");
  app.add_option("--utc-offset", cfg.utc_offset, "Offset of the billing calendar, e.g. -06:00")
      ->capture_default_str();
  app.add_option("--window-hours", cfg.window_hours, "Fixed-length billing windows instead of calendar months");
  app.add_option("--workers", cfg.workers, "Worker threads (0: one per core)")->capture_default_str();
  app.add_option("--out-dir,-o", cfg.out_dir, "Directory for written files")->capture_default_str();
  app.add_option("--export", cfg.export_path, "ingest: write the validated data as normalized CSV");
  app.add_flag("--export-game", cfg.export_game, "game-check: write each coalition cost table as JSON");
  app.add_flag("--detail", cfg.detail, "allocate, compare: print the per-household table");
  app.add_option("--time-column", cfg.schema.timestamp_column, "Timestamp column name")->capture_default_str();
  app.add_option("--id-column", cfg.schema.household_column, "Household id column name")->capture_default_str();
  app.add_option("--use-column", cfg.schema.consumption_column, "Consumption column name")->capture_default_str();
  app.add_option("--gen-column", cfg.schema.generation_column, "Generation column name")->capture_default_str();

  app.add_subcommand("ingest", "Validate meter data and summarize each household");
  app.add_subcommand("bill", "Monthly energy totals and cost under one mechanism");
  app.add_subcommand("allocate", "Savings from sharing under nm or nps");
  app.add_subcommand("compare", "Net metering against net purchase-and-sale sharing");
  app.add_subcommand("game-check", "Subadditivity, core and axiom checks of the coalition game");
  app.add_subcommand("report", "Write every table (and optional charts) to --out-dir");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  }

  try {
    return dispatch(app, cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace solarcoop::cli
