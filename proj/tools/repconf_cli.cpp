#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "repconf/als.hpp"
#include "repconf/config.hpp"
#include "repconf/detail/csv.hpp"
#include "repconf/detail/hash.hpp"
#include "repconf/eval.hpp"
#include "repconf/features.hpp"
#include "repconf/grid.hpp"
#include "repconf/ingest.hpp"
#include "repconf/synth.hpp"
#include "repconf/types.hpp"
#include "repconf/weights.hpp"

namespace {

namespace fs = std::filesystem;
using repconf::config::PipelineConfig;

struct CommonArgs {
  std::string config_path;
  std::string workspace_flag;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

PipelineConfig resolve_config(const CommonArgs& args) {
  PipelineConfig cfg;
  if (!args.config_path.empty()) cfg = repconf::config::load_config(args.config_path);
  for (const std::string& kv : args.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    repconf::config::apply_key(cfg, std::string_view(kv).substr(0, eq),
                               std::string_view(kv).substr(eq + 1));
  }
  if (const char* env = std::getenv("REPCONF_WORKSPACE"); env != nullptr && *env != '\0') {
    cfg.workspace = env;
  }
  if (!args.workspace_flag.empty()) cfg.workspace = args.workspace_flag;
  fs::create_directories(cfg.workspace);
  return cfg;
}

fs::path ws_path(const PipelineConfig& cfg, const std::string& name) {
  return fs::path(cfg.workspace) / name;
}

// One manifest per stage: seed, input digests, full config echo. Contains
// nothing time-dependent so identical runs write identical bytes.
void write_manifest(const PipelineConfig& cfg, const std::string& stage, std::uint64_t seed,
                    const std::vector<std::pair<std::string, std::string>>& inputs) {
  std::ofstream out(ws_path(cfg, stage + ".manifest"));
  if (!out) throw std::runtime_error("cannot write manifest for stage " + stage);
  out << "stage=" << stage << '\n' << "seed=" << seed << '\n';
  for (const auto& [label, path] : inputs) {
    out << "input." << label << '=' << path << '\n'
        << "hash." << label << '=' << repconf::detail::hex64(repconf::detail::hash_file(path))
        << '\n';
  }
  std::istringstream echo(repconf::config::echo_config(cfg));
  std::string line;
  while (std::getline(echo, line)) out << "config." << line << '\n';
}

std::string fmt(double v) { return repconf::detail::format_double(v); }

std::string report_text(const std::string& scheme, const repconf::eval::MetricsReport& r) {
  std::ostringstream out;
  out << "scheme=" << scheme << '\n' << "runs=" << r.n_runs << '\n';
  out << "seeds=";
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    if (i) out << ',';
    out << r.seeds[i];
  }
  out << '\n';
  const auto emit = [&](const char* name, const repconf::eval::MetricSeries& m) {
    out << name << "_mean=" << fmt(m.mean()) << '\n' << name << "_std=" << fmt(m.stddev())
        << '\n';
  };
  emit("recall10", r.recall10);
  emit("recall20", r.recall20);
  emit("ndcg10", r.ndcg10);
  emit("ndcg20", r.ndcg20);
  return out.str();
}

std::string report_csv_row(const std::string& scheme, const repconf::eval::MetricsReport& r) {
  std::ostringstream out;
  out << scheme << ',' << r.n_runs << ',' << fmt(r.recall10.mean()) << ','
      << fmt(r.recall10.stddev()) << ',' << fmt(r.recall20.mean()) << ','
      << fmt(r.recall20.stddev()) << ',' << fmt(r.ndcg10.mean()) << ',' << fmt(r.ndcg10.stddev())
      << ',' << fmt(r.ndcg20.mean()) << ',' << fmt(r.ndcg20.stddev()) << '\n';
  return out.str();
}

constexpr const char* kReportCsvHeader =
    "scheme,runs,recall10_mean,recall10_std,recall20_mean,recall20_std,"
    "ndcg10_mean,ndcg10_std,ndcg20_mean,ndcg20_std\n";

repconf::ingest::LabeledData label_events(const PipelineConfig& cfg,
                                          const std::vector<repconf::RawEvent>& events) {
  if (cfg.ingest.label_mode == repconf::config::LabelMode::kDuration) {
    return repconf::ingest::derive_labels_duration(events, cfg.ingest.threshold_s);
  }
  return repconf::ingest::derive_labels_gap(events, cfg.ingest.threshold_s);
}

int cmd_ingest(const CommonArgs& args, const std::string& input) {
  PipelineConfig cfg = resolve_config(args);
  repconf::ingest::ParseOptions opts;
  opts.format = cfg.ingest.format;
  opts.has_header = cfg.ingest.has_header;
  opts.strict = cfg.ingest.strict;
  repconf::ingest::ParseResult parsed = repconf::ingest::parse_events_file(input, opts);
  repconf::ingest::LabeledData labeled = label_events(cfg, parsed.events);
  std::vector<repconf::Interaction> ints = std::move(labeled.interactions);
  if (cfg.ingest.apply_filter) {
    ints = repconf::ingest::filter_dataset(std::move(ints), cfg.ingest.filter);
  }
  repconf::DatasetStats stats = repconf::ingest::compute_stats(ints);

  repconf::ingest::write_interactions(ws_path(cfg, "interactions.csv").string(), ints);
  repconf::ingest::write_id_map(ws_path(cfg, "users.csv").string(), labeled.users);
  repconf::ingest::write_id_map(ws_path(cfg, "items.csv").string(), labeled.items);
  const std::string stats_path = ws_path(cfg, "stats.txt").string();
  repconf::ingest::write_stats(stats_path, stats);
  {
    std::ofstream extra(stats_path, std::ios::app);
    extra << "malformed_rows=" << parsed.malformed_rows << '\n'
          << "dropped_last_events=" << labeled.dropped_last_events << '\n';
  }
  write_manifest(cfg, "ingest", args.seed, {{"events", input}});

  std::ifstream echo(stats_path);
  std::cout << echo.rdbuf();
  return 0;
}

int cmd_stats(const CommonArgs& args, const std::string& interactions) {
  PipelineConfig cfg = resolve_config(args);
  std::vector<repconf::Interaction> ints = repconf::ingest::read_interactions(interactions);
  repconf::DatasetStats stats = repconf::ingest::compute_stats(ints);
  const std::string path = ws_path(cfg, "stats.txt").string();
  repconf::ingest::write_stats(path, stats);
  write_manifest(cfg, "stats", args.seed, {{"interactions", interactions}});
  std::ifstream echo(path);
  std::cout << echo.rdbuf();
  return 0;
}

int cmd_fit(const CommonArgs& args, const std::string& interactions) {
  PipelineConfig cfg = resolve_config(args);
  std::vector<repconf::Interaction> ints = repconf::ingest::read_interactions(interactions);
  std::vector<repconf::AnnotatedInteraction> ann = repconf::features::annotate(ints);

  std::vector<repconf::AnnotatedInteraction> selected =
      repconf::features::exclude_single_le_pairs(repconf::features::select_first_after_le(ann));
  std::vector<repconf::grid::GridCell> playcount_curve = repconf::grid::fit_playcount_curve(
      selected, cfg.grid.prior, cfg.grid.max_playcount, cfg.grid.hdi_mass, args.threads);
  {
    std::ofstream out(ws_path(cfg, "playcount_curve.csv"));
    repconf::grid::export_cells(out, playcount_curve, nullptr);
  }

  repconf::grid::BinSpec bins =
      repconf::grid::build_recency_bins(ann, cfg.grid.n_recency_bins, cfg.grid.min_recency_s);
  std::vector<repconf::grid::GridCell> recency_curve = repconf::grid::fit_recency_curve(
      ann, cfg.grid.prior, bins, cfg.grid.hdi_mass, args.threads);
  {
    std::ofstream out(ws_path(cfg, "recency_curve.csv"));
    repconf::grid::export_cells(out, recency_curve, &bins);
  }

  const auto& grid_input = cfg.grid_apply_1d_filter ? selected : ann;
  repconf::grid::PosteriorGrid grid =
      repconf::grid::fit_grid(grid_input, cfg.grid, args.threads);
  repconf::grid::export_grid_file(ws_path(cfg, "grid.csv").string(), grid);

  write_manifest(cfg, "fit", args.seed, {{"interactions", interactions}});
  std::cout << "cells=" << grid.cells.size() << '\n'
            << "bins=" << grid.bins.n_bins() << '\n'
            << "levels=" << grid.n_levels() << '\n';
  return 0;
}

int cmd_weigh(const CommonArgs& args, const std::string& interactions,
              const std::string& grid_path) {
  PipelineConfig cfg = resolve_config(args);
  std::vector<repconf::Interaction> ints = repconf::ingest::read_interactions(interactions);
  std::vector<repconf::AnnotatedInteraction> ann = repconf::features::annotate(ints);
  repconf::grid::PosteriorGrid grid;
  const bool needs_grid = repconf::weights::scheme_needs_grid(cfg.weights.scheme);
  if (needs_grid) {
    if (grid_path.empty()) {
      throw std::invalid_argument(std::string(repconf::weights::scheme_name(cfg.weights.scheme)) +
                                  " weighting requires --grid");
    }
    grid = repconf::grid::import_grid_file(grid_path);
  }
  repconf::weights::ItemStats item_stats = repconf::weights::item_avg_pos(ints);
  repconf::weights::WeightMatrix wm = repconf::weights::compute_weights(
      ints, ann, needs_grid ? &grid : nullptr, item_stats, cfg.weights);
  repconf::weights::write_weights(ws_path(cfg, "weights.csv").string(), wm);

  std::vector<std::pair<std::string, std::string>> inputs = {{"interactions", interactions}};
  if (needs_grid) inputs.emplace_back("grid", grid_path);
  write_manifest(cfg, "weigh", args.seed, inputs);
  std::cout << "pairs=" << wm.triplets.size() << '\n';
  return 0;
}

int cmd_train(const CommonArgs& args, const std::string& weights_path) {
  PipelineConfig cfg = resolve_config(args);
  repconf::weights::WeightMatrix wm = repconf::weights::read_weights(weights_path);
  repconf::als::AlsConfig als_cfg = cfg.als;
  als_cfg.seed = args.seed;
  repconf::als::FactorModel model = repconf::als::train(wm, als_cfg, args.threads);
  repconf::als::write_model(ws_path(cfg, "model.csv").string(), model);
  write_manifest(cfg, "train", args.seed, {{"weights", weights_path}});
  std::cout << "objective=" << repconf::als::objective(model, wm) << '\n';
  return 0;
}

// Fits the grid on the train part only, so no evaluation-window evidence
// leaks into the posterior estimates.
repconf::grid::PosteriorGrid fit_train_grid(const PipelineConfig& cfg,
                                            const repconf::eval::Split& split,
                                            unsigned threads) {
  std::vector<repconf::AnnotatedInteraction> ann = repconf::features::annotate(split.train);
  if (cfg.grid_apply_1d_filter) {
    ann = repconf::features::exclude_single_le_pairs(
        repconf::features::select_first_after_le(ann));
  }
  return repconf::grid::fit_grid(ann, cfg.grid, threads);
}

int cmd_evaluate(const CommonArgs& args, const std::string& interactions,
                 const std::string& grid_path, bool on_validation) {
  PipelineConfig cfg = resolve_config(args);
  std::vector<repconf::Interaction> ints = repconf::ingest::read_interactions(interactions);
  repconf::eval::Split split = repconf::eval::time_split(ints, cfg.split);

  repconf::grid::PosteriorGrid grid;
  const bool needs_grid = repconf::weights::scheme_needs_grid(cfg.weights.scheme);
  if (needs_grid) {
    grid = grid_path.empty() ? fit_train_grid(cfg, split, args.threads)
                             : repconf::grid::import_grid_file(grid_path);
  }

  repconf::eval::ExperimentOptions opts;
  opts.n_runs = cfg.experiment.n_runs;
  opts.base_seed = args.seed;
  opts.on_validation = on_validation;
  opts.exclude_val_candidates = cfg.experiment.exclude_val_candidates;
  opts.threads = args.threads;
  repconf::eval::MetricsReport report = repconf::eval::run_experiment(
      split, cfg.weights, cfg.als, needs_grid ? &grid : nullptr, opts);

  const std::string scheme(repconf::weights::scheme_name(cfg.weights.scheme));
  std::string text = report_text(scheme, report);
  text += "input_hash=" + repconf::detail::hex64(repconf::detail::hash_file(interactions)) + '\n';
  {
    std::ofstream out(ws_path(cfg, "evaluate_report.txt"));
    out << text;
    std::ofstream csv(ws_path(cfg, "evaluate_report.csv"));
    csv << kReportCsvHeader << report_csv_row(scheme, report);
  }
  std::vector<std::pair<std::string, std::string>> inputs = {{"interactions", interactions}};
  if (!grid_path.empty()) inputs.emplace_back("grid", grid_path);
  write_manifest(cfg, "evaluate", args.seed, inputs);
  std::cout << text;
  return 0;
}

struct SchemeOutcome {
  std::string label;
  repconf::eval::MetricsReport report;
};

// Validation sweep over alpha x epsilon x d; epsilon only varies for the
// log schemes. Returns the test report of the validation-best setting.
SchemeOutcome grid_search_scheme(const PipelineConfig& cfg, const repconf::eval::Split& split,
                                 const repconf::grid::PosteriorGrid* grid,
                                 repconf::weights::Scheme scheme,
                                 const repconf::eval::ExperimentOptions& base_opts) {
  const bool uses_epsilon = scheme == repconf::weights::Scheme::kLog ||
                            scheme == repconf::weights::Scheme::kLogPop;
  std::vector<double> eps_grid =
      uses_epsilon ? cfg.experiment.epsilon_grid : std::vector<double>{cfg.weights.epsilon};

  double best_val = -1.0;
  repconf::weights::WeightConfig best_wcfg = cfg.weights;
  repconf::als::AlsConfig best_acfg = cfg.als;
  for (double alpha : cfg.experiment.alpha_grid) {
    for (double eps : eps_grid) {
      for (int d : cfg.experiment.d_grid) {
        repconf::weights::WeightConfig wcfg = cfg.weights;
        wcfg.scheme = scheme;
        wcfg.scale_alpha = alpha;
        wcfg.epsilon = eps;
        repconf::als::AlsConfig acfg = cfg.als;
        acfg.n_factors = d;
        repconf::eval::ExperimentOptions opts = base_opts;
        opts.on_validation = true;
        repconf::eval::MetricsReport val =
            repconf::eval::run_experiment(split, wcfg, acfg, grid, opts);
        const double score = val.ndcg10.mean();
        if (score > best_val) {
          best_val = score;
          best_wcfg = wcfg;
          best_acfg = acfg;
        }
      }
    }
  }
  repconf::eval::ExperimentOptions opts = base_opts;
  opts.on_validation = false;
  SchemeOutcome outcome;
  outcome.report = repconf::eval::run_experiment(split, best_wcfg, best_acfg, grid, opts);
  std::ostringstream label;
  label << repconf::weights::scheme_name(scheme)
        << "[alpha=" << best_wcfg.scale_alpha;
  if (uses_epsilon) label << ",epsilon=" << best_wcfg.epsilon;
  label << ",d=" << best_acfg.n_factors << ",val_ndcg10=" << best_val << ']';
  outcome.label = label.str();
  return outcome;
}

int cmd_experiment(const CommonArgs& args, const std::string& interactions,
                   const std::string& grid_path) {
  PipelineConfig cfg = resolve_config(args);
  std::vector<repconf::Interaction> ints = repconf::ingest::read_interactions(interactions);
  repconf::eval::Split split = repconf::eval::time_split(ints, cfg.split);

  bool any_posterior = false;
  for (repconf::weights::Scheme s : cfg.experiment.schemes) {
    any_posterior = any_posterior || repconf::weights::scheme_needs_grid(s);
  }
  repconf::grid::PosteriorGrid grid;
  if (any_posterior) {
    grid = grid_path.empty() ? fit_train_grid(cfg, split, args.threads)
                             : repconf::grid::import_grid_file(grid_path);
  }

  repconf::eval::ExperimentOptions opts;
  opts.n_runs = cfg.experiment.n_runs;
  opts.base_seed = args.seed;
  opts.exclude_val_candidates = cfg.experiment.exclude_val_candidates;
  opts.threads = args.threads;

  std::map<repconf::weights::Scheme, repconf::eval::MetricsReport> by_scheme;
  std::ostringstream text;
  std::ostringstream csv;
  csv << kReportCsvHeader;
  for (repconf::weights::Scheme scheme : cfg.experiment.schemes) {
    const repconf::grid::PosteriorGrid* grid_ptr =
        repconf::weights::scheme_needs_grid(scheme) ? &grid : nullptr;
    SchemeOutcome outcome;
    if (cfg.experiment.grid_search) {
      outcome = grid_search_scheme(cfg, split, grid_ptr, scheme, opts);
    } else {
      repconf::weights::WeightConfig wcfg = cfg.weights;
      wcfg.scheme = scheme;
      outcome.label = std::string(repconf::weights::scheme_name(scheme));
      outcome.report = repconf::eval::run_experiment(split, wcfg, cfg.als, grid_ptr, opts);
    }
    by_scheme[scheme] = outcome.report;
    text << report_text(outcome.label, outcome.report) << '\n';
    csv << report_csv_row(outcome.label, outcome.report);
  }

  const auto ta = cfg.experiment.ttest_scheme_a;
  const auto tb = cfg.experiment.ttest_scheme_b;
  if (by_scheme.contains(ta) && by_scheme.contains(tb) && opts.n_runs >= 2) {
    const auto& ra = by_scheme.at(ta);
    const auto& rb = by_scheme.at(tb);
    const auto emit = [&](const char* name, const repconf::eval::MetricSeries& a,
                          const repconf::eval::MetricSeries& b) {
      repconf::eval::TTestResult t = repconf::eval::welch_t_test(a.runs, b.runs);
      text << "ttest." << name << ".scheme_a=" << repconf::weights::scheme_name(ta) << '\n'
           << "ttest." << name << ".scheme_b=" << repconf::weights::scheme_name(tb) << '\n'
           << "ttest." << name << ".t=" << fmt(t.t_stat) << '\n'
           << "ttest." << name << ".df=" << fmt(t.df) << '\n'
           << "ttest." << name << ".p=" << fmt(t.p_value) << '\n';
    };
    emit("recall10", ra.recall10, rb.recall10);
    emit("recall20", ra.recall20, rb.recall20);
    emit("ndcg10", ra.ndcg10, rb.ndcg10);
    emit("ndcg20", ra.ndcg20, rb.ndcg20);
  }
  text << "input_hash=" << repconf::detail::hex64(repconf::detail::hash_file(interactions))
       << '\n';

  {
    std::ofstream out(ws_path(cfg, "experiment_report.txt"));
    out << text.str();
    std::ofstream csv_out(ws_path(cfg, "experiment_report.csv"));
    csv_out << csv.str();
  }
  std::vector<std::pair<std::string, std::string>> inputs = {{"interactions", interactions}};
  if (!grid_path.empty()) inputs.emplace_back("grid", grid_path);
  write_manifest(cfg, "experiment", args.seed, inputs);
  std::cout << text.str();
  return 0;
}

int cmd_synth(const CommonArgs& args) {
  PipelineConfig cfg = resolve_config(args);
  repconf::synth::SynthConfig scfg = cfg.synth;
  scfg.seed = args.seed;
  repconf::synth::SynthData data = repconf::synth::generate(scfg, args.threads);
  repconf::ingest::write_interactions(ws_path(cfg, "synthetic.csv").string(), data.interactions);

  // Truth table on a playcount x log-recency lattice, plus the no-recency row
  // per playcount (empty recency field).
  {
    std::ofstream out(ws_path(cfg, "truth.csv"));
    out << "k,recency_s,p\n";
    const int k_max = std::max(2 * scfg.peak_exposure, 30);
    for (int k = 0; k <= k_max; ++k) {
      out << k << ",," << fmt(data.truth.prob(k, std::nullopt)) << '\n';
      for (int j = 0; j <= 32; ++j) {
        const double r = std::pow(10.0, std::log10(134.0) + j * (7.0 - std::log10(134.0)) / 32);
        out << k << ',' << fmt(r) << ',' << fmt(data.truth.prob(k, r)) << '\n';
      }
    }
  }
  write_manifest(cfg, "synth", args.seed, {});
  std::cout << "interactions=" << data.interactions.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repetition-confidence pipeline"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "key=value config file");
  app.add_option("--workspace", common.workspace_flag,
                 "output directory (overrides config and REPCONF_WORKSPACE)");
  app.add_option("--set", common.overrides, "config override key=value (repeatable)");
  app.add_option("--seed", common.seed, "base seed for all randomness")->capture_default_str();
  app.add_option("--threads", common.threads, "worker thread cap")->capture_default_str();

  std::string input, interactions, grid_path, weights_path;
  bool on_validation = false;

  CLI::App* ingest = app.add_subcommand("ingest", "parse and label raw events");
  ingest->fallthrough();
  ingest->add_option("--input", input, "raw event file")->required();

  CLI::App* stats = app.add_subcommand("stats", "repetition statistics of an interaction file");
  stats->fallthrough();
  stats->add_option("--interactions", interactions, "canonical interaction CSV")->required();

  CLI::App* fit = app.add_subcommand("fit", "fit posterior curves and grid");
  fit->fallthrough();
  fit->add_option("--interactions", interactions, "canonical interaction CSV")->required();

  CLI::App* weigh = app.add_subcommand("weigh", "compute confidence weights");
  weigh->fallthrough();
  weigh->add_option("--interactions", interactions, "canonical interaction CSV")->required();
  weigh->add_option("--grid", grid_path, "fitted grid CSV (posterior schemes)");

  CLI::App* train = app.add_subcommand("train", "train one factor model");
  train->fallthrough();
  train->add_option("--weights", weights_path, "weight CSV")->required();

  CLI::App* evaluate = app.add_subcommand("evaluate", "split, train and score one scheme");
  evaluate->fallthrough();
  evaluate->add_option("--interactions", interactions, "canonical interaction CSV")->required();
  evaluate->add_option("--grid", grid_path, "fitted grid CSV (default: fit on train)");
  evaluate->add_flag("--validation", on_validation, "score the validation part instead of test");

  CLI::App* experiment = app.add_subcommand("experiment", "compare weighting schemes");
  experiment->fallthrough();
  experiment->add_option("--interactions", interactions, "canonical interaction CSV")->required();
  experiment->add_option("--grid", grid_path, "fitted grid CSV (default: fit on train)");

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(common, input);
    if (stats->parsed()) return cmd_stats(common, interactions);
    if (fit->parsed()) return cmd_fit(common, interactions);
    if (weigh->parsed()) return cmd_weigh(common, interactions, grid_path);
    if (train->parsed()) return cmd_train(common, weights_path);
    if (evaluate->parsed()) return cmd_evaluate(common, interactions, grid_path, on_validation);
    if (experiment->parsed()) return cmd_experiment(common, interactions, grid_path);
    if (synth->parsed()) return cmd_synth(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
