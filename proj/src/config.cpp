#include "repconf/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "repconf/detail/csv.hpp"

namespace repconf::config {

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw std::invalid_argument("config: bad value '" + std::string(value) + "' for key " +
                              std::string(key));
}

std::int64_t to_int(std::string_view key, std::string_view value) {
  auto v = detail::parse_int(value);
  if (!v) bad_value(key, value);
  return *v;
}

double to_double(std::string_view key, std::string_view value) {
  auto v = detail::parse_double(value);
  if (!v) bad_value(key, value);
  return *v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

template <typename T, typename Parse>
std::vector<T> to_list(std::string_view key, std::string_view value, Parse parse) {
  std::vector<std::string_view> parts;
  detail::split_line(value, ',', parts);
  std::vector<T> out;
  out.reserve(parts.size());
  for (std::string_view p : parts) {
    if (p.empty()) bad_value(key, value);
    out.push_back(parse(key, p));
  }
  if (out.empty()) bad_value(key, value);
  return out;
}

std::string format_list_double(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += detail::format_double(v[i]);
  }
  return out;
}

}  // namespace

void apply_key(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "ingest.format") {
    if (value == "csv") {
      cfg.ingest.format = ingest::Format::kCsv;
    } else if (value == "tsv") {
      cfg.ingest.format = ingest::Format::kTsv;
    } else {
      bad_value(key, value);
    }
  } else if (key == "ingest.has_header") {
    cfg.ingest.has_header = to_bool(key, value);
  } else if (key == "ingest.strict") {
    cfg.ingest.strict = to_bool(key, value);
  } else if (key == "ingest.label_mode") {
    if (value == "duration") {
      cfg.ingest.label_mode = LabelMode::kDuration;
    } else if (value == "gap") {
      cfg.ingest.label_mode = LabelMode::kGap;
    } else {
      bad_value(key, value);
    }
  } else if (key == "ingest.threshold_s") {
    cfg.ingest.threshold_s = to_int(key, value);
  } else if (key == "ingest.min_items_per_user") {
    cfg.ingest.filter.min_items_per_user = to_int(key, value);
  } else if (key == "ingest.min_users_per_item") {
    cfg.ingest.filter.min_users_per_item = to_int(key, value);
  } else if (key == "ingest.rep_cap") {
    if (value == "none") {
      cfg.ingest.filter.rep_cap.reset();
    } else {
      cfg.ingest.filter.rep_cap = to_int(key, value);
    }
  } else if (key == "ingest.apply_filter") {
    cfg.ingest.apply_filter = to_bool(key, value);
  } else if (key == "grid.prior_a") {
    cfg.grid.prior.a = to_double(key, value);
  } else if (key == "grid.prior_b") {
    cfg.grid.prior.b = to_double(key, value);
  } else if (key == "grid.n_recency_bins") {
    cfg.grid.n_recency_bins = static_cast<int>(to_int(key, value));
  } else if (key == "grid.max_playcount") {
    cfg.grid.max_playcount = static_cast<int>(to_int(key, value));
  } else if (key == "grid.hdi_mass") {
    cfg.grid.hdi_mass = to_double(key, value);
  } else if (key == "grid.min_recency_s") {
    cfg.grid.min_recency_s = to_double(key, value);
  } else if (key == "grid.apply_1d_filter") {
    cfg.grid_apply_1d_filter = to_bool(key, value);
  } else if (key == "weights.scheme") {
    cfg.weights.scheme = weights::parse_scheme(value);
  } else if (key == "weights.scale_alpha") {
    cfg.weights.scale_alpha = to_double(key, value);
  } else if (key == "weights.epsilon") {
    cfg.weights.epsilon = to_double(key, value);
  } else if (key == "weights.cutoff_c") {
    cfg.weights.cutoff_c = to_double(key, value);
  } else if (key == "als.n_factors") {
    cfg.als.n_factors = static_cast<int>(to_int(key, value));
  } else if (key == "als.reg_lambda") {
    cfg.als.reg_lambda = to_double(key, value);
  } else if (key == "als.n_iterations") {
    cfg.als.n_iterations = static_cast<int>(to_int(key, value));
  } else if (key == "als.init_scale") {
    cfg.als.init_scale = to_double(key, value);
  } else if (key == "split.train_frac") {
    cfg.split.train_frac = to_double(key, value);
  } else if (key == "split.val_frac_end") {
    cfg.split.val_frac_end = to_double(key, value);
  } else if (key == "split.min_train_items_per_user") {
    cfg.split.min_train_items_per_user = static_cast<int>(to_int(key, value));
  } else if (key == "split.eval_items_per_user") {
    cfg.split.eval_items_per_user = static_cast<int>(to_int(key, value));
  } else if (key == "synth.n_users") {
    cfg.synth.n_users = static_cast<std::int32_t>(to_int(key, value));
  } else if (key == "synth.n_items") {
    cfg.synth.n_items = static_cast<std::int32_t>(to_int(key, value));
  } else if (key == "synth.peak_exposure") {
    cfg.synth.peak_exposure = static_cast<int>(to_int(key, value));
  } else if (key == "synth.base_prob") {
    cfg.synth.base_prob = to_double(key, value);
  } else if (key == "synth.peak_prob") {
    cfg.synth.peak_prob = to_double(key, value);
  } else if (key == "synth.satiation_rate") {
    cfg.synth.satiation_rate = to_double(key, value);
  } else if (key == "synth.daily_boost") {
    cfg.synth.daily_boost = to_double(key, value);
  } else if (key == "synth.daily_sigma_s") {
    cfg.synth.daily_sigma_s = to_double(key, value);
  } else if (key == "synth.short_gap_median_s") {
    cfg.synth.short_gap_median_s = to_double(key, value);
  } else if (key == "synth.short_gap_sigma") {
    cfg.synth.short_gap_sigma = to_double(key, value);
  } else if (key == "synth.daily_gap_sigma") {
    cfg.synth.daily_gap_sigma = to_double(key, value);
  } else if (key == "synth.daily_fraction") {
    cfg.synth.daily_fraction = to_double(key, value);
  } else if (key == "synth.mean_events_per_pair") {
    cfg.synth.mean_events_per_pair = to_double(key, value);
  } else if (key == "synth.start_window_s") {
    cfg.synth.start_window_s = to_int(key, value);
  } else if (key == "experiment.schemes") {
    cfg.experiment.schemes = to_list<weights::Scheme>(
        key, value, [](std::string_view, std::string_view v) { return weights::parse_scheme(v); });
  } else if (key == "experiment.n_runs") {
    cfg.experiment.n_runs = static_cast<int>(to_int(key, value));
  } else if (key == "experiment.grid_search") {
    cfg.experiment.grid_search = to_bool(key, value);
  } else if (key == "experiment.alpha_grid") {
    cfg.experiment.alpha_grid = to_list<double>(key, value, to_double);
  } else if (key == "experiment.epsilon_grid") {
    cfg.experiment.epsilon_grid = to_list<double>(key, value, to_double);
  } else if (key == "experiment.d_grid") {
    cfg.experiment.d_grid = to_list<int>(key, value, [](std::string_view k, std::string_view v) {
      return static_cast<int>(to_int(k, v));
    });
  } else if (key == "experiment.exclude_val_candidates") {
    cfg.experiment.exclude_val_candidates = to_bool(key, value);
  } else if (key == "experiment.ttest_scheme_a") {
    cfg.experiment.ttest_scheme_a = weights::parse_scheme(value);
  } else if (key == "experiment.ttest_scheme_b") {
    cfg.experiment.ttest_scheme_b = weights::parse_scheme(value);
  } else if (key == "workspace") {
    cfg.workspace = std::string(value);
  } else {
    throw std::invalid_argument("config: unknown key " + std::string(key));
  }
}

PipelineConfig parse_config(std::istream& source) {
  PipelineConfig cfg;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    detail::strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": missing '='");
    }
    apply_key(cfg, std::string_view(line).substr(0, eq), std::string_view(line).substr(eq + 1));
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

std::string echo_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "ingest.format=" << (cfg.ingest.format == ingest::Format::kCsv ? "csv" : "tsv") << '\n'
      << "ingest.has_header=" << (cfg.ingest.has_header ? "true" : "false") << '\n'
      << "ingest.strict=" << (cfg.ingest.strict ? "true" : "false") << '\n'
      << "ingest.label_mode="
      << (cfg.ingest.label_mode == LabelMode::kDuration ? "duration" : "gap") << '\n'
      << "ingest.threshold_s=" << cfg.ingest.threshold_s << '\n'
      << "ingest.min_items_per_user=" << cfg.ingest.filter.min_items_per_user << '\n'
      << "ingest.min_users_per_item=" << cfg.ingest.filter.min_users_per_item << '\n'
      << "ingest.rep_cap="
      << (cfg.ingest.filter.rep_cap ? std::to_string(*cfg.ingest.filter.rep_cap) : "none") << '\n'
      << "ingest.apply_filter=" << (cfg.ingest.apply_filter ? "true" : "false") << '\n'
      << "grid.prior_a=" << detail::format_double(cfg.grid.prior.a) << '\n'
      << "grid.prior_b=" << detail::format_double(cfg.grid.prior.b) << '\n'
      << "grid.n_recency_bins=" << cfg.grid.n_recency_bins << '\n'
      << "grid.max_playcount=" << cfg.grid.max_playcount << '\n'
      << "grid.hdi_mass=" << detail::format_double(cfg.grid.hdi_mass) << '\n'
      << "grid.min_recency_s=" << detail::format_double(cfg.grid.min_recency_s) << '\n'
      << "grid.apply_1d_filter=" << (cfg.grid_apply_1d_filter ? "true" : "false") << '\n'
      << "weights.scheme=" << weights::scheme_name(cfg.weights.scheme) << '\n'
      << "weights.scale_alpha=" << detail::format_double(cfg.weights.scale_alpha) << '\n'
      << "weights.epsilon=" << detail::format_double(cfg.weights.epsilon) << '\n'
      << "weights.cutoff_c=" << detail::format_double(cfg.weights.cutoff_c) << '\n'
      << "als.n_factors=" << cfg.als.n_factors << '\n'
      << "als.reg_lambda=" << detail::format_double(cfg.als.reg_lambda) << '\n'
      << "als.n_iterations=" << cfg.als.n_iterations << '\n'
      << "als.init_scale=" << detail::format_double(cfg.als.init_scale) << '\n'
      << "split.train_frac=" << detail::format_double(cfg.split.train_frac) << '\n'
      << "split.val_frac_end=" << detail::format_double(cfg.split.val_frac_end) << '\n'
      << "split.min_train_items_per_user=" << cfg.split.min_train_items_per_user << '\n'
      << "split.eval_items_per_user=" << cfg.split.eval_items_per_user << '\n'
      << "synth.n_users=" << cfg.synth.n_users << '\n'
      << "synth.n_items=" << cfg.synth.n_items << '\n'
      << "synth.peak_exposure=" << cfg.synth.peak_exposure << '\n'
      << "synth.base_prob=" << detail::format_double(cfg.synth.base_prob) << '\n'
      << "synth.peak_prob=" << detail::format_double(cfg.synth.peak_prob) << '\n'
      << "synth.satiation_rate=" << detail::format_double(cfg.synth.satiation_rate) << '\n'
      << "synth.daily_boost=" << detail::format_double(cfg.synth.daily_boost) << '\n'
      << "synth.daily_sigma_s=" << detail::format_double(cfg.synth.daily_sigma_s) << '\n'
      << "synth.short_gap_median_s=" << detail::format_double(cfg.synth.short_gap_median_s)
      << '\n'
      << "synth.short_gap_sigma=" << detail::format_double(cfg.synth.short_gap_sigma) << '\n'
      << "synth.daily_gap_sigma=" << detail::format_double(cfg.synth.daily_gap_sigma) << '\n'
      << "synth.daily_fraction=" << detail::format_double(cfg.synth.daily_fraction) << '\n'
      << "synth.mean_events_per_pair=" << detail::format_double(cfg.synth.mean_events_per_pair)
      << '\n'
      << "synth.start_window_s=" << cfg.synth.start_window_s << '\n';
  out << "experiment.schemes=";
  for (std::size_t i = 0; i < cfg.experiment.schemes.size(); ++i) {
    if (i) out << ',';
    out << weights::scheme_name(cfg.experiment.schemes[i]);
  }
  out << '\n'
      << "experiment.n_runs=" << cfg.experiment.n_runs << '\n'
      << "experiment.grid_search=" << (cfg.experiment.grid_search ? "true" : "false") << '\n'
      << "experiment.alpha_grid=" << format_list_double(cfg.experiment.alpha_grid) << '\n'
      << "experiment.epsilon_grid=" << format_list_double(cfg.experiment.epsilon_grid) << '\n';
  out << "experiment.d_grid=";
  for (std::size_t i = 0; i < cfg.experiment.d_grid.size(); ++i) {
    if (i) out << ',';
    out << cfg.experiment.d_grid[i];
  }
  out << '\n'
      << "experiment.exclude_val_candidates="
      << (cfg.experiment.exclude_val_candidates ? "true" : "false") << '\n'
      << "experiment.ttest_scheme_a=" << weights::scheme_name(cfg.experiment.ttest_scheme_a)
      << '\n'
      << "experiment.ttest_scheme_b=" << weights::scheme_name(cfg.experiment.ttest_scheme_b)
      << '\n'
      << "workspace=" << cfg.workspace << '\n';
  return out.str();
}

}  // namespace repconf::config
