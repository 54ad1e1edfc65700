#include "repconf/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "repconf/detail/csv.hpp"
#include "repconf/detail/parallel.hpp"

namespace repconf::grid {

namespace {

struct Evidence {
  std::int64_t n_obs = 0;
  std::int64_t n_pos = 0;
};

// Posterior, mean, and HDI for each evidence slot, in parallel. Zero-evidence
// slots share one precomputed prior cell.
void finish_cells(std::vector<GridCell>& cells, const std::vector<Evidence>& evidence,
                  const bayes::BetaParams& prior, double hdi_mass, unsigned threads) {
  GridCell prior_cell;
  prior_cell.posterior = prior;
  prior_cell.mean = bayes::beta_mean(prior);
  prior_cell.hdi = bayes::beta_hdi(prior, hdi_mass);
  detail::parallel_for(cells.size(), threads, [&](std::size_t i) {
    GridCell& c = cells[i];
    c.n_obs = evidence[i].n_obs;
    c.n_pos = evidence[i].n_pos;
    if (c.n_obs == 0) {
      c.posterior = prior_cell.posterior;
      c.mean = prior_cell.mean;
      c.hdi = prior_cell.hdi;
      return;
    }
    c.posterior = bayes::posterior_update(prior, c.n_pos, c.n_obs);
    c.mean = bayes::beta_mean(c.posterior);
    c.hdi = bayes::beta_hdi(c.posterior, hdi_mass);
  });
}

}  // namespace

double BinSpec::center_log10(int bin) const {
  return 0.5 * (std::log10(edges[bin]) + std::log10(edges[bin + 1]));
}

int BinSpec::bin_index(double recency_s) const {
  if (recency_s < edges.front() || recency_s > edges.back()) return -1;
  if (recency_s == edges.back()) return n_bins() - 1;
  auto it = std::upper_bound(edges.begin(), edges.end(), recency_s);
  return static_cast<int>(it - edges.begin()) - 1;
}

const GridCell& PosteriorGrid::cell(int k, int bin) const {
  return cells[static_cast<std::size_t>(k) * bins.n_bins() + bin];
}

BinSpec build_recency_bins(const std::vector<AnnotatedInteraction>& ann, int n_bins,
                           double min_recency_s) {
  if (n_bins < 1) throw std::invalid_argument("build_recency_bins: n_bins < 1");
  double max_recency = 0.0;
  bool any = false;
  for (const AnnotatedInteraction& a : ann) {
    if (a.recency_s.has_value() && *a.recency_s >= min_recency_s) {
      max_recency = std::max(max_recency, *a.recency_s);
      any = true;
    }
  }
  if (!any) {
    throw std::runtime_error("build_recency_bins: no recency >= " +
                             detail::format_double(min_recency_s));
  }
  if (max_recency <= min_recency_s) {
    throw std::runtime_error("build_recency_bins: degenerate recency range");
  }
  BinSpec spec;
  spec.min_recency_s = min_recency_s;
  spec.edges.resize(n_bins + 1);
  const double lo = std::log10(min_recency_s);
  const double hi = std::log10(max_recency);
  for (int j = 1; j < n_bins; ++j) {
    spec.edges[j] = std::pow(10.0, lo + (hi - lo) * j / n_bins);
  }
  spec.edges.front() = min_recency_s;
  spec.edges.back() = max_recency;
  return spec;
}

std::vector<GridCell> fit_playcount_curve(const std::vector<AnnotatedInteraction>& ann,
                                          const bayes::BetaParams& prior, int max_playcount,
                                          double hdi_mass, unsigned threads) {
  if (max_playcount < 1) throw std::invalid_argument("fit_playcount_curve: max_playcount < 1");
  std::vector<Evidence> evidence(max_playcount + 1);
  for (const AnnotatedInteraction& a : ann) {
    int k = std::min<int>(a.playcount, max_playcount);
    ++evidence[k].n_obs;
    evidence[k].n_pos += a.label;
  }
  std::vector<GridCell> cells(evidence.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    cells[k].playcount_level = static_cast<std::int32_t>(k);
    cells[k].bin_index = -1;
  }
  finish_cells(cells, evidence, prior, hdi_mass, threads);
  return cells;
}

std::vector<GridCell> fit_recency_curve(const std::vector<AnnotatedInteraction>& ann,
                                        const bayes::BetaParams& prior, const BinSpec& bins,
                                        double hdi_mass, unsigned threads) {
  std::vector<Evidence> evidence(bins.n_bins());
  for (const AnnotatedInteraction& a : ann) {
    if (!a.recency_s.has_value()) continue;
    int bin = bins.bin_index(*a.recency_s);
    if (bin < 0) continue;
    ++evidence[bin].n_obs;
    evidence[bin].n_pos += a.label;
  }
  std::vector<GridCell> cells(evidence.size());
  for (std::size_t j = 0; j < cells.size(); ++j) {
    cells[j].playcount_level = -1;
    cells[j].bin_index = static_cast<std::int32_t>(j);
  }
  finish_cells(cells, evidence, prior, hdi_mass, threads);
  return cells;
}

PosteriorGrid fit_grid(const std::vector<AnnotatedInteraction>& ann, const GridConfig& config,
                       unsigned threads) {
  if (config.n_recency_bins < 1 || config.max_playcount < 1) {
    throw std::invalid_argument("fit_grid: invalid config");
  }
  PosteriorGrid grid;
  grid.config = config;
  grid.bins = build_recency_bins(ann, config.n_recency_bins, config.min_recency_s);
  const int n_bins = grid.bins.n_bins();
  const int n_levels = grid.n_levels();
  std::vector<Evidence> evidence(static_cast<std::size_t>(n_levels) * n_bins);
  for (const AnnotatedInteraction& a : ann) {
    if (!a.recency_s.has_value()) continue;
    int bin = grid.bins.bin_index(*a.recency_s);
    if (bin < 0) continue;
    int k = std::min<int>(a.playcount, config.max_playcount);
    Evidence& e = evidence[static_cast<std::size_t>(k) * n_bins + bin];
    ++e.n_obs;
    e.n_pos += a.label;
  }
  grid.cells.resize(evidence.size());
  for (int k = 0; k < n_levels; ++k) {
    for (int j = 0; j < n_bins; ++j) {
      GridCell& c = grid.cells[static_cast<std::size_t>(k) * n_bins + j];
      c.playcount_level = k;
      c.bin_index = j;
    }
  }
  finish_cells(grid.cells, evidence, config.prior, config.hdi_mass, threads);
  return grid;
}

InterpolatedEstimate interpolate(const PosteriorGrid& grid, double playcount,
                                 std::optional<double> recency_s) {
  InterpolatedEstimate est;
  const auto prior_fallback = [&] {
    est.pi_hat = bayes::beta_mean(grid.config.prior);
    est.hdi_width_hat = bayes::beta_hdi(grid.config.prior, grid.config.hdi_mass).width();
    est.from_prior = true;
    return est;
  };
  if (!recency_s.has_value()) return prior_fallback();
  const double r = *recency_s;
  if (r < grid.bins.edges.front() || r > grid.bins.edges.back()) return prior_fallback();

  const int n_bins = grid.bins.n_bins();
  const int top = grid.config.max_playcount;

  double k = std::clamp(playcount, 0.0, static_cast<double>(top));
  int k0 = std::min(static_cast<int>(k), top - 1);
  double fk = k - k0;

  const double lr = std::log10(r);
  int j0 = 0;
  double fr = 0.0;
  if (n_bins == 1 || lr <= grid.bins.center_log10(0)) {
    j0 = 0;
    fr = 0.0;
  } else if (lr >= grid.bins.center_log10(n_bins - 1)) {
    j0 = n_bins - 2;
    fr = 1.0;
  } else {
    // Centers are increasing; locate the surrounding pair.
    int lo = 0, hi = n_bins - 1;
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      if (grid.bins.center_log10(mid) <= lr) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    j0 = lo;
    const double c0 = grid.bins.center_log10(j0);
    const double c1 = grid.bins.center_log10(j0 + 1);
    fr = (lr - c0) / (c1 - c0);
  }

  const int j1 = n_bins == 1 ? j0 : j0 + 1;
  const GridCell& c00 = grid.cell(k0, j0);
  const GridCell& c01 = grid.cell(k0, j1);
  const GridCell& c10 = grid.cell(k0 + 1, j0);
  const GridCell& c11 = grid.cell(k0 + 1, j1);
  const auto blend = [&](double v00, double v01, double v10, double v11) {
    return (1.0 - fk) * ((1.0 - fr) * v00 + fr * v01) + fk * ((1.0 - fr) * v10 + fr * v11);
  };
  est.pi_hat = blend(c00.mean, c01.mean, c10.mean, c11.mean);
  est.hdi_width_hat =
      blend(c00.hdi.width(), c01.hdi.width(), c10.hdi.width(), c11.hdi.width());
  est.from_prior = false;
  return est;
}

void export_cells(std::ostream& sink, const std::vector<GridCell>& cells, const BinSpec* bins) {
  sink << "k,bin_lo,bin_hi,a_post,b_post,mean,hdi_lo,hdi_hi,n_obs,n_pos\n";
  for (const GridCell& c : cells) {
    if (c.playcount_level >= 0) sink << c.playcount_level;
    sink << ',';
    if (bins != nullptr && c.bin_index >= 0) {
      sink << detail::format_double(bins->edges[c.bin_index]) << ','
           << detail::format_double(bins->edges[c.bin_index + 1]) << ',';
    } else {
      sink << ",,";
    }
    sink << detail::format_double(c.posterior.a) << ',' << detail::format_double(c.posterior.b)
         << ',' << detail::format_double(c.mean) << ',' << detail::format_double(c.hdi.lo) << ','
         << detail::format_double(c.hdi.hi) << ',' << c.n_obs << ',' << c.n_pos << '\n';
  }
}

void export_grid(std::ostream& sink, const PosteriorGrid& grid) {
  sink << "# prior_a=" << detail::format_double(grid.config.prior.a)
       << " prior_b=" << detail::format_double(grid.config.prior.b)
       << " hdi_mass=" << detail::format_double(grid.config.hdi_mass)
       << " max_playcount=" << grid.config.max_playcount
       << " n_bins=" << grid.bins.n_bins()
       << " min_recency_s=" << detail::format_double(grid.bins.min_recency_s) << '\n';
  export_cells(sink, grid.cells, &grid.bins);
}

void export_grid_file(const std::string& path, const PosteriorGrid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  export_grid(out, grid);
  if (!out) throw std::runtime_error("write failed: " + path);
}

PosteriorGrid import_grid(std::istream& source) {
  std::string line;
  if (!std::getline(source, line)) throw std::runtime_error("import_grid: empty input");
  detail::strip_cr(line);
  if (line.empty() || line[0] != '#') throw std::runtime_error("import_grid: missing metadata");

  PosteriorGrid grid;
  int n_bins = 0;
  {
    std::istringstream meta(line.substr(1));
    std::string token;
    while (meta >> token) {
      auto eq = token.find('=');
      if (eq == std::string::npos) throw std::runtime_error("import_grid: bad metadata " + token);
      std::string key = token.substr(0, eq);
      std::string value = token.substr(eq + 1);
      auto as_double = [&] {
        auto v = detail::parse_double(value);
        if (!v) throw std::runtime_error("import_grid: bad metadata value " + token);
        return *v;
      };
      if (key == "prior_a") {
        grid.config.prior.a = as_double();
      } else if (key == "prior_b") {
        grid.config.prior.b = as_double();
      } else if (key == "hdi_mass") {
        grid.config.hdi_mass = as_double();
      } else if (key == "max_playcount") {
        grid.config.max_playcount = static_cast<int>(as_double());
      } else if (key == "n_bins") {
        n_bins = static_cast<int>(as_double());
      } else if (key == "min_recency_s") {
        grid.config.min_recency_s = as_double();
      } else {
        throw std::runtime_error("import_grid: unknown metadata key " + key);
      }
    }
  }
  if (n_bins < 1) throw std::runtime_error("import_grid: missing n_bins");
  grid.config.n_recency_bins = n_bins;
  grid.bins.min_recency_s = grid.config.min_recency_s;
  grid.bins.edges.assign(n_bins + 1, 0.0);

  if (!std::getline(source, line)) throw std::runtime_error("import_grid: missing header");
  detail::strip_cr(line);
  if (line != "k,bin_lo,bin_hi,a_post,b_post,mean,hdi_lo,hdi_hi,n_obs,n_pos") {
    throw std::runtime_error("import_grid: unexpected header: " + line);
  }

  const std::size_t expected = static_cast<std::size_t>(grid.config.max_playcount + 1) * n_bins;
  grid.cells.reserve(expected);
  std::vector<std::string_view> fields;
  while (std::getline(source, line)) {
    detail::strip_cr(line);
    if (line.empty()) continue;
    detail::split_line(line, ',', fields);
    if (fields.size() != 10) throw std::runtime_error("import_grid: malformed row: " + line);
    auto need_int = [&](std::string_view s) {
      auto v = detail::parse_int(s);
      if (!v) throw std::runtime_error("import_grid: malformed row: " + line);
      return *v;
    };
    auto need_double = [&](std::string_view s) {
      auto v = detail::parse_double(s);
      if (!v) throw std::runtime_error("import_grid: malformed row: " + line);
      return *v;
    };
    GridCell c;
    c.playcount_level = static_cast<std::int32_t>(need_int(fields[0]));
    const double bin_lo = need_double(fields[1]);
    const double bin_hi = need_double(fields[2]);
    c.posterior.a = need_double(fields[3]);
    c.posterior.b = need_double(fields[4]);
    c.mean = need_double(fields[5]);
    c.hdi.lo = need_double(fields[6]);
    c.hdi.hi = need_double(fields[7]);
    c.hdi.mass = grid.config.hdi_mass;
    c.n_obs = need_int(fields[8]);
    c.n_pos = need_int(fields[9]);
    c.bin_index = static_cast<std::int32_t>(grid.cells.size() % n_bins);
    grid.bins.edges[c.bin_index] = bin_lo;
    grid.bins.edges[c.bin_index + 1] = bin_hi;
    grid.cells.push_back(c);
  }
  if (grid.cells.size() != expected) {
    throw std::runtime_error("import_grid: expected " + std::to_string(expected) + " rows, got " +
                             std::to_string(grid.cells.size()));
  }
  return grid;
}

PosteriorGrid import_grid_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file: " + path);
  return import_grid(in);
}

}  // namespace repconf::grid
