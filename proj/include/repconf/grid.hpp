#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "repconf/bayes.hpp"
#include "repconf/types.hpp"

namespace repconf::grid {

// Log10-uniform recency bin edges, in seconds. Bins are half-open [lo, hi);
// the last bin also contains its upper edge.
struct BinSpec {
  std::vector<double> edges;  // strictly increasing, edges.front() == min_recency_s
  double min_recency_s = 134.0;

  int n_bins() const { return static_cast<int>(edges.size()) - 1; }

  // Interpolation node coordinate: log10 of the bin's geometric center.
  double center_log10(int bin) const;

  // Bin holding the recency, or -1 when outside [edges.front(), edges.back()].
  int bin_index(double recency_s) const;
};

struct GridConfig {
  bayes::BetaParams prior{5.0, 5.0};
  int n_recency_bins = 50;
  int max_playcount = 57;
  double hdi_mass = 0.95;
  double min_recency_s = 134.0;
};

// One playcount x recency cell (or 1D curve point; the unused axis is -1).
struct GridCell {
  std::int32_t playcount_level = 0;
  std::int32_t bin_index = 0;
  bayes::BetaParams posterior;
  double mean = 0.5;
  bayes::Hdi hdi;
  std::int64_t n_obs = 0;
  std::int64_t n_pos = 0;
};

struct PosteriorGrid {
  GridConfig config;
  BinSpec bins;
  std::vector<GridCell> cells;  // dense k-major: cells[k * n_bins + bin]

  int n_levels() const { return config.max_playcount + 1; }
  const GridCell& cell(int k, int bin) const;
};

struct InterpolatedEstimate {
  double pi_hat = 0.5;
  double hdi_width_hat = 0.0;
  bool from_prior = false;
};

// Edges log10-uniform from min_recency_s to the maximum observed recency.
// Throws when no recency >= min_recency_s exists or the range is degenerate.
BinSpec build_recency_bins(const std::vector<AnnotatedInteraction>& ann, int n_bins,
                           double min_recency_s = 134.0);

// One cell per playcount level 0..max_playcount; levels above the top are
// pooled into it. Callers wanting the 1D analysis apply the selection rules
// beforehand.
std::vector<GridCell> fit_playcount_curve(const std::vector<AnnotatedInteraction>& ann,
                                          const bayes::BetaParams& prior, int max_playcount,
                                          double hdi_mass = 0.95, unsigned threads = 1);

// One cell per recency bin; interactions without a defined in-range recency
// contribute nothing.
std::vector<GridCell> fit_recency_curve(const std::vector<AnnotatedInteraction>& ann,
                                        const bayes::BetaParams& prior, const BinSpec& bins,
                                        double hdi_mass = 0.95, unsigned threads = 1);

// Full 2D fit. Bins are built from the data; playcounts above the top level
// are pooled; interactions without in-range recency are left out of every
// cell (they fall back to the prior at query time).
PosteriorGrid fit_grid(const std::vector<AnnotatedInteraction>& ann, const GridConfig& config,
                       unsigned threads = 1);

// Bilinear interpolation of cell means and HDI widths over the node lattice
// (playcount level, log10 bin center). Absent recency or recency outside the
// outer edges falls back to the prior (from_prior = true). Recency between
// the outer edges but beyond the first/last center clamps to that center;
// playcount above the top level clamps to the top level.
InterpolatedEstimate interpolate(const PosteriorGrid& grid, double playcount,
                                 std::optional<double> recency_s);

// CSV schema: k,bin_lo,bin_hi,a_post,b_post,mean,hdi_lo,hdi_hi,n_obs,n_pos
// in k-major order, preceded by one '#' metadata line carrying the config.
// Doubles use shortest round-trip formatting so import is bit-exact.
void export_cells(std::ostream& sink, const std::vector<GridCell>& cells, const BinSpec* bins);
void export_grid(std::ostream& sink, const PosteriorGrid& grid);
void export_grid_file(const std::string& path, const PosteriorGrid& grid);
PosteriorGrid import_grid(std::istream& source);
PosteriorGrid import_grid_file(const std::string& path);

}  // namespace repconf::grid
