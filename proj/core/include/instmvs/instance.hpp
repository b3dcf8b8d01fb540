#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "instmvs/cascade.hpp"
#include "instmvs/costvolume.hpp"
#include "instmvs/depth_map.hpp"
#include "instmvs/image.hpp"
#include "instmvs/interval.hpp"

namespace instmvs {

struct InstanceMask {
  int id = 0;
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> bits;
  size_t area = 0;

  bool contains(size_t pixel) const { return bits[pixel] != 0; }
};

// Builds masks from binary rasters (nonzero = member). Throws
// DimensionMismatch when a raster differs from rows x cols and EmptyMask when
// a raster has no member pixel. Rasters with identical content collapse to
// the first occurrence. `ids` defaults to 1, 2, ... in input order.
std::vector<InstanceMask> load_masks(std::span<const BinaryImage> rasters, int rows, int cols,
                                     std::span<const int> ids = {});

// One mask per nonzero label, ids equal to the label, ascending.
std::vector<InstanceMask> masks_from_labels(const LabelImage& labels, int rows, int cols);

// Binary PNG per instance. A file named like "inst_<id>.png" gets that id,
// otherwise its position in `paths` (1-based).
std::vector<InstanceMask> load_mask_files(std::span<const std::filesystem::path> paths, int rows,
                                          int cols);
// Single 16-bit label PNG, label 0 is background.
std::vector<InstanceMask> load_label_file(const std::filesystem::path& path, int rows, int cols);

struct MaskHierarchy {
  std::vector<int> order;                   // mask ids, ancestors first
  std::vector<std::pair<int, int>> edges;   // (parent id, child id)
};

// Containment edges where |A n B| / |B| >= threshold and area(A) > area(B);
// order is descending area with ties broken by ascending id.
MaskHierarchy order_by_containment(std::span<const InstanceMask> masks, double threshold = 0.9);

// [min, max] of valid depths under the mask; throws NoValidDepth.
Interval instance_depth_range(const DepthMap& depth, const InstanceMask& mask);

// Valid depths under the mask, in pixel order.
std::vector<double> depths_under_mask(const DepthMap& depth, const InstanceMask& mask);

// Central `keep` band of the samples: percentiles (1-keep)/2 and
// 1-(1-keep)/2 by linear interpolation between order statistics, each bound
// snapped outward to its order statistic when needed so that at least
// keep * n samples lie inside. Throws DegenerateRange when lo == hi.
Interval fiic_truncate(std::vector<double> values, double keep = 0.98);

// Extends each side by max(margin_frac * width, min_margin), then clips to
// the prior.
Interval expand_range(const Interval& truncated, double margin_frac, double min_margin,
                      const Interval& prior);

// Diagnostic histogram of the depths under one instance.
struct DepthHistogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<size_t> counts;
};
DepthHistogram depth_histogram(std::span<const double> values, int bins = 64);

// Hypothesis budget and matching parameters for a refinement pass.
struct RefineParams {
  int hypotheses = 64;
  double temperature = 0.1;
  int window = 7;
  bool argmax_regression = false;
};

struct InstanceRefinement {
  DepthMap depth;              // prior depth with refined pixels replaced
  RangeMap ranges;             // per-pixel range each pixel was last sampled in
  ProbabilityVolume volume;    // sparse over the sampled mask pixels
  std::vector<uint8_t> linked; // per slot: depth replaced (a valid match existed)
  size_t refined = 0;
  size_t unmatched = 0;  // kept the prior value: no valid source view
  size_t disjoint = 0;   // skipped: instance range disjoint from the pixel's range
};

// Re-samples `params.hypotheses` uniform hypotheses over `range` (intersected
// with each pixel's current range) for the pixels under `mask`, regresses
// depth and replaces only those pixels in `prior_depth`.
InstanceRefinement refine_instance(const CameraView& ref, std::span<const CameraView> srcs,
                                   const InstanceMask& mask, const Interval& range,
                                   const DepthMap& prior_depth, const RangeMap& current_ranges,
                                   const RefineParams& params);

struct IfadsConfig {
  int iterations = 1;
  bool fiic = true;
  double keep = 0.98;
  double margin_frac = 0.05;
  double min_margin = 0.0;  // <= 0 selects the initial stage interval
  double containment = 0.9;
  bool reverse_hierarchy = false;  // test hook: descendants before ancestors
};

struct InstanceStep {
  int iteration = 0;
  int id = 0;
  size_t pixels = 0;
  size_t valid_depths = 0;
  Interval raw;
  Interval truncated;
  Interval expanded;
  bool skipped = false;
  bool degenerate = false;
  size_t refined = 0;
  size_t overwrites = 0;  // pixels last refined by a non-ancestor mask
  std::string note;
};

struct IfadsResult {
  DepthMap depth;
  RangeMap ranges;
  std::vector<ProbabilityVolume> refinements;   // processing order
  std::vector<std::vector<uint8_t>> linked;     // per refinement, per slot
  MaskHierarchy hierarchy;
  std::vector<InstanceStep> log;
};

// Instance-focused re-sampling of the initial stage: walks the containment
// hierarchy `cfg.iterations` times, narrowing each instance to its observed
// depth range and replacing its pixels in the running depth map.
IfadsResult ifads(const CameraView& ref, std::span<const CameraView> srcs,
                  std::span<const InstanceMask> masks, const StageRecord& init,
                  const Interval& prior, const IfadsConfig& cfg, const RefineParams& params);

// One line per instance step.
void write_instance_log(std::ostream& out, std::span<const InstanceStep> steps);

}  // namespace instmvs
