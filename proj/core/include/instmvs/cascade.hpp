#pragma once

#include <span>
#include <vector>

#include "instmvs/costvolume.hpp"
#include "instmvs/depth_map.hpp"
#include "instmvs/interval.hpp"

namespace instmvs {

// Per-pixel depth hypothesis range of one cascade stage.
struct RangeMap {
  int rows = 0;
  int cols = 0;
  int stage = 1;
  std::vector<Interval> ranges;

  static RangeMap uniform(int rows, int cols, const Interval& range, int stage = 1);
  size_t size() const { return ranges.size(); }
};

struct StageConfig {
  std::vector<int> hypotheses{64, 32, 16};  // L_k per stage
  std::vector<double> shrink{0.25, 0.25};   // w_k between stage k and k+1
  double temperature = 0.1;
  int window = 7;
  bool argmax_regression = false;

  int stages() const { return static_cast<int>(hypotheses.size()); }
  // Throws std::invalid_argument when counts or factors are out of range.
  void validate() const;
};

struct StageRecord {
  int stage = 1;
  RangeMap ranges;
  ProbabilityVolume volume;
  DepthMap depth;
};

HypothesisSet sample_hypotheses(const RangeMap& ranges, int count);

// Soft-argmax (or argmax) depth per active slot, clamped into the slot's
// range. Pixels outside the volume's support are invalid.
DepthMap regress_depth(const ProbabilityVolume& pv, bool argmax = false);

// Next-stage ranges: length scaled by `shrink` exactly, centered on the
// predicted depth, then shifted to stay within prev intersected with prior.
RangeMap narrow_range(const RangeMap& prev, const DepthMap& depth, double shrink,
                      const Interval& prior);

StageRecord run_stage(const CameraView& ref, std::span<const CameraView> srcs,
                      const RangeMap& ranges, int count, const StageConfig& cfg);

// Appends stages 2..N, narrowing the first of them around `seed_depth`
// within `seed_ranges`.
void continue_cascade(const CameraView& ref, std::span<const CameraView> srcs,
                      const StageConfig& cfg, const Interval& prior, const RangeMap& seed_ranges,
                      const DepthMap& seed_depth, std::vector<StageRecord>& stages);

std::vector<StageRecord> run_cascade(const CameraView& ref, std::span<const CameraView> srcs,
                                     const StageConfig& cfg, const Interval& prior);

}  // namespace instmvs
