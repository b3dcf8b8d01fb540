#pragma once

#include <optional>
#include <span>
#include <vector>

#include "instmvs/cascade.hpp"
#include "instmvs/confidence.hpp"
#include "instmvs/instance.hpp"

namespace instmvs {

struct PipelineOptions {
  StageConfig stages;
  bool ifads = false;
  IfadsConfig ifads_config;  // fiic switch and keep fraction live here
  bool cpc = false;
  double delta = 0.0;  // <= 0: half the finest hypothesis interval
};

struct StageSummary {
  int stage = 0;
  double mean_max_prob = 0.0;
  double median_max_prob = 0.0;
  double mean_interval = 0.0;  // mean hypothesis spacing
};

struct ViewEstimate {
  std::vector<StageRecord> stages;
  std::optional<IfadsResult> ifads;
  DepthMap depth;
  ConfidenceMap baseline_confidence;  // mean per-stage max probability
  std::optional<ConditionalConfidenceMap> conditional;
  std::vector<StageSummary> report;

  // The confidence selected by the options: conditional when computed.
  const ConfidenceMap& confidence() const {
    return conditional ? conditional->map : baseline_confidence;
  }
};

StageRecord initial_stage(const CameraView& ref, std::span<const CameraView> srcs,
                          const Interval& prior, const StageConfig& cfg);

// Runs everything after the first stage. Instance refinement uses the first
// stage's hypothesis count, window and temperature.
ViewEstimate estimate_from_initial(const CameraView& ref, std::span<const CameraView> srcs,
                                   std::span<const InstanceMask> masks, const Interval& prior,
                                   const PipelineOptions& opts, StageRecord initial);

ViewEstimate estimate_view(const CameraView& ref, std::span<const CameraView> srcs,
                           std::span<const InstanceMask> masks, const Interval& prior,
                           const PipelineOptions& opts);

std::vector<StageSummary> summarize_stages(std::span<const StageRecord> stages);

}  // namespace instmvs
