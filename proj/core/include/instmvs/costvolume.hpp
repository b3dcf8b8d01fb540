#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "instmvs/geometry.hpp"
#include "instmvs/image.hpp"
#include "instmvs/interval.hpp"

namespace instmvs {

// A posed grayscale image.
struct CameraView {
  GrayImage image;
  CameraModel camera;
};

// Uniformly spaced depth hypotheses for a set of active pixels. Slot s holds
// pixel `pixel(s)` with samples d_l = lo + l * (hi - lo) / (L - 1).
// A dense set covers every pixel with slot == pixel index.
class HypothesisSet {
 public:
  HypothesisSet() = default;
  // `pixels` must be strictly increasing linear indices; throws
  // std::invalid_argument on malformed input.
  HypothesisSet(int rows, int cols, int count, std::vector<int32_t> pixels,
                std::vector<Interval> ranges);
  static HypothesisSet dense(int rows, int cols, int count, std::vector<Interval> ranges);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int count() const { return count_; }
  size_t slots() const { return ranges_.size(); }
  bool is_dense() const { return pixels_.empty(); }

  int32_t pixel(size_t slot) const {
    return is_dense() ? static_cast<int32_t>(slot) : pixels_[slot];
  }
  const Interval& range(size_t slot) const { return ranges_[slot]; }
  const std::vector<Interval>& ranges() const { return ranges_; }

  // Interval between adjacent hypotheses (epsilon).
  double spacing(size_t slot) const { return ranges_[slot].length() / (count_ - 1); }
  double depth(size_t slot, int l) const {
    const Interval& r = ranges_[slot];
    if (l == count_ - 1) return r.hi;
    return r.lo + r.length() * l / (count_ - 1);
  }

  std::optional<size_t> slot_of(size_t pixel) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  int count_ = 0;
  std::vector<int32_t> pixels_;      // empty for dense sets
  std::vector<int32_t> slot_index_;  // pixel -> slot or -1, sparse sets only
  std::vector<Interval> ranges_;
};

// Matching cost per (slot, hypothesis), 1 - ZNCC averaged over valid views.
struct CostVolume {
  HypothesisSet hypotheses;
  std::vector<float> cost;           // slot * L + l
  std::vector<uint8_t> view_count;   // valid source views per entry

  std::span<const float> costs(size_t slot) const {
    const size_t L = static_cast<size_t>(hypotheses.count());
    return {cost.data() + slot * L, L};
  }
};

struct ProbabilityVolume {
  HypothesisSet hypotheses;
  std::vector<float> prob;       // slot * L + l
  std::vector<uint8_t> matched;  // slot had at least one valid view
  int stage = 0;

  std::span<const float> distribution(size_t slot) const {
    const size_t L = static_cast<size_t>(hypotheses.count());
    return {prob.data() + slot * L, L};
  }
};

inline constexpr double kDegenerateVariance = 1e-12;
inline constexpr float kInvalidCost = 2.0f;

// Zero-mean normalized cross-correlation of two equally sized windows.
// Returns 0 when either window has per-sample variance below 1e-12.
double zncc(std::span<const double> a, std::span<const double> b);

// Builds matching costs for every slot of `hyps`: for each hypothesis the
// reference window around the pixel is compared against the source windows
// obtained by warping each window pixel at the hypothesized fronto-parallel
// depth. Entries without a valid source view get cost 2 and view count 0.
// When every slot shares one range and `allow_sweep` is set, whole source
// images are warped once per hypothesis instead; the costs agree up to
// floating-point summation order.
CostVolume build_cost_volume(const CameraView& ref, std::span<const CameraView> srcs,
                             const HypothesisSet& hyps, int window = 7, bool allow_sweep = true);

// Softmax of -cost / temperature, evaluated in double precision.
std::vector<double> softmax_costs(std::span<const double> costs, double temperature);

ProbabilityVolume cost_to_probability(const CostVolume& cv, double temperature = 0.1,
                                      int stage = 0);

// Debug dump: "IAVOL1", then rows, cols, L as little-endian u32, then float32
// data row-major with the hypothesis index fastest. Inactive pixels are 0.
void write_volume_dump(const std::filesystem::path& path, const HypothesisSet& hyps,
                       std::span<const float> values);

struct VolumeDump {
  uint32_t rows = 0;
  uint32_t cols = 0;
  uint32_t count = 0;
  std::vector<float> values;
};
VolumeDump read_volume_dump(const std::filesystem::path& path);

}  // namespace instmvs
