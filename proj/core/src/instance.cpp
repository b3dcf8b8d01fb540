#include "instmvs/instance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <regex>
#include <stdexcept>

#include "instmvs/errors.hpp"
#include "instmvs/raster_io.hpp"

namespace instmvs {

namespace fs = std::filesystem;

std::vector<InstanceMask> load_masks(std::span<const BinaryImage> rasters, int rows, int cols,
                                     std::span<const int> ids) {
  if (!ids.empty() && ids.size() != rasters.size()) {
    throw std::invalid_argument("mask id list does not match the raster list");
  }
  std::vector<InstanceMask> masks;
  for (size_t k = 0; k < rasters.size(); ++k) {
    const BinaryImage& raster = rasters[k];
    const int id = ids.empty() ? static_cast<int>(k + 1) : ids[k];
    if (raster.rows() != rows || raster.cols() != cols) {
      throw DimensionMismatch("mask " + std::to_string(id) + " is " + std::to_string(raster.rows()) +
                              "x" + std::to_string(raster.cols()) + ", expected " +
                              std::to_string(rows) + "x" + std::to_string(cols));
    }
    InstanceMask mask{id, rows, cols, std::vector<uint8_t>(raster.size()), 0};
    for (size_t i = 0; i < raster.size(); ++i) {
      mask.bits[i] = raster[i] != 0;
      mask.area += mask.bits[i];
    }
    if (mask.area == 0) throw EmptyMask("mask " + std::to_string(id) + " has no member pixel");
    const bool duplicate = std::any_of(masks.begin(), masks.end(), [&](const InstanceMask& m) {
      return m.bits == mask.bits;
    });
    if (!duplicate) masks.push_back(std::move(mask));
  }
  return masks;
}

std::vector<InstanceMask> masks_from_labels(const LabelImage& labels, int rows, int cols) {
  if (labels.rows() != rows || labels.cols() != cols) {
    throw DimensionMismatch("label raster does not match the reference view");
  }
  std::map<int, InstanceMask> by_label;
  for (size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label == 0) continue;
    auto [it, inserted] = by_label.try_emplace(label);
    if (inserted) {
      it->second = InstanceMask{label, rows, cols, std::vector<uint8_t>(labels.size(), 0), 0};
    }
    it->second.bits[i] = 1;
    ++it->second.area;
  }
  std::vector<InstanceMask> masks;
  for (auto& [label, mask] : by_label) masks.push_back(std::move(mask));
  return masks;
}

std::vector<InstanceMask> load_mask_files(std::span<const fs::path> paths, int rows, int cols) {
  static const std::regex kIdPattern(R"(.*?(\d+)$)");
  std::vector<BinaryImage> rasters;
  std::vector<int> ids;
  for (size_t k = 0; k < paths.size(); ++k) {
    const Image<float> img = read_png(paths[k]);
    BinaryImage raster(img.rows(), img.cols());
    for (size_t i = 0; i < img.size(); ++i) raster[i] = img[i] != 0.0f;
    rasters.push_back(std::move(raster));
    std::smatch m;
    const std::string stem = paths[k].stem().string();
    ids.push_back(std::regex_match(stem, m, kIdPattern) ? std::stoi(m[1]) : static_cast<int>(k + 1));
  }
  try {
    return load_masks(rasters, rows, cols, ids);
  } catch (const DataError& e) {
    throw DataError(std::string(e.what()) + " (" + (paths.empty() ? "" : paths[0].parent_path().string()) + ")");
  }
}

std::vector<InstanceMask> load_label_file(const fs::path& path, int rows, int cols) {
  return masks_from_labels(read_png_labels(path), rows, cols);
}

MaskHierarchy order_by_containment(std::span<const InstanceMask> masks, double threshold) {
  MaskHierarchy h;
  std::vector<size_t> idx(masks.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (masks[a].area != masks[b].area) return masks[a].area > masks[b].area;
    return masks[a].id < masks[b].id;
  });
  for (size_t i : idx) h.order.push_back(masks[i].id);
  for (size_t a : idx) {
    for (size_t b : idx) {
      if (masks[a].area <= masks[b].area) continue;
      size_t overlap = 0;
      for (size_t p = 0; p < masks[b].bits.size(); ++p) overlap += masks[a].bits[p] & masks[b].bits[p];
      if (static_cast<double>(overlap) >= threshold * static_cast<double>(masks[b].area)) {
        h.edges.emplace_back(masks[a].id, masks[b].id);
      }
    }
  }
  return h;
}

std::vector<double> depths_under_mask(const DepthMap& depth, const InstanceMask& mask) {
  if (depth.rows != mask.rows || depth.cols != mask.cols) {
    throw DimensionMismatch("mask does not match the depth map");
  }
  std::vector<double> values;
  for (size_t i = 0; i < depth.size(); ++i) {
    if (mask.bits[i] && depth.valid[i]) values.push_back(depth.depth[i]);
  }
  return values;
}

Interval instance_depth_range(const DepthMap& depth, const InstanceMask& mask) {
  const std::vector<double> values = depths_under_mask(depth, mask);
  if (values.empty()) {
    throw NoValidDepth("instance " + std::to_string(mask.id) + " has no valid depth");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

Interval fiic_truncate(std::vector<double> values, double keep) {
  if (values.empty()) throw std::invalid_argument("fiic_truncate needs at least one value");
  if (!(keep > 0.0 && keep <= 1.0)) throw std::invalid_argument("keep fraction must lie in (0, 1]");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  const double tail = 0.5 * (1.0 - keep);
  const double h_lo = tail * static_cast<double>(n - 1);
  const double h_hi = (1.0 - tail) * static_cast<double>(n - 1);
  const size_t lo_floor = static_cast<size_t>(std::floor(h_lo));
  const size_t hi_ceil = std::min(n - 1, static_cast<size_t>(std::ceil(h_hi)));
  auto interpolate = [&](double h) {
    const size_t i = static_cast<size_t>(std::floor(h));
    if (i + 1 >= n) return values[n - 1];
    return values[i] + (h - static_cast<double>(i)) * (values[i + 1] - values[i]);
  };
  Interval r{interpolate(h_lo), interpolate(h_hi)};

  auto inside = [&](const Interval& band) {
    const auto first = std::lower_bound(values.begin(), values.end(), band.lo);
    const auto last = std::upper_bound(values.begin(), values.end(), band.hi);
    return static_cast<size_t>(last - first);
  };
  const double required = keep * static_cast<double>(n) - 1e-9;
  if (static_cast<double>(inside(r)) < required) r.lo = values[lo_floor];
  if (static_cast<double>(inside(r)) < required) r.hi = values[hi_ceil];

  if (!(r.lo < r.hi)) throw DegenerateRange("instance depths collapse to a single value", r.lo);
  return r;
}

Interval expand_range(const Interval& truncated, double margin_frac, double min_margin,
                      const Interval& prior) {
  if (truncated.lo > truncated.hi) throw std::invalid_argument("expand_range needs lo <= hi");
  const double margin = std::max(margin_frac * truncated.length(), min_margin);
  return Interval{truncated.lo - margin, truncated.hi + margin}.intersect(prior);
}

DepthHistogram depth_histogram(std::span<const double> values, int bins) {
  DepthHistogram h;
  h.counts.assign(static_cast<size_t>(std::max(bins, 1)), 0);
  if (values.empty()) return h;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  h.lo = *lo;
  h.hi = *hi;
  const double width = h.hi - h.lo;
  for (double v : values) {
    size_t b = width > 0.0 ? static_cast<size_t>((v - h.lo) / width * h.counts.size()) : 0;
    h.counts[std::min(b, h.counts.size() - 1)]++;
  }
  return h;
}

InstanceRefinement refine_instance(const CameraView& ref, std::span<const CameraView> srcs,
                                   const InstanceMask& mask, const Interval& range,
                                   const DepthMap& prior_depth, const RangeMap& current_ranges,
                                   const RefineParams& params) {
  if (!(range.lo < range.hi)) throw std::invalid_argument("instance range must satisfy lo < hi");
  if (params.hypotheses < 2) throw std::invalid_argument("refinement needs at least 2 hypotheses");
  if (prior_depth.rows != mask.rows || prior_depth.cols != mask.cols ||
      current_ranges.rows != mask.rows || current_ranges.cols != mask.cols) {
    throw DimensionMismatch("mask, depth map and range map sizes differ");
  }

  InstanceRefinement out;
  std::vector<int32_t> pixels;
  std::vector<Interval> ranges;
  for (size_t i = 0; i < mask.bits.size(); ++i) {
    if (!mask.bits[i]) continue;
    const Interval r = range.intersect(current_ranges.ranges[i]);
    if (!(r.lo < r.hi)) {
      ++out.disjoint;
      continue;
    }
    pixels.push_back(static_cast<int32_t>(i));
    ranges.push_back(r);
  }

  out.depth = prior_depth;
  out.ranges = current_ranges;
  if (pixels.empty()) return out;

  const HypothesisSet hyps(mask.rows, mask.cols, params.hypotheses, std::move(pixels),
                           std::move(ranges));
  out.volume = cost_to_probability(build_cost_volume(ref, srcs, hyps, params.window),
                                   params.temperature, current_ranges.stage);
  const DepthMap refined = regress_depth(out.volume, params.argmax_regression);
  out.linked.assign(hyps.slots(), 0);
  for (size_t slot = 0; slot < hyps.slots(); ++slot) {
    const size_t p = static_cast<size_t>(hyps.pixel(slot));
    if (!out.volume.matched[slot]) {
      ++out.unmatched;
      continue;
    }
    out.depth.depth[p] = refined.depth[p];
    out.depth.valid[p] = 1;
    out.ranges.ranges[p] = hyps.range(slot);
    out.linked[slot] = 1;
    ++out.refined;
  }
  return out;
}

namespace {

bool is_ancestor(const MaskHierarchy& h, int ancestor, int id) {
  // Containment is tested for every pair, so ancestry is a direct edge.
  return std::any_of(h.edges.begin(), h.edges.end(),
                     [&](const auto& e) { return e.first == ancestor && e.second == id; });
}

}  // namespace

IfadsResult ifads(const CameraView& ref, std::span<const CameraView> srcs,
                  std::span<const InstanceMask> masks, const StageRecord& init,
                  const Interval& prior, const IfadsConfig& cfg, const RefineParams& params) {
  if (cfg.iterations < 0) throw std::invalid_argument("IF-ADS iterations must be non-negative");
  IfadsResult result;
  result.depth = init.depth;
  result.ranges = init.ranges;
  result.hierarchy = order_by_containment(masks, cfg.containment);
  if (masks.empty()) return result;

  const double coarse_interval =
      prior.length() / static_cast<double>(init.volume.hypotheses.count() - 1);
  const double min_margin = cfg.min_margin > 0.0 ? cfg.min_margin : coarse_interval;

  std::vector<int> order = result.hierarchy.order;
  if (cfg.reverse_hierarchy) std::reverse(order.begin(), order.end());
  std::map<int, const InstanceMask*> by_id;
  for (const InstanceMask& m : masks) by_id[m.id] = &m;

  for (int iteration = 1; iteration <= cfg.iterations; ++iteration) {
    // Mask id that last refined each pixel in this iteration (0 = none).
    std::vector<int> last_writer(result.depth.size(), 0);
    for (int id : order) {
      const InstanceMask& mask = *by_id.at(id);
      InstanceStep step;
      step.iteration = iteration;
      step.id = id;
      step.pixels = mask.area;
      const std::vector<double> values = depths_under_mask(result.depth, mask);
      step.valid_depths = values.size();
      if (values.empty()) {
        step.skipped = true;
        step.note = "no valid depth under mask";
        result.log.push_back(step);
        continue;
      }
      const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
      step.raw = {*mn, *mx};
      Interval band = step.raw;
      if (cfg.fiic) {
        try {
          step.truncated = fiic_truncate(values, cfg.keep);
          step.expanded = expand_range(step.truncated, cfg.margin_frac, min_margin, prior);
        } catch (const DegenerateRange& e) {
          step.degenerate = true;
          step.truncated = {e.value(), e.value()};
          const Interval widened{e.value() - 0.5 * coarse_interval,
                                 e.value() + 0.5 * coarse_interval};
          step.expanded = expand_range(widened, cfg.margin_frac, min_margin, prior);
        }
        band = step.expanded;
      } else {
        step.truncated = step.raw;
        if (!(band.lo < band.hi)) {
          step.degenerate = true;
          band = {band.lo - 0.5 * coarse_interval, band.hi + 0.5 * coarse_interval};
        }
        step.expanded = band.intersect(prior);
        band = step.expanded;
      }

      InstanceRefinement refined =
          refine_instance(ref, srcs, mask, band, result.depth, result.ranges, params);
      step.refined = refined.refined;
      if (refined.refined == 0) {
        step.note = "no pixel refined";
      }
      if (refined.disjoint > 0) {
        step.note += (step.note.empty() ? "" : "; ") + std::to_string(refined.disjoint) +
                     " pixels outside their current range";
      }
      const HypothesisSet& hyps = refined.volume.hypotheses;
      for (size_t slot = 0; slot < refined.linked.size(); ++slot) {
        if (!refined.linked[slot]) continue;
        const size_t p = static_cast<size_t>(hyps.pixel(slot));
        const int previous = last_writer[p];
        if (previous != 0 && !is_ancestor(result.hierarchy, previous, id)) ++step.overwrites;
        last_writer[p] = id;
      }
      if (step.overwrites > 0) {
        step.note += (step.note.empty() ? "" : "; ") + std::string("last-write on ") +
                     std::to_string(step.overwrites) + " overlapping pixels";
      }
      result.depth = std::move(refined.depth);
      result.ranges = std::move(refined.ranges);
      if (refined.refined > 0) {
        result.refinements.push_back(std::move(refined.volume));
        result.linked.push_back(std::move(refined.linked));
      }
      result.log.push_back(std::move(step));
    }
  }
  return result;
}

void write_instance_log(std::ostream& out, std::span<const InstanceStep> steps) {
  out.precision(10);
  for (const InstanceStep& s : steps) {
    out << "iter=" << s.iteration << " id=" << s.id << " pixels=" << s.pixels
        << " valid=" << s.valid_depths;
    if (s.skipped) {
      out << " skipped";
    } else {
      out << " raw=[" << s.raw.lo << ',' << s.raw.hi << "] truncated=[" << s.truncated.lo << ','
          << s.truncated.hi << "] expanded=[" << s.expanded.lo << ',' << s.expanded.hi
          << "] refined=" << s.refined;
      if (s.degenerate) out << " degenerate";
    }
    if (!s.note.empty()) out << " note=\"" << s.note << '"';
    out << '\n';
  }
}

}  // namespace instmvs
