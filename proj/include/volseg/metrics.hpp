// Copyright 2026 The VolSeg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Evaluation metrics for semantic masks, instance labelings, and boundary
// distance agreement. Semantic quality is reported as foreground IoU plus an
// overall IoU that averages foreground and background agreement. Instance
// quality uses average precision with one-to-one greedy matching, in the
// confidence-free form suited to decoded labelings that carry no scores.
// Distance metrics measure, in nanometers, how far predicted foreground
// strays from the reference and vice versa.

#ifndef VOLSEG_METRICS_HPP_
#define VOLSEG_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "volseg/edt.hpp"
#include "volseg/volume.hpp"

namespace volseg {

// Result of comparing two binary masks. `degenerate` is set when a side of
// the comparison (foreground or background) is empty in both volumes, in
// which case that side's IoU is defined as 1.0 by convention.
struct SemanticIou {
  double fg_iou = 0.0;
  double overall_iou = 0.0;
  bool degenerate = false;
};

// Foreground IoU and overall IoU of two binary masks (nonzero = foreground).
// Overall IoU is the mean of the foreground IoU and the background IoU, so a
// prediction must get both classes right to score well on sparse foreground.
inline SemanticIou iou_semantic(const LabelVolume& pred,
                                const LabelVolume& gt) {
  if (pred.shape() != gt.shape()) {
    throw std::invalid_argument("iou_semantic: shape mismatch: " +
                                pred.shape().str() + " vs " + gt.shape().str());
  }
  std::int64_t fg_inter = 0;
  std::int64_t fg_union = 0;
  std::int64_t bg_inter = 0;
  for (std::size_t i = 0; i < pred.voxels(); ++i) {
    const bool p = pred.data()[i] != 0;
    const bool g = gt.data()[i] != 0;
    if (p && g) ++fg_inter;
    if (p || g) ++fg_union;
    if (!p && !g) ++bg_inter;
  }
  const std::int64_t total = static_cast<std::int64_t>(pred.voxels());
  const std::int64_t bg_union = total - fg_inter;

  SemanticIou out;
  if (fg_union == 0) {
    out.fg_iou = 1.0;
    out.degenerate = true;
  } else {
    out.fg_iou = static_cast<double>(fg_inter) / static_cast<double>(fg_union);
  }
  double bg_iou;
  if (bg_union == 0) {
    bg_iou = 1.0;
    out.degenerate = true;
  } else {
    bg_iou = static_cast<double>(bg_inter) / static_cast<double>(bg_union);
  }
  out.overall_iou = 0.5 * (out.fg_iou + bg_iou);
  return out;
}

// One accepted instance correspondence.
struct InstanceMatch {
  std::uint32_t gt_id = 0;
  std::uint32_t pred_id = 0;
  double iou = 0.0;
};

// Outcome of one-to-one instance matching: each id appears at most once
// among the matches, and every instance not matched is listed on its side.
struct MatchTable {
  std::vector<InstanceMatch> matches;
  std::vector<std::uint32_t> unmatched_gt;
  std::vector<std::uint32_t> unmatched_pred;
};

// Average precision per IoU threshold plus the matching that produced it.
// `degenerate` is set when neither volume contains an instance; AP is then
// defined as 1.0 by convention (nothing to find, nothing hallucinated).
struct InstanceApResult {
  std::map<double, double> ap;
  MatchTable table;
  bool degenerate = false;
};

// Average precision of a predicted instance labeling against a reference
// labeling (0 = background in both), evaluated at each IoU threshold.
//
// Overlapping (reference, predicted) pairs are matched greedily in
// descending IoU, ties broken by (gt_id, pred_id), each instance used at
// most once. At threshold t the matches with IoU >= t are true positives;
// every other predicted instance counts as a false positive and every other
// reference instance as a false negative. The score is TP / (TP + FP + FN),
// the standard form when instances carry no confidence scores. Because
// matching processes candidates in descending IoU, the accepted matches at
// or above any threshold are exactly what matching restricted to that
// threshold would accept, so one matching pass serves every threshold.
inline InstanceApResult instance_ap(const LabelVolume& pred,
                                    const LabelVolume& gt,
                                    const std::vector<double>& thresholds) {
  if (pred.shape() != gt.shape()) {
    throw std::invalid_argument("instance_ap: shape mismatch: " +
                                pred.shape().str() + " vs " + gt.shape().str());
  }
  for (double t : thresholds) {
    if (!std::isfinite(t)) {
      throw std::invalid_argument("instance_ap: threshold must be finite");
    }
  }

  std::unordered_map<std::uint32_t, std::int64_t> gt_size;
  std::unordered_map<std::uint32_t, std::int64_t> pred_size;
  std::unordered_map<std::uint64_t, std::int64_t> pair_inter;
  for (std::size_t i = 0; i < pred.voxels(); ++i) {
    const std::uint32_t g = gt.data()[i];
    const std::uint32_t p = pred.data()[i];
    if (g != 0) ++gt_size[g];
    if (p != 0) ++pred_size[p];
    if (g != 0 && p != 0) {
      ++pair_inter[(static_cast<std::uint64_t>(g) << 32) | p];
    }
  }

  struct Candidate {
    double iou;
    std::uint32_t gt_id;
    std::uint32_t pred_id;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(pair_inter.size());
  for (const auto& [key, inter] : pair_inter) {
    const auto g = static_cast<std::uint32_t>(key >> 32);
    const auto p = static_cast<std::uint32_t>(key & 0xffffffffu);
    const std::int64_t uni = gt_size[g] + pred_size[p] - inter;
    candidates.push_back(
        {static_cast<double>(inter) / static_cast<double>(uni), g, p});
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.iou != b.iou) return a.iou > b.iou;
              if (a.gt_id != b.gt_id) return a.gt_id < b.gt_id;
              return a.pred_id < b.pred_id;
            });

  InstanceApResult out;
  std::unordered_set<std::uint32_t> used_gt;
  std::unordered_set<std::uint32_t> used_pred;
  for (const Candidate& c : candidates) {
    if (used_gt.count(c.gt_id) || used_pred.count(c.pred_id)) continue;
    used_gt.insert(c.gt_id);
    used_pred.insert(c.pred_id);
    out.table.matches.push_back({c.gt_id, c.pred_id, c.iou});
  }
  for (const auto& entry : gt_size) {
    if (!used_gt.count(entry.first)) out.table.unmatched_gt.push_back(entry.first);
  }
  for (const auto& entry : pred_size) {
    if (!used_pred.count(entry.first)) {
      out.table.unmatched_pred.push_back(entry.first);
    }
  }
  std::sort(out.table.unmatched_gt.begin(), out.table.unmatched_gt.end());
  std::sort(out.table.unmatched_pred.begin(), out.table.unmatched_pred.end());

  const std::int64_t n_gt = static_cast<std::int64_t>(gt_size.size());
  const std::int64_t n_pred = static_cast<std::int64_t>(pred_size.size());
  out.degenerate = n_gt == 0 && n_pred == 0;
  for (double t : thresholds) {
    std::int64_t tp = 0;
    for (const InstanceMatch& m : out.table.matches) {
      if (m.iou >= t) ++tp;
    }
    const std::int64_t denom = n_gt + n_pred - tp;
    out.ap[t] = denom > 0
                    ? static_cast<double>(tp) / static_cast<double>(denom)
                    : 1.0;
  }
  return out;
}

// Distance in nanometers from every voxel to the nearest nonzero voxel of
// `mask`, using the mask's own per-axis resolution. Exact (separable
// lower-envelope algorithm), so anisotropic spacings are handled without
// approximation. Throws when the mask is empty.
inline Volume<float> distance_transform(const LabelVolume& mask) {
  return distance_field(mask, mask.resolution());
}

// Physical length of the volume diagonal, the declared cap for distance
// metrics when one side of the comparison has no foreground at all.
inline double volume_diagonal_nm(Vec3 shape, Vec3d resolution_nm) {
  const double dz = static_cast<double>(shape.z) * resolution_nm.z;
  const double dy = static_cast<double>(shape.y) * resolution_nm.y;
  const double dx = static_cast<double>(shape.x) * resolution_nm.x;
  return std::sqrt(dz * dz + dy * dy + dx * dx);
}

// Boundary distance agreement between two binary masks. `adgt` penalizes
// false positives (how far predicted foreground sits from the reference),
// `adf` penalizes false negatives (how far reference foreground sits from
// the prediction), `score` is their mean. `degenerate` is set when either
// mask is empty: the mean over an empty foreground is 0, and distances to an
// empty target set are capped at the physical volume diagonal.
struct CremiScores {
  double adgt = 0.0;
  double adf = 0.0;
  double score = 0.0;
  bool degenerate = false;
};

// Mean distance (nm) from each foreground voxel of `from` to the foreground
// set of `to`, with the declared degenerate conventions applied.
namespace detail {
inline double mean_foreground_distance(const LabelVolume& from,
                                       const LabelVolume& to, bool from_empty,
                                       bool to_empty) {
  if (from_empty) return 0.0;
  if (to_empty) return volume_diagonal_nm(from.shape(), from.resolution());
  const Volume<float> dist = distance_field(to, to.resolution());
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < from.voxels(); ++i) {
    if (from.data()[i] != 0) {
      sum += static_cast<double>(dist.data()[i]);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}
}  // namespace detail

// Distance scores of a predicted binary mask against a reference mask, in
// nanometers using the volumes' resolution. Swapping the arguments swaps
// adgt and adf and leaves the combined score unchanged.
inline CremiScores cremi_scores(const LabelVolume& pred,
                                const LabelVolume& gt) {
  if (pred.shape() != gt.shape()) {
    throw std::invalid_argument("cremi_scores: shape mismatch: " +
                                pred.shape().str() + " vs " + gt.shape().str());
  }
  if (pred.resolution() != gt.resolution()) {
    throw std::invalid_argument(
        "cremi_scores: resolution mismatch between prediction and reference");
  }
  const auto empty = [](const LabelVolume& v) {
    for (std::uint32_t x : v.data()) {
      if (x != 0) return false;
    }
    return true;
  };
  const bool pred_empty = empty(pred);
  const bool gt_empty = empty(gt);

  CremiScores out;
  out.adgt = detail::mean_foreground_distance(pred, gt, pred_empty, gt_empty);
  out.adf = detail::mean_foreground_distance(gt, pred, gt_empty, pred_empty);
  out.score = 0.5 * (out.adgt + out.adf);
  out.degenerate = pred_empty || gt_empty;
  return out;
}

// Metrics recorded for one evaluated volume. Every field is optional so a
// record can carry only what the active tasks produce; absent optionals and
// an empty ap map mean "not evaluated". `degenerate` notes that at least one
// declared convention (empty mask, no instances) fired for this volume.
struct VolumeMetrics {
  std::string name;
  std::optional<double> fg_iou;
  std::optional<double> iou;
  std::map<double, double> ap;
  std::optional<double> adgt;
  std::optional<double> adf;
  std::optional<double> cremi;
  bool degenerate = false;
};

// Unweighted arithmetic means of per-volume metrics. Every metric must be
// present in all volumes or in none; a partially present metric is a caller
// bug (mixing incomparable runs) and raises invalid_argument. AP maps must
// agree on their threshold sets for the same reason.
inline VolumeMetrics aggregate(const std::vector<VolumeMetrics>& reports) {
  if (reports.empty()) {
    throw std::invalid_argument("aggregate: need at least one volume report");
  }
  const double n = static_cast<double>(reports.size());

  VolumeMetrics overall;
  overall.name = "overall";

  const auto mean_field =
      [&](std::optional<double> VolumeMetrics::* field,
          const char* label) -> std::optional<double> {
    const bool present = (reports[0].*field).has_value();
    double sum = 0.0;
    for (const VolumeMetrics& r : reports) {
      if ((r.*field).has_value() != present) {
        throw std::invalid_argument(
            std::string("aggregate: metric \"") + label +
            "\" present in some volumes but not others");
      }
      if (present) sum += *(r.*field);
    }
    if (!present) return std::nullopt;
    return sum / n;
  };
  overall.fg_iou = mean_field(&VolumeMetrics::fg_iou, "fg_iou");
  overall.iou = mean_field(&VolumeMetrics::iou, "iou");
  overall.adgt = mean_field(&VolumeMetrics::adgt, "adgt");
  overall.adf = mean_field(&VolumeMetrics::adf, "adf");
  overall.cremi = mean_field(&VolumeMetrics::cremi, "cremi");

  for (const VolumeMetrics& r : reports) {
    if (r.ap.size() != reports[0].ap.size()) {
      throw std::invalid_argument(
          "aggregate: ap evaluated at different threshold sets across volumes");
    }
    overall.degenerate = overall.degenerate || r.degenerate;
  }
  for (const auto& entry : reports[0].ap) {
    const double threshold = entry.first;
    double sum = 0.0;
    for (const VolumeMetrics& r : reports) {
      const auto it = r.ap.find(threshold);
      if (it == r.ap.end()) {
        throw std::invalid_argument(
            "aggregate: ap evaluated at different threshold sets across volumes");
      }
      sum += it->second;
    }
    overall.ap[threshold] = sum / n;
  }
  return overall;
}

// Per-volume records plus their aggregate.
struct MetricReport {
  std::vector<VolumeMetrics> volumes;
  VolumeMetrics overall;
};

inline MetricReport make_metric_report(std::vector<VolumeMetrics> volumes) {
  MetricReport report;
  report.overall = aggregate(volumes);
  report.volumes = std::move(volumes);
  return report;
}

namespace detail {

// Shortest decimal form of an AP threshold for use as a JSON key or column
// header ("0.75", not "0.750000").
inline std::string format_threshold(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", t);
  return buf;
}

inline nlohmann::json volume_metrics_to_json(const VolumeMetrics& m) {
  nlohmann::json j;
  j["name"] = m.name;
  if (m.fg_iou) j["fg_iou"] = *m.fg_iou;
  if (m.iou) j["iou"] = *m.iou;
  if (!m.ap.empty()) {
    nlohmann::json ap = nlohmann::json::object();
    for (const auto& [t, score] : m.ap) ap[format_threshold(t)] = score;
    j["ap"] = std::move(ap);
  }
  if (m.adgt) j["adgt"] = *m.adgt;
  if (m.adf) j["adf"] = *m.adf;
  if (m.cremi) j["cremi"] = *m.cremi;
  if (m.degenerate) j["degenerate"] = true;
  return j;
}

}  // namespace detail

inline nlohmann::json metric_report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["volumes"] = nlohmann::json::array();
  for (const VolumeMetrics& m : report.volumes) {
    j["volumes"].push_back(detail::volume_metrics_to_json(m));
  }
  j["overall"] = detail::volume_metrics_to_json(report.overall);
  return j;
}

// Fixed-width text table of a report: one row per volume plus the overall
// row, one column per present metric. Meant for terminal output.
inline std::string format_metric_table(const MetricReport& report) {
  std::vector<const VolumeMetrics*> rows;
  for (const VolumeMetrics& m : report.volumes) rows.push_back(&m);
  rows.push_back(&report.overall);

  std::vector<std::string> headers{"volume"};
  const VolumeMetrics& probe = report.overall;
  if (probe.fg_iou) headers.push_back("fg_iou");
  if (probe.iou) headers.push_back("iou");
  for (const auto& entry : probe.ap) {
    headers.push_back("ap@" + detail::format_threshold(entry.first));
  }
  if (probe.adgt) headers.push_back("adgt");
  if (probe.adf) headers.push_back("adf");
  if (probe.cremi) headers.push_back("cremi");

  const auto cell = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return std::string(buf);
  };
  std::vector<std::vector<std::string>> body;
  for (const VolumeMetrics* m : rows) {
    std::vector<std::string> row{m->name + (m->degenerate ? "*" : "")};
    if (probe.fg_iou) row.push_back(cell(m->fg_iou.value_or(0.0)));
    if (probe.iou) row.push_back(cell(m->iou.value_or(0.0)));
    for (const auto& entry : probe.ap) {
      const auto it = m->ap.find(entry.first);
      row.push_back(cell(it == m->ap.end() ? 0.0 : it->second));
    }
    if (probe.adgt) row.push_back(cell(m->adgt.value_or(0.0)));
    if (probe.adf) row.push_back(cell(m->adf.value_or(0.0)));
    if (probe.cremi) row.push_back(cell(m->cremi.value_or(0.0)));
    body.push_back(std::move(row));
  }

  std::vector<std::size_t> widths(headers.size());
  for (std::size_t c = 0; c < headers.size(); ++c) {
    widths[c] = headers[c].size();
    for (const auto& row : body) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  const auto emit_row = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += "  ";
      out += row[c];
      out.append(widths[c] - row[c].size(), ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  };
  emit_row(headers);
  for (const auto& row : body) emit_row(row);
  return out;
}

}  // namespace volseg

#endif  // VOLSEG_METRICS_HPP_
