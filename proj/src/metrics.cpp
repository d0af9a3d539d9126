#include "tadn/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tadn/assignment.hpp"
#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace {

std::map<int, std::vector<const MotRow*>> by_frame(std::span<const MotRow> rows) {
  std::map<int, std::vector<const MotRow*>> out;
  for (const MotRow& r : rows) out[r.frame].push_back(&r);
  return out;
}

struct TrackCoverage {
  long present = 0;
  long covered = 0;
  bool last_covered = false;
  bool seen = false;
  long frag = 0;
};

}  // namespace

double ClearReport::mota() const {
  const double errors = static_cast<double>(fn + fp + idsw);
  return 1.0 - errors / static_cast<double>(std::max<long>(gt_boxes, 1));
}

double ClearReport::motp() const {
  return matches > 0 ? iou_sum / static_cast<double>(matches) : 0.0;
}

double ClearReport::mt_ratio() const {
  return gt_tracks > 0 ? static_cast<double>(mostly_tracked) / static_cast<double>(gt_tracks)
                       : 0.0;
}

double ClearReport::ml_ratio() const {
  return gt_tracks > 0 ? static_cast<double>(mostly_lost) / static_cast<double>(gt_tracks)
                       : 0.0;
}

ClearReport evaluate(std::span<const MotRow> predictions, std::span<const MotRow> ground_truth,
                     double iou_gate) {
  if (!(iou_gate > 0.0 && iou_gate <= 1.0)) throw InputError("iou gate must lie in (0, 1]");
  const auto preds = by_frame(predictions);
  const auto gts = by_frame(ground_truth);
  std::set<int> frames;
  for (const auto& [f, _] : preds) frames.insert(f);
  for (const auto& [f, _] : gts) frames.insert(f);

  ClearReport r;
  std::unordered_map<int, int> last_match;  // gt id -> prediction id
  std::map<int, TrackCoverage> coverage;
  const std::vector<const MotRow*> none;

  for (int f : frames) {
    const auto pit = preds.find(f);
    const auto git = gts.find(f);
    const std::vector<const MotRow*>& p = pit == preds.end() ? none : pit->second;
    const std::vector<const MotRow*>& g = git == gts.end() ? none : git->second;
    r.gt_boxes += static_cast<long>(g.size());
    r.predictions += static_cast<long>(p.size());

    std::vector<int> gt_match(g.size(), -1);
    std::vector<char> pred_used(p.size(), 0);

    // Keep existing correspondences that are still within the gate.
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto lm = last_match.find(g[i]->id);
      if (lm == last_match.end()) continue;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (pred_used[j] || p[j]->id != lm->second) continue;
        if (iou(g[i]->box, p[j]->box) >= iou_gate) {
          gt_match[i] = static_cast<int>(j);
          pred_used[j] = 1;
        }
        break;
      }
    }

    std::vector<std::size_t> free_gt;
    std::vector<std::size_t> free_pred;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (gt_match[i] < 0) free_gt.push_back(i);
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!pred_used[j]) free_pred.push_back(j);
    }
    SimilarityMatrix sim(static_cast<Eigen::Index>(free_gt.size()),
                         static_cast<Eigen::Index>(free_pred.size()));
    for (std::size_t a = 0; a < free_gt.size(); ++a) {
      for (std::size_t b = 0; b < free_pred.size(); ++b) {
        const double v = iou(g[free_gt[a]]->box, p[free_pred[b]]->box);
        sim(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            v >= iou_gate ? v : -std::numeric_limits<double>::infinity();
      }
    }
    for (const Match& m : solve_lap(sim, iou_gate)) {
      const std::size_t i = free_gt[m.row];
      const std::size_t j = free_pred[m.col];
      gt_match[i] = static_cast<int>(j);
      pred_used[j] = 1;
      const auto lm = last_match.find(g[i]->id);
      if (lm != last_match.end() && lm->second != p[j]->id) ++r.idsw;
    }

    for (std::size_t i = 0; i < g.size(); ++i) {
      TrackCoverage& c = coverage[g[i]->id];
      ++c.present;
      const bool covered = gt_match[i] >= 0;
      if (covered) {
        const MotRow& pr = *p[static_cast<std::size_t>(gt_match[i])];
        ++c.covered;
        ++r.matches;
        r.iou_sum += iou(g[i]->box, pr.box);
        last_match[g[i]->id] = pr.id;
      } else {
        ++r.fn;
      }
      if (c.seen && c.last_covered && !covered) ++c.frag;
      c.seen = true;
      c.last_covered = covered;
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!pred_used[j]) ++r.fp;
    }
  }

  for (const auto& [id, c] : coverage) {
    ++r.gt_tracks;
    const double ratio = static_cast<double>(c.covered) / static_cast<double>(c.present);
    if (ratio >= 0.8) ++r.mostly_tracked;
    if (ratio <= 0.2) ++r.mostly_lost;
    r.frag += c.frag;
  }
  TADN_CHECK(r.matches + r.fn == r.gt_boxes, "CLEAR bookkeeping: matches + FN != GT");
  TADN_CHECK(r.matches + r.fp == r.predictions, "CLEAR bookkeeping: matches + FP != predictions");
  return r;
}

ClearReport aggregate(std::span<const ClearReport> reports) {
  ClearReport total;
  total.name = "OVERALL";
  for (const ClearReport& r : reports) {
    total.gt_boxes += r.gt_boxes;
    total.predictions += r.predictions;
    total.matches += r.matches;
    total.fp += r.fp;
    total.fn += r.fn;
    total.idsw += r.idsw;
    total.frag += r.frag;
    total.gt_tracks += r.gt_tracks;
    total.mostly_tracked += r.mostly_tracked;
    total.mostly_lost += r.mostly_lost;
    total.iou_sum += r.iou_sum;
  }
  return total;
}

std::string format_table(std::span<const ClearReport> reports) {
  std::size_t name_width = 8;
  for (const ClearReport& r : reports) name_width = std::max(name_width, r.name.size());
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s %8s %8s %6s %6s %7s %7s %6s %6s %7s\n",
                static_cast<int>(name_width), "sequence", "MOTA", "MOTP", "MT", "ML", "FP", "FN",
                "IDSW", "Frag", "GT");
  out << buf;
  for (const ClearReport& r : reports) {
    std::snprintf(buf, sizeof buf, "%-*s %7.2f%% %8.4f %5.1f%% %5.1f%% %7ld %7ld %6ld %6ld %7ld\n",
                  static_cast<int>(name_width), r.name.c_str(), 100.0 * r.mota(), r.motp(),
                  100.0 * r.mt_ratio(), 100.0 * r.ml_ratio(), r.fp, r.fn, r.idsw, r.frag,
                  r.gt_boxes);
    out << buf;
  }
  return out.str();
}

std::string format_key_values(std::span<const ClearReport> reports) {
  std::ostringstream out;
  out.precision(10);
  for (const ClearReport& r : reports) {
    const std::string p = r.name + ".";
    out << p << "mota=" << r.mota() << '\n'
        << p << "motp=" << r.motp() << '\n'
        << p << "mt=" << r.mt_ratio() << '\n'
        << p << "ml=" << r.ml_ratio() << '\n'
        << p << "fp=" << r.fp << '\n'
        << p << "fn=" << r.fn << '\n'
        << p << "idsw=" << r.idsw << '\n'
        << p << "frag=" << r.frag << '\n'
        << p << "gt=" << r.gt_boxes << '\n'
        << p << "gt_tracks=" << r.gt_tracks << '\n'
        << p << "predictions=" << r.predictions << '\n';
  }
  return out.str();
}

TADN_NAMESPACE_END
