#include "tadn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace {

// Keeps in-memory values identical to what the 3-decimal file format stores.
double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

struct Walker {
  int id;
  double x, y, w, h;  // upper-left corner and size
  double vx, vy;
  int frames_left;
  std::vector<double> appearance;
};

std::vector<double> random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = n(rng);
      norm += x * x;
    }
  } while (norm == 0.0 && dim > 0);
  for (double& x : v) x /= std::sqrt(norm);
  return v;
}

}  // namespace

void SynthConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string(name) + " must lie in [0, 1]");
  };
  prob(spawn_probability, "spawn_probability");
  prob(miss_probability, "miss_probability");
  if (frames < 0) throw InputError("frames must be non-negative");
  if (!(image_width > 0.0 && image_height > 0.0)) throw InputError("image size must be positive");
  if (max_targets < 0 || initial_targets < 0 || initial_targets > max_targets) {
    throw InputError("need 0 <= initial_targets <= max_targets");
  }
  if (lifetime_min < 1 || lifetime_max < lifetime_min) {
    throw InputError("need 1 <= lifetime_min <= lifetime_max");
  }
  if (!(speed_min >= 0.0 && speed_max >= speed_min)) throw InputError("bad speed range");
  if (!(width_min > 0.0 && width_max >= width_min)) throw InputError("bad width range");
  if (!(aspect_min > 0.0 && aspect_max >= aspect_min)) throw InputError("bad aspect range");
  if (width_max * aspect_max >= image_height || width_max >= image_width) {
    throw InputError("targets must fit inside the image");
  }
  if (!(noise_std >= 0.0) || !(false_positive_rate >= 0.0) || !(appearance_noise >= 0.0)) {
    throw InputError("noise levels and rates must be non-negative");
  }
  if (appearance_dim < 1) throw InputError("appearance_dim must be positive");
}

io::SequenceBundle generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::poisson_distribution<int> false_positives(cfg.false_positive_rate);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto lifetime = [&] {
    return std::uniform_int_distribution<int>(cfg.lifetime_min, cfg.lifetime_max)(rng);
  };

  io::SequenceBundle b;
  b.info = {cfg.name, cfg.image_width, cfg.image_height, cfg.frames};
  b.features = FeatureTable(static_cast<std::size_t>(cfg.appearance_dim));

  int next_id = 1;
  auto spawn = [&] {
    Walker t;
    t.id = next_id++;
    t.w = uniform(cfg.width_min, cfg.width_max);
    t.h = t.w * uniform(cfg.aspect_min, cfg.aspect_max);
    t.x = uniform(0.0, cfg.image_width - t.w);
    t.y = uniform(0.0, cfg.image_height - t.h);
    const double speed = uniform(cfg.speed_min, cfg.speed_max);
    const double angle = uniform(0.0, 2.0 * std::numbers::pi);
    t.vx = speed * std::cos(angle);
    t.vy = speed * std::sin(angle);
    t.frames_left = lifetime();
    t.appearance = random_unit(cfg.appearance_dim, rng);
    return t;
  };
  auto describe = [&](const std::vector<double>& base) {
    std::vector<float> v(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
      v[k] = static_cast<float>(base[k] + cfg.appearance_noise * gauss(rng));
    }
    return v;
  };

  std::vector<Walker> active;
  for (int k = 0; k < cfg.initial_targets; ++k) active.push_back(spawn());

  for (int frame = 1; frame <= cfg.frames; ++frame) {
    if (frame > 1) {
      for (Walker& t : active) {
        t.x += t.vx;
        t.y += t.vy;
        if (cfg.bounce) {
          if (t.x < 0.0 || t.x + t.w > cfg.image_width) {
            t.vx = -t.vx;
            t.x = std::clamp(t.x, 0.0, cfg.image_width - t.w);
          }
          if (t.y < 0.0 || t.y + t.h > cfg.image_height) {
            t.vy = -t.vy;
            t.y = std::clamp(t.y, 0.0, cfg.image_height - t.h);
          }
        }
      }
      std::erase_if(active, [](const Walker& t) { return t.frames_left <= 0; });
      if (static_cast<int>(active.size()) < cfg.max_targets &&
          unit(rng) < cfg.spawn_probability) {
        active.push_back(spawn());
      }
    }

    std::vector<MotRow> dets;
    std::vector<std::vector<float>> descs;
    for (Walker& t : active) {
      --t.frames_left;
      MotRow g;
      g.frame = frame;
      g.id = t.id;
      g.box = BBox::from_xywh(round3(t.x), round3(t.y), round3(t.w), round3(t.h));
      g.confidence = 1.0;
      g.cls = 1;
      g.visibility = 1.0;
      g.index = static_cast<int>(b.ground_truth.size());
      b.ground_truth.push_back(g);

      if (unit(rng) < cfg.miss_probability) continue;
      const double w = std::max(1.0, t.w + cfg.noise_std * gauss(rng));
      const double h = std::max(1.0, t.h + cfg.noise_std * gauss(rng));
      const double x = t.x + cfg.noise_std * gauss(rng);
      const double y = t.y + cfg.noise_std * gauss(rng);
      MotRow d;
      d.frame = frame;
      d.box = BBox::from_xywh(round3(x), round3(y), round3(w), round3(h));
      d.confidence = round3(uniform(0.5, 1.0));
      dets.push_back(d);
      descs.push_back(describe(t.appearance));
    }
    const int fp = cfg.false_positive_rate > 0.0 ? false_positives(rng) : 0;
    for (int k = 0; k < fp; ++k) {
      const double w = uniform(cfg.width_min, cfg.width_max);
      const double h = w * uniform(cfg.aspect_min, cfg.aspect_max);
      MotRow d;
      d.frame = frame;
      d.box = BBox::from_xywh(round3(uniform(0.0, cfg.image_width - w)),
                              round3(uniform(0.0, cfg.image_height - h)), round3(w), round3(h));
      d.confidence = round3(uniform(0.3, 1.0));
      dets.push_back(d);
      descs.push_back(describe(random_unit(cfg.appearance_dim, rng)));
    }

    // Detector output order carries no identity information.
    std::vector<std::size_t> order(dets.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t k = 0; k < order.size(); ++k) {
      MotRow d = dets[order[k]];
      d.index = static_cast<int>(k);
      b.features->insert(frame, d.index, descs[order[k]]);
      b.detections.push_back(d);
    }
  }
  // Frame-local ordinals for ground truth too.
  int frame = 0;
  int index = 0;
  for (MotRow& g : b.ground_truth) {
    if (g.frame != frame) {
      frame = g.frame;
      index = 0;
    }
    g.index = index++;
  }
  return b;
}

TADN_NAMESPACE_END
