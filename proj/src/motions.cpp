#include "ptrack/motions.hpp"

#include <algorithm>
#include <cmath>

#include "ptrack/errors.hpp"

namespace ptrack {

const std::vector<std::string> kMotionKinds = {"stand", "lean", "squat",
                                               "walk",  "hop",  "kick"};

namespace {

constexpr double kTwoPi = 6.283185307179586;

double get(const std::map<std::string, double>& params, const std::string& key,
           double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

void motion_pose(const std::string& kind, const std::map<std::string, double>& params,
                 const RobotModel& model, double t, Eigen::VectorXd& q,
                 Eigen::VectorXd& qdot) {
  const int nj = model.num_joints();
  q = model.default_pose;
  qdot = Eigen::VectorXd::Zero(nj);
  const double hip0 = model.default_pose(0);
  const double knee0 = model.default_pose(1);
  const double ankle0 = model.default_pose(2);

  if (kind == "stand") {
    return;
  }
  if (kind == "lean") {
    const double amp = get(params, "amp", 0.08);
    const double f = get(params, "freq", 0.3);
    const double ph = get(params, "phase", 0.0);
    const double w = kTwoPi * f;
    const double s = amp * std::sin(w * t + ph);
    const double sd = amp * w * std::cos(w * t + ph);
    for (int leg = 0; leg < 2; ++leg) {
      q(3 * leg + 2) = ankle0 + s;
      qdot(3 * leg + 2) = sd;
    }
    return;
  }
  if (kind == "squat" || kind == "hop") {
    const double amp = get(params, "amp", kind == "squat" ? 0.3 : 0.15);
    const double f = get(params, "freq", kind == "squat" ? 0.5 : 2.0);
    const double w = kTwoPi * f;
    double a, ad;
    if (kind == "squat") {
      a = hip0 + amp * 0.5 * (1.0 - std::cos(w * t));
      ad = amp * 0.5 * w * std::sin(w * t);
    } else {
      a = hip0 + amp * std::sin(w * t);
      ad = amp * w * std::cos(w * t);
    }
    for (int leg = 0; leg < 2; ++leg) {
      q(3 * leg + 0) = a;
      q(3 * leg + 1) = -2.0 * a;
      q(3 * leg + 2) = a;
      qdot(3 * leg + 0) = ad;
      qdot(3 * leg + 1) = -2.0 * ad;
      qdot(3 * leg + 2) = ad;
    }
    return;
  }
  if (kind == "walk") {
    const double f = get(params, "freq", 1.4);
    const double hip_amp = get(params, "hip_amp", 0.26);
    const double knee_amp = get(params, "knee_amp", 0.4);
    const double w = kTwoPi * f;
    for (int leg = 0; leg < 2; ++leg) {
      const double ph = leg == 0 ? 0.0 : M_PI;
      const double s = std::sin(w * t + ph);
      const double c = std::cos(w * t + ph);
      // Swing envelope peaks when the hip crosses neutral moving forward.
      const double env = 0.5 * (1.0 + c);
      const double env_d = -0.5 * w * s;
      const double swing = env * env;
      const double swing_d = 2.0 * env * env_d;
      const double hip = hip0 + hip_amp * s;
      const double hip_d = hip_amp * w * c;
      const double knee = knee0 - knee_amp * swing;
      const double knee_d = -knee_amp * swing_d;
      q(3 * leg + 0) = hip;
      q(3 * leg + 1) = knee;
      q(3 * leg + 2) = -(hip + knee);  // keep the sole level
      qdot(3 * leg + 0) = hip_d;
      qdot(3 * leg + 1) = knee_d;
      qdot(3 * leg + 2) = -(hip_d + knee_d);
    }
    return;
  }
  if (kind == "kick") {
    const double amp = get(params, "amp", 0.55);
    const double f = get(params, "freq", 0.7);
    const int leg = get(params, "leg", 0.0) > 0.5 ? 1 : 0;
    const double w = kTwoPi * f;
    const double base_s = 0.5 * (1.0 + std::sin(w * t - M_PI / 2.0));
    const double base_sd = 0.5 * w * std::cos(w * t - M_PI / 2.0);
    const double s = base_s * base_s * base_s;
    const double sd = 3.0 * base_s * base_s * base_sd;
    q(3 * leg + 0) = hip0 + amp * s;
    q(3 * leg + 1) = knee0 + 0.45 * s;
    q(3 * leg + 2) = ankle0 - 0.5 * amp * s;
    qdot(3 * leg + 0) = amp * sd;
    qdot(3 * leg + 1) = 0.45 * sd;
    qdot(3 * leg + 2) = -0.5 * amp * sd;
    const int other = 1 - leg;
    q(3 * other + 0) = hip0 - 0.1 * s;
    qdot(3 * other + 0) = -0.1 * sd;
    return;
  }
  throw ConfigError("motion_pose: unknown kind '" + kind + "'");
}

std::map<std::string, double> sample_motion_params(const std::string& kind, Rng& rng) {
  std::map<std::string, double> p;
  if (kind == "stand") {
    return p;
  }
  if (kind == "lean") {
    p["amp"] = rng.uniform(0.05, 0.12);
    p["freq"] = rng.uniform(0.2, 0.5);
    p["phase"] = rng.uniform(0.0, kTwoPi);
    return p;
  }
  if (kind == "squat") {
    p["amp"] = rng.uniform(0.15, 0.4);
    p["freq"] = rng.uniform(0.3, 0.7);
    return p;
  }
  if (kind == "walk") {
    p["speed"] = rng.uniform(0.25, 0.5);
    p["freq"] = rng.uniform(1.2, 1.7);
    p["hip_amp"] = rng.uniform(0.2, 0.32);
    p["knee_amp"] = rng.uniform(0.3, 0.5);
    return p;
  }
  if (kind == "hop") {
    p["amp"] = rng.uniform(0.1, 0.22);
    p["freq"] = rng.uniform(1.6, 2.4);
    return p;
  }
  if (kind == "kick") {
    p["amp"] = rng.uniform(0.4, 0.7);
    p["freq"] = rng.uniform(0.5, 0.9);
    p["leg"] = rng.uniform01() < 0.5 ? 0.0 : 1.0;
    return p;
  }
  throw ConfigError("sample_motion_params: unknown kind '" + kind + "'");
}

namespace {

double reference_base_height(const RobotModel& model, const Eigen::VectorXd& q) {
  return standing_base_height(model, q);
}

}  // namespace

MotionClip generate_clip(const std::string& kind,
                         const std::map<std::string, double>& params, double duration,
                         double fps, const RobotModel& model) {
  if (duration <= 0.0) throw ConfigError("generate_clip: duration must be positive");
  if (fps <= 0.0) throw ConfigError("generate_clip: fps must be positive");
  if (std::find(kMotionKinds.begin(), kMotionKinds.end(), kind) == kMotionKinds.end())
    throw ConfigError("generate_clip: unknown kind '" + kind + "'");

  MotionClip clip;
  clip.fps = fps;
  clip.kind = kind;
  clip.params = params;
  const double speed = get(params, "speed", 0.0) * (kind == "walk" ? 1.0 : 0.0);
  const int n = static_cast<int>(std::lround(duration * fps)) + 1;
  clip.frames.resize(n);

  const double dh = 1e-4;  // for the reference vertical rate
  for (int i = 0; i < n; ++i) {
    const double t = i / fps;
    MotionFrame& fr = clip.frames[i];
    motion_pose(kind, params, model, t, fr.q_ref, fr.qdot_ref);
    for (int j = 0; j < model.num_joints(); ++j) {
      const JointParams& jp = model.joints[j];
      if (fr.q_ref(j) < jp.limit_lo - 1e-9 || fr.q_ref(j) > jp.limit_hi + 1e-9)
        throw ConfigError("generate_clip: '" + kind + "' violates limits of " + jp.name);
    }
    fr.base_height_ref = reference_base_height(model, fr.q_ref);

    Eigen::VectorXd qa, qb, qd;
    motion_pose(kind, params, model, t - dh, qa, qd);
    motion_pose(kind, params, model, t + dh, qb, qd);
    const double vz = (reference_base_height(model, qb) - reference_base_height(model, qa)) /
                      (2.0 * dh);
    fr.base_vel_ref = Vec2(speed, vz);

    std::vector<double> pitch;
    local_link_pose(model, fr.q_ref, fr.link_pos_ref, pitch);
    std::vector<double> fo = foot_point_heights(model, fr.q_ref, fr.base_height_ref);
    const int per_foot = static_cast<int>(model.foot_points.size());
    fr.feet_height_ref.resize(2);
    for (int foot = 0; foot < 2; ++foot) {
      double lo = fo[foot * per_foot];
      for (int p = 1; p < per_foot; ++p) lo = std::min(lo, fo[foot * per_foot + p]);
      fr.feet_height_ref[foot] = lo;
    }
  }
  return clip;
}

int TrackingGoal::flat_size(const RobotModel& model) {
  return 2 * model.num_joints() + 2 * model.num_links() + 5;
}

Eigen::VectorXd TrackingGoal::flatten() const {
  const int nj = static_cast<int>(q_target.size());
  const int nl = static_cast<int>(link_pos_target.size());
  Eigen::VectorXd v(2 * nj + 2 * nl + 5);
  v.head(nj) = q_target;
  v.segment(nj, nj) = qdot_target;
  for (int l = 0; l < nl; ++l) {
    v(2 * nj + 2 * l) = link_pos_target[l].x();
    v(2 * nj + 2 * l + 1) = link_pos_target[l].y();
  }
  v(2 * nj + 2 * nl) = base_height_target;
  v(2 * nj + 2 * nl + 1) = base_vel_target.x();
  v(2 * nj + 2 * nl + 2) = base_vel_target.y();
  v(2 * nj + 2 * nl + 3) = feet_height_target.size() > 0 ? feet_height_target[0] : 0.0;
  v(2 * nj + 2 * nl + 4) = feet_height_target.size() > 1 ? feet_height_target[1] : 0.0;
  return v;
}

TrackingGoal clip_goal(const MotionClip& clip, double t) {
  if (t < 0.0) throw DomainError("clip_goal: negative time");
  if (clip.frames.empty()) throw DomainError("clip_goal: empty clip");
  const int n = clip.num_frames();
  double u = t * clip.fps;
  if (u >= n - 1) u = n - 1;
  const int i0 = static_cast<int>(u);
  const int i1 = std::min(i0 + 1, n - 1);
  const double f = u - i0;
  const MotionFrame& a = clip.frames[i0];
  const MotionFrame& b = clip.frames[i1];

  TrackingGoal g;
  g.q_target = (1.0 - f) * a.q_ref + f * b.q_ref;
  g.qdot_target = (1.0 - f) * a.qdot_ref + f * b.qdot_ref;
  g.base_height_target = (1.0 - f) * a.base_height_ref + f * b.base_height_ref;
  g.base_vel_target = (1.0 - f) * a.base_vel_ref + f * b.base_vel_ref;
  g.link_pos_target.resize(a.link_pos_ref.size());
  for (size_t l = 0; l < a.link_pos_ref.size(); ++l)
    g.link_pos_target[l] = (1.0 - f) * a.link_pos_ref[l] + f * b.link_pos_ref[l];
  g.feet_height_target.resize(a.feet_height_ref.size());
  for (size_t l = 0; l < a.feet_height_ref.size(); ++l)
    g.feet_height_target[l] = (1.0 - f) * a.feet_height_ref[l] + f * b.feet_height_ref[l];
  return g;
}

Eigen::VectorXd feature_embedding(const MotionClip& clip, const RobotModel& model) {
  if (clip.frames.empty()) throw DomainError("feature_embedding: empty clip");
  const int nj = model.num_joints();
  const int n = clip.num_frames();

  Eigen::VectorXd mean_abs_q = Eigen::VectorXd::Zero(nj);
  Eigen::VectorXd rms_qdot = Eigen::VectorXd::Zero(nj);
  double mean_h = 0.0;
  for (const MotionFrame& fr : clip.frames) {
    mean_abs_q += (fr.q_ref - model.default_pose).cwiseAbs();
    rms_qdot += fr.qdot_ref.cwiseAbs2();
    mean_h += fr.base_height_ref;
  }
  mean_abs_q /= n;
  rms_qdot = (rms_qdot / n).cwiseSqrt();
  mean_h /= n;

  // Dominant base-height frequency from zero crossings of the centered signal.
  int crossings = 0;
  for (int i = 1; i < n; ++i) {
    const double a = clip.frames[i - 1].base_height_ref - mean_h;
    const double b = clip.frames[i].base_height_ref - mean_h;
    if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) ++crossings;
  }
  const double duration = clip.duration();
  const double freq = duration > 0.0 ? crossings / (2.0 * duration) : 0.0;

  double duty = 0.0;
  double speed_mean = 0.0, speed_sq = 0.0;
  for (const MotionFrame& fr : clip.frames) {
    int down = 0;
    for (double h : fr.feet_height_ref)
      if (h < 0.02) ++down;
    duty += static_cast<double>(down) / fr.feet_height_ref.size();
    const double sp = fr.base_vel_ref.norm();
    speed_mean += sp;
    speed_sq += sp * sp;
  }
  duty /= n;
  speed_mean /= n;
  const double speed_var = std::max(0.0, speed_sq / n - speed_mean * speed_mean);

  Eigen::VectorXd e(2 * nj + 4);
  e << mean_abs_q, rms_qdot, freq, duty, speed_mean, std::sqrt(speed_var);
  return e;
}

std::vector<int> MotionDataset::cluster_members(int cluster) const {
  std::vector<int> out;
  for (size_t i = 0; i < cluster_assignments.size(); ++i)
    if (cluster_assignments[i] == cluster) out.push_back(static_cast<int>(i));
  return out;
}

void MotionDataset::validate() const {
  if (clips.size() != cluster_assignments.size())
    throw ConfigError("dataset: assignment count != clip count");
  for (int a : cluster_assignments)
    if (a < 0 || a >= k) throw ConfigError("dataset: assignment outside [0, k)");
}

MotionDataset build_dataset(const DatasetSpec& spec, uint64_t seed,
                            const RobotModel& model) {
  if (spec.kinds.empty()) throw ConfigError("build_dataset: no kinds listed");
  int total = 0;
  for (const auto& ks : spec.kinds) total += ks.count;
  if (spec.k < 1 || spec.k > total)
    throw ConfigError("build_dataset: k must be in [1, clip count]");

  MotionDataset ds;
  ds.spec = spec;
  ds.seed = seed;
  ds.k = spec.k;
  Rng rng(seed);
  for (const auto& ks : spec.kinds) {
    for (int i = 0; i < ks.count; ++i) {
      const auto params = sample_motion_params(ks.kind, rng);
      const double duration = rng.uniform(spec.min_duration, spec.max_duration);
      ds.clips.push_back(generate_clip(ks.kind, params, duration, spec.fps, model));
    }
  }

  const int n = static_cast<int>(ds.clips.size());
  Eigen::MatrixXd raw(feature_embedding(ds.clips[0], model).size(), n);
  for (int i = 0; i < n; ++i) raw.col(i) = feature_embedding(ds.clips[i], model);

  // z-normalize per dimension across the dataset
  Eigen::VectorXd mu = raw.rowwise().mean();
  Eigen::VectorXd sd = ((raw.colwise() - mu).cwiseAbs2().rowwise().mean()).cwiseSqrt();
  for (int d = 0; d < raw.rows(); ++d) {
    const double s = sd(d) > 1e-12 ? sd(d) : 1.0;
    raw.row(d) = (raw.row(d).array() - mu(d)) / s;
  }
  ds.embeddings = raw;

  KmeansResult km = kmeans(raw, spec.k, 100, Rng(seed).split() ^ 0x6b6d65616e73ULL);
  ds.cluster_assignments = km.assignments;
  ds.validate();
  return ds;
}

}  // namespace ptrack
