#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "ptrack/errors.hpp"
#include "ptrack/motions.hpp"

namespace ptrack {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr uint32_t kClipMagic = 0x70636c70;  // "pclp"
constexpr uint32_t kClipVersion = 1;

void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

// Per-frame scalar layout of the binary clip payload.
std::vector<std::pair<std::string, int>> frame_fields(int nj, int nl, int nf) {
  return {{"q_ref", nj},           {"qdot_ref", nj},   {"base_height_ref", 1},
          {"base_vel_ref", 2},     {"link_pos_ref", 2 * nl}, {"feet_height_ref", nf}};
}

}  // namespace

void save_clip_binary(const MotionClip& clip, const std::string& path) {
  const int nj = static_cast<int>(clip.frames[0].q_ref.size());
  const int nl = static_cast<int>(clip.frames[0].link_pos_ref.size());
  const int nf = static_cast<int>(clip.frames[0].feet_height_ref.size());

  json header;
  header["fps"] = clip.fps;
  header["frames"] = clip.num_frames();
  header["kind"] = clip.kind;
  header["params"] = clip.params;
  json fields = json::array();
  for (auto& [name, size] : frame_fields(nj, nl, nf))
    fields.push_back({{"name", name}, {"size", size}});
  header["fields"] = fields;
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("save_clip: cannot open " + path);
  write_u32(out, kClipMagic);
  write_u32(out, kClipVersion);
  write_u32(out, static_cast<uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));

  std::vector<float> buf;
  for (const MotionFrame& fr : clip.frames) {
    buf.clear();
    for (int j = 0; j < nj; ++j) buf.push_back(static_cast<float>(fr.q_ref(j)));
    for (int j = 0; j < nj; ++j) buf.push_back(static_cast<float>(fr.qdot_ref(j)));
    buf.push_back(static_cast<float>(fr.base_height_ref));
    buf.push_back(static_cast<float>(fr.base_vel_ref.x()));
    buf.push_back(static_cast<float>(fr.base_vel_ref.y()));
    for (int l = 0; l < nl; ++l) {
      buf.push_back(static_cast<float>(fr.link_pos_ref[l].x()));
      buf.push_back(static_cast<float>(fr.link_pos_ref[l].y()));
    }
    for (int f = 0; f < nf; ++f) buf.push_back(static_cast<float>(fr.feet_height_ref[f]));
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

MotionClip load_clip_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("load_clip: cannot open " + path);
  if (read_u32(in) != kClipMagic) throw ConfigError("load_clip: bad magic in " + path);
  if (read_u32(in) != kClipVersion)
    throw ConfigError("load_clip: unsupported version in " + path);
  const uint32_t hlen = read_u32(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (!in) throw ConfigError("load_clip: truncated header in " + path);
  const json header = json::parse(hs);

  MotionClip clip;
  clip.fps = header.at("fps").get<double>();
  clip.kind = header.at("kind").get<std::string>();
  clip.params = header.at("params").get<std::map<std::string, double>>();
  const int frames = header.at("frames").get<int>();

  int nj = 0, nl = 0, nf = 0;
  int frame_size = 0;
  for (const auto& f : header.at("fields")) {
    const std::string name = f.at("name").get<std::string>();
    const int size = f.at("size").get<int>();
    frame_size += size;
    if (name == "q_ref") nj = size;
    if (name == "link_pos_ref") nl = size / 2;
    if (name == "feet_height_ref") nf = size;
  }

  std::vector<float> buf(frame_size);
  clip.frames.resize(frames);
  for (int i = 0; i < frames; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw ConfigError("load_clip: truncated payload in " + path);
    MotionFrame& fr = clip.frames[i];
    int o = 0;
    fr.q_ref.resize(nj);
    fr.qdot_ref.resize(nj);
    for (int j = 0; j < nj; ++j) fr.q_ref(j) = buf[o++];
    for (int j = 0; j < nj; ++j) fr.qdot_ref(j) = buf[o++];
    fr.base_height_ref = buf[o++];
    fr.base_vel_ref = Vec2(buf[o], buf[o + 1]);
    o += 2;
    fr.link_pos_ref.resize(nl);
    for (int l = 0; l < nl; ++l) {
      fr.link_pos_ref[l] = Vec2(buf[o], buf[o + 1]);
      o += 2;
    }
    fr.feet_height_ref.resize(nf);
    for (int f = 0; f < nf; ++f) fr.feet_height_ref[f] = buf[o++];
  }
  return clip;
}

void save_dataset(const MotionDataset& dataset, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "clips");
  json manifest;
  manifest["version"] = 1;
  manifest["seed"] = dataset.seed;
  manifest["k"] = dataset.k;
  manifest["assignments"] = dataset.cluster_assignments;
  json spec;
  spec["k"] = dataset.spec.k;
  spec["fps"] = dataset.spec.fps;
  spec["min_duration"] = dataset.spec.min_duration;
  spec["max_duration"] = dataset.spec.max_duration;
  json kinds = json::array();
  for (const auto& ks : dataset.spec.kinds)
    kinds.push_back({{"kind", ks.kind}, {"count", ks.count}});
  spec["kinds"] = kinds;
  manifest["spec"] = spec;

  json files = json::array();
  for (size_t i = 0; i < dataset.clips.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "clips/clip_%03zu.bin", i);
    save_clip_binary(dataset.clips[i], (fs::path(dir) / name).string());
    files.push_back(name);
  }
  manifest["clips"] = files;

  std::ofstream out(fs::path(dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

MotionDataset load_dataset(const std::string& dir, const RobotModel& model) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw ConfigError("load_dataset: missing manifest in " + dir);
  json manifest = json::parse(in);

  MotionDataset ds;
  ds.seed = manifest.at("seed").get<uint64_t>();
  ds.k = manifest.at("k").get<int>();
  ds.cluster_assignments = manifest.at("assignments").get<std::vector<int>>();
  const json& spec = manifest.at("spec");
  ds.spec.k = spec.at("k").get<int>();
  ds.spec.fps = spec.at("fps").get<double>();
  ds.spec.min_duration = spec.at("min_duration").get<double>();
  ds.spec.max_duration = spec.at("max_duration").get<double>();
  for (const auto& ks : spec.at("kinds"))
    ds.spec.kinds.push_back({ks.at("kind").get<std::string>(), ks.at("count").get<int>()});

  for (const auto& f : manifest.at("clips"))
    ds.clips.push_back(load_clip_binary((fs::path(dir) / f.get<std::string>()).string()));

  const int n = static_cast<int>(ds.clips.size());
  if (n > 0) {
    Eigen::MatrixXd raw(feature_embedding(ds.clips[0], model).size(), n);
    for (int i = 0; i < n; ++i) raw.col(i) = feature_embedding(ds.clips[i], model);
    Eigen::VectorXd mu = raw.rowwise().mean();
    Eigen::VectorXd sd = ((raw.colwise() - mu).cwiseAbs2().rowwise().mean()).cwiseSqrt();
    for (int d = 0; d < raw.rows(); ++d)
      raw.row(d) = (raw.row(d).array() - mu(d)) / (sd(d) > 1e-12 ? sd(d) : 1.0);
    ds.embeddings = raw;
  }
  ds.validate();
  return ds;
}

void clip_to_csv(const MotionClip& clip, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("clip_to_csv: cannot open " + path);
  const int nj = static_cast<int>(clip.frames[0].q_ref.size());
  out << "t";
  for (int j = 0; j < nj; ++j) out << ",q" << j;
  for (int j = 0; j < nj; ++j) out << ",qd" << j;
  out << ",base_height,base_vx,base_vz,foot0,foot1\n";
  for (int i = 0; i < clip.num_frames(); ++i) {
    const MotionFrame& fr = clip.frames[i];
    out << i / clip.fps;
    for (int j = 0; j < nj; ++j) out << "," << fr.q_ref(j);
    for (int j = 0; j < nj; ++j) out << "," << fr.qdot_ref(j);
    out << "," << fr.base_height_ref << "," << fr.base_vel_ref.x() << ","
        << fr.base_vel_ref.y();
    for (double h : fr.feet_height_ref) out << "," << h;
    out << "\n";
  }
}

}  // namespace ptrack
