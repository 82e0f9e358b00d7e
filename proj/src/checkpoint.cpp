#include "ptrack/checkpoint.hpp"

#include <fstream>

namespace ptrack {

using nlohmann::json;

namespace {

constexpr uint32_t kMagic = 0x70636b70;  // "pckp"
constexpr uint32_t kVersion = 1;

void write_matrix_f32(std::ofstream& out, const Eigen::MatrixXd& m) {
  std::vector<float> buf(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i)
    buf[i] = static_cast<float>(m.data()[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void read_matrix_f32(std::ifstream& in, Eigen::MatrixXd& m, const std::string& name) {
  std::vector<float> buf(m.size());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw CheckpointError("checkpoint: truncated payload at tensor '" + name + "'");
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = static_cast<double>(buf[i]);
}

json read_header(std::ifstream& in, const std::string& path) {
  uint32_t magic = 0, version = 0, hlen = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || magic != kMagic)
    throw CheckpointError("checkpoint: bad magic in " + path);
  if (version != kVersion)
    throw CheckpointError("checkpoint: unsupported version in " + path);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (!in) throw CheckpointError("checkpoint: truncated header in " + path);
  try {
    return json::parse(hs);
  } catch (const json::exception& e) {
    throw CheckpointError("checkpoint: corrupt header in " + path + ": " + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& kind,
                     const std::vector<NamedParam>& params, long step,
                     const json& hyper, const std::string& config_hash) {
  json header;
  header["kind"] = kind;
  header["step"] = step;
  header["hyper"] = hyper;
  header["config_hash"] = config_hash;
  header["dtype"] = "f32le";
  header["layout"] = "col_major";
  json tensors = json::array();
  for (const NamedParam& np : params)
    tensors.push_back({{"name", np.name},
                       {"rows", np.param->value.rows()},
                       {"cols", np.param->value.cols()}});
  header["tensors"] = tensors;
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path + " for writing");
  const uint32_t magic = kMagic, version = kVersion,
                 hlen = static_cast<uint32_t>(hs.size());
  out.write(reinterpret_cast<const char*>(&magic), sizeof(magic));
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const NamedParam& np : params) {
    write_matrix_f32(out, np.param->value);
    write_matrix_f32(out, np.param->m);
    write_matrix_f32(out, np.param->v);
  }
  if (!out) throw CheckpointError("checkpoint: write failed for " + path);
}

CheckpointMeta load_checkpoint(const std::string& path,
                               const std::vector<NamedParam>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  const json header = read_header(in, path);

  const json& tensors = header.at("tensors");
  if (tensors.size() != params.size())
    throw CheckpointError("checkpoint: " + path + " holds " +
                          std::to_string(tensors.size()) + " tensors, expected " +
                          std::to_string(params.size()));
  for (size_t i = 0; i < params.size(); ++i) {
    const json& t = tensors[i];
    const std::string name = t.at("name").get<std::string>();
    if (name != params[i].name)
      throw CheckpointError("checkpoint: tensor '" + name + "' where '" +
                            params[i].name + "' was expected");
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    Param* p = params[i].param;
    if (rows != p->value.rows() || cols != p->value.cols())
      throw CheckpointError("checkpoint: tensor '" + name + "' has shape " +
                            std::to_string(rows) + "x" + std::to_string(cols) +
                            ", expected " + std::to_string(p->value.rows()) + "x" +
                            std::to_string(p->value.cols()));
    read_matrix_f32(in, p->value, name);
    read_matrix_f32(in, p->m, name);
    read_matrix_f32(in, p->v, name);
    p->grad.setZero();
  }

  CheckpointMeta meta;
  meta.kind = header.at("kind").get<std::string>();
  meta.step = header.at("step").get<long>();
  meta.hyper = header.value("hyper", json::object());
  meta.config_hash = header.value("config_hash", "");
  return meta;
}

CheckpointMeta peek_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  const json header = read_header(in, path);
  CheckpointMeta meta;
  meta.kind = header.at("kind").get<std::string>();
  meta.step = header.at("step").get<long>();
  meta.hyper = header.value("hyper", json::object());
  meta.config_hash = header.value("config_hash", "");
  return meta;
}

}  // namespace ptrack
