#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ptrack/netcore.hpp"

namespace ptrack {

struct NamedParam {
  std::string name;
  Param* param;
};

struct CheckpointMeta {
  std::string kind;
  long step = 0;
  nlohmann::json hyper;
  std::string config_hash;
};

// File layout: magic, version, header length, JSON header (names/shapes/
// hyper/step), then a contiguous little-endian f32 payload holding value, m,
// v for each tensor in header order (column-major).
void save_checkpoint(const std::string& path, const std::string& kind,
                     const std::vector<NamedParam>& params, long step,
                     const nlohmann::json& hyper = {},
                     const std::string& config_hash = "");

// Loads into the given parameter registry; names and shapes must match the
// header exactly (errors name the offending tensor).
CheckpointMeta load_checkpoint(const std::string& path,
                               const std::vector<NamedParam>& params);

CheckpointMeta peek_checkpoint(const std::string& path);

}  // namespace ptrack
