#pragma once

#include <string>

#include <json.hpp>

namespace choquard {

/// Outcome of a single numerical check.
struct CertResult {
  std::string name;
  bool pass = false;
  bool applicable = true;
  double value = 0.0;
  std::string detail;
  nlohmann::json data = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j = data;
    j["name"] = name;
    j["pass"] = pass;
    j["applicable"] = applicable;
    j["value"] = value;
    j["detail"] = detail;
    return j;
  }
};

}  // namespace choquard
