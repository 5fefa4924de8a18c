#pragma once

#include <map>
#include <string>
#include <vector>

#include "barrierkit/config.hpp"

namespace barrierkit {

/// Built-in example system with sensible default search/classification boxes.
struct Fixture {
  std::string name;
  std::string config_toml;
  Vec bbox_lo, bbox_hi;  // face-search box
  Vec grid_lo, grid_hi;  // default classification window
};

const std::vector<std::string>& fixture_names();
const Fixture& fixture(const std::string& name);

/// Compile a built-in fixture, optionally overriding parameters ([parameters]
/// keys only; unknown names are an error).
CompiledSystem load_fixture(const std::string& name,
                            const std::map<std::string, double>& overrides = {});

}  // namespace barrierkit
