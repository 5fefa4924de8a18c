#pragma once

#include <map>
#include <string>
#include <vector>

#include "barrierkit/model.hpp"

namespace barrierkit {

/// Parsed but not yet compiled system definition. The document format is a
/// TOML subset with tables [system], [dynamics], [constraints], [control],
/// [parameters]; a JSON document with the same shape is accepted too.
struct SystemConfig {
  std::string name;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t p = 0;
  std::vector<std::string> dynamics_exprs;    // n entries
  std::vector<std::string> constraint_exprs;  // p entries
  struct ControlSpec {
    std::string kind = "ball";  // "ball" | "box"
    Vec lower, upper;
    int sample_count = 0;
  } control;
  std::map<std::string, double> parameters;
};

/// Fully compiled system: expression-backed model with exact dual-number
/// Jacobians and constraint gradients.
struct CompiledSystem {
  SystemModel model;
  ConstraintSet constraints;
  ControlSet control;
  SystemConfig config;
  std::string source_text;  // original document, for hashing/manifests
};

/// Parse a config document (TOML subset or JSON, auto-detected).
SystemConfig parse_system_config(const std::string& text);

/// Compile expressions, wire up closures, and auto-detect an affine-in-u
/// decomposition (dual seeding on the control slots at 20 sample states,
/// tolerance 1e-10).
CompiledSystem compile_system(const SystemConfig& cfg, std::string source_text = {});

/// Load from a file path, or directly from document text when the argument
/// does not name an existing file.
CompiledSystem load_system_config(const std::string& path_or_text);

}  // namespace barrierkit
