#include "barrierkit/fixtures.hpp"

#include "barrierkit/errors.hpp"

namespace barrierkit {

namespace {

const char* kLinearSpring = R"toml(
[system]
name = "linear_spring"
n = 2
m = 1

[dynamics]
f = ["x2", "-(k/m)*x1 - (b/m)*x2 + u1/m"]

[constraints]
g = ["x1 - xbar1"]

[control]
kind = "ball"

[parameters]
m = 1.0
k = 2.0
b = 2.0
xbar1 = 1.0
)toml";

const char* kNonlinearSpring = R"toml(
[system]
name = "nonlinear_spring"
n = 2
m = 1

[dynamics]
f = ["x2", "-(k/m)*(x1 + x1^3) - (b/m)*x2 + u1/m"]

[constraints]
g = ["x1 - xbar1"]

[control]
kind = "ball"

[parameters]
m = 1.0
k = 2.0
b = 2.0
xbar1 = 1.0
)toml";

const char* kNonlinearSpringSoft = R"toml(
[system]
name = "nonlinear_spring_soft"
n = 2
m = 1

[dynamics]
f = ["x2", "-(k/m)*(x1 + x1^3/200) - (b/m)*x2 + u1/m"]

[constraints]
g = ["x1 - xbar1"]

[control]
kind = "ball"

[parameters]
m = 1.0
k = 2.0
b = 2.0
xbar1 = 1.0
)toml";

const char* kAcademic = R"toml(
[system]
name = "academic"
n = 2
m = 1

[dynamics]
f = ["1 - x2^2", "u1"]

[constraints]
g = ["a_lower - x1", "x1 - a_upper"]

[control]
kind = "ball"

[parameters]
a_lower = -1.0
a_upper = 3.0
)toml";

const char* kAcademicDisconnected = R"toml(
[system]
name = "academic_disconnected"
n = 2
m = 1

[dynamics]
f = ["1 - x2^2", "u1"]

[constraints]
g = ["a_lower - x1", "x1 - a_upper"]

[control]
kind = "ball"

[parameters]
a_lower = 2.5
a_upper = 3.0
)toml";

std::vector<Fixture> build_fixtures() {
  std::vector<Fixture> fx;
  fx.push_back({"linear_spring", kLinearSpring, {-4.0, -4.0}, {1.0, 4.0}, {-4.0, -4.0}, {1.0, 4.0}});
  fx.push_back({"nonlinear_spring", kNonlinearSpring, {-4.0, -4.0}, {1.0, 4.0},
                {-4.0, -4.0}, {1.0, 4.0}});
  fx.push_back({"nonlinear_spring_soft", kNonlinearSpringSoft, {-4.0, -4.0}, {1.0, 4.0},
                {-4.0, -4.0}, {1.0, 4.0}});
  fx.push_back({"academic", kAcademic, {-1.0, -4.0}, {3.0, 4.0}, {-1.0, -3.0}, {3.0, 3.0}});
  fx.push_back({"academic_disconnected", kAcademicDisconnected, {2.5, -4.0}, {3.0, 4.0},
                {2.5, -3.0}, {3.0, 3.0}});
  return fx;
}

const std::vector<Fixture>& all_fixtures() {
  static const std::vector<Fixture> fx = build_fixtures();
  return fx;
}

}  // namespace

const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> ns;
    for (const Fixture& f : all_fixtures()) ns.push_back(f.name);
    return ns;
  }();
  return names;
}

const Fixture& fixture(const std::string& name) {
  for (const Fixture& f : all_fixtures())
    if (f.name == name) return f;
  std::string known;
  for (const auto& n : fixture_names()) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw ArgumentError("unknown fixture '" + name + "' (available: " + known + ")");
}

CompiledSystem load_fixture(const std::string& name,
                            const std::map<std::string, double>& overrides) {
  const Fixture& fx = fixture(name);
  SystemConfig cfg = parse_system_config(fx.config_toml);
  for (const auto& [key, value] : overrides) {
    auto it = cfg.parameters.find(key);
    if (it == cfg.parameters.end())
      throw ArgumentError("fixture '" + name + "' has no parameter '" + key + "'");
    it->second = value;
  }
  // Re-render the parameter block into the stored source so the config hash
  // reflects overrides.
  std::string source = fx.config_toml;
  if (!overrides.empty()) {
    source += "\n# overrides\n";
    for (const auto& [key, value] : overrides)
      source += key + " = " + std::to_string(value) + "\n";
  }
  return compile_system(cfg, source);
}

}  // namespace barrierkit
