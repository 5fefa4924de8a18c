#include "barrierkit/config.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "barrierkit/errors.hpp"
#include "barrierkit/expr.hpp"

namespace barrierkit {

namespace {

// ---------------------------------------------------------------------------
// Minimal TOML subset: [tables], key = value, strings, numbers, booleans,
// (multi-line) arrays, # comments. Covers the config schema; nothing more.
// ---------------------------------------------------------------------------

struct TomlValue {
  enum class Kind { Str, Num, Bool, Arr };
  Kind kind = Kind::Num;
  std::string s;
  double num = 0.0;
  bool b = false;
  std::vector<TomlValue> arr;
};

using TomlDoc = std::map<std::string, TomlValue>;  // "table.key" -> value

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

TomlValue parse_scalar(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  TomlValue v;
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') {
    v.kind = TomlValue::Kind::Str;
    v.s = t.substr(1, t.size() - 2);
    return v;
  }
  if (t == "true" || t == "false") {
    v.kind = TomlValue::Kind::Bool;
    v.b = t == "true";
    return v;
  }
  try {
    std::size_t used = 0;
    v.num = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    v.kind = TomlValue::Kind::Num;
    return v;
  } catch (const std::exception&) {
    throw SchemaError("cannot parse value '" + t + "'", where);
  }
}

std::vector<std::string> split_top_level(const std::string& body) {
  std::vector<std::string> parts;
  std::string cur;
  bool in_str = false;
  for (char c : body) {
    if (c == '"') in_str = !in_str;
    if (c == ',' && !in_str) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) parts.push_back(cur);
  return parts;
}

TomlValue parse_value(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') throw SchemaError("unterminated array", where);
    TomlValue v;
    v.kind = TomlValue::Kind::Arr;
    for (const std::string& part : split_top_level(t.substr(1, t.size() - 2)))
      v.arr.push_back(parse_scalar(part, where));
    return v;
  }
  return parse_scalar(t, where);
}

TomlDoc parse_toml(const std::string& text) {
  TomlDoc doc;
  std::istringstream in(text);
  std::string line, table;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw SchemaError("malformed table header at line " + std::to_string(lineno), line);
      table = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw SchemaError("expected 'key = value' at line " + std::to_string(lineno), line);
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    // Multi-line arrays: keep reading until brackets balance.
    auto balance = [](const std::string& s) {
      int depth = 0;
      bool in_str = false;
      for (char c : s) {
        if (c == '"') in_str = !in_str;
        if (in_str) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
      }
      return depth;
    };
    while (balance(value) > 0 && std::getline(in, line)) {
      ++lineno;
      value += " " + trim(strip_comment(line));
    }
    const std::string path = table.empty() ? key : table + "." + key;
    doc[path] = parse_value(value, path);
  }
  return doc;
}

TomlDoc from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("JSON parse failure: ") + e.what(), "<document>");
  }
  TomlDoc doc;
  if (!j.is_object()) throw SchemaError("top-level JSON value must be an object", "<document>");
  for (const auto& [table, section] : j.items()) {
    if (!section.is_object())
      throw SchemaError("section must be an object", table);
    for (const auto& [key, val] : section.items()) {
      const std::string path = table + "." + key;
      TomlValue v;
      if (val.is_string()) {
        v.kind = TomlValue::Kind::Str;
        v.s = val.get<std::string>();
      } else if (val.is_number()) {
        v.kind = TomlValue::Kind::Num;
        v.num = val.get<double>();
      } else if (val.is_boolean()) {
        v.kind = TomlValue::Kind::Bool;
        v.b = val.get<bool>();
      } else if (val.is_array()) {
        v.kind = TomlValue::Kind::Arr;
        for (const auto& el : val) {
          TomlValue e;
          if (el.is_string()) {
            e.kind = TomlValue::Kind::Str;
            e.s = el.get<std::string>();
          } else if (el.is_number()) {
            e.kind = TomlValue::Kind::Num;
            e.num = el.get<double>();
          } else {
            throw SchemaError("array elements must be strings or numbers", path);
          }
          v.arr.push_back(e);
        }
      } else {
        throw SchemaError("unsupported value type", path);
      }
      doc[path] = v;
    }
  }
  return doc;
}

const TomlValue& require(const TomlDoc& doc, const std::string& path) {
  auto it = doc.find(path);
  if (it == doc.end()) throw SchemaError("missing required key", path);
  return it->second;
}

std::size_t require_count(const TomlDoc& doc, const std::string& path) {
  const TomlValue& v = require(doc, path);
  if (v.kind != TomlValue::Kind::Num || v.num < 1 || v.num != std::floor(v.num))
    throw SchemaError("expected a positive integer", path);
  return static_cast<std::size_t>(v.num);
}

std::vector<std::string> require_string_array(const TomlDoc& doc, const std::string& path) {
  const TomlValue& v = require(doc, path);
  if (v.kind != TomlValue::Kind::Arr) throw SchemaError("expected an array of strings", path);
  std::vector<std::string> out;
  for (const TomlValue& e : v.arr) {
    if (e.kind != TomlValue::Kind::Str) throw SchemaError("expected an array of strings", path);
    out.push_back(e.s);
  }
  return out;
}

Vec number_array(const TomlValue& v, const std::string& path) {
  if (v.kind != TomlValue::Kind::Arr) throw SchemaError("expected an array of numbers", path);
  Vec out;
  for (const TomlValue& e : v.arr) {
    if (e.kind != TomlValue::Kind::Num) throw SchemaError("expected an array of numbers", path);
    out.push_back(e.num);
  }
  return out;
}

}  // namespace

SystemConfig parse_system_config(const std::string& text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  const bool looks_json = i < text.size() && text[i] == '{';
  const TomlDoc doc = looks_json ? from_json(text) : parse_toml(text);

  SystemConfig cfg;
  if (auto it = doc.find("system.name"); it != doc.end() && it->second.kind == TomlValue::Kind::Str)
    cfg.name = it->second.s;
  cfg.n = require_count(doc, "system.n");
  cfg.m = require_count(doc, "system.m");
  cfg.dynamics_exprs = require_string_array(doc, "dynamics.f");
  cfg.constraint_exprs = require_string_array(doc, "constraints.g");
  if (cfg.dynamics_exprs.size() != cfg.n)
    throw SchemaError("expected " + std::to_string(cfg.n) + " dynamics expressions, got " +
                          std::to_string(cfg.dynamics_exprs.size()),
                      "dynamics.f");
  cfg.p = cfg.constraint_exprs.size();
  if (auto it = doc.find("system.p"); it != doc.end()) {
    const std::size_t declared = require_count(doc, "system.p");
    if (declared != cfg.p)
      throw SchemaError("declared p=" + std::to_string(declared) + " but " +
                            std::to_string(cfg.p) + " constraint expressions given",
                        "constraints.g");
  }
  if (cfg.p == 0) throw SchemaError("at least one constraint is required", "constraints.g");

  const TomlValue& kind = require(doc, "control.kind");
  if (kind.kind != TomlValue::Kind::Str || (kind.s != "ball" && kind.s != "box"))
    throw SchemaError("control kind must be \"ball\" or \"box\"", "control.kind");
  cfg.control.kind = kind.s;
  if (kind.s == "box") {
    cfg.control.lower = number_array(require(doc, "control.lower"), "control.lower");
    cfg.control.upper = number_array(require(doc, "control.upper"), "control.upper");
    if (cfg.control.lower.size() != cfg.m || cfg.control.upper.size() != cfg.m)
      throw SchemaError("box bounds must have length m=" + std::to_string(cfg.m),
                        "control.lower");
  }
  if (auto it = doc.find("control.sample_count"); it != doc.end())
    cfg.control.sample_count = static_cast<int>(require_count(doc, "control.sample_count"));

  for (const auto& [path, val] : doc) {
    if (path.rfind("parameters.", 0) != 0) continue;
    if (val.kind != TomlValue::Kind::Num)
      throw SchemaError("parameters must be scalars", path);
    cfg.parameters[path.substr(std::string("parameters.").size())] = val.num;
  }
  return cfg;
}

CompiledSystem compile_system(const SystemConfig& cfg, std::string source_text) {
  using expr::CompiledExpr;
  using expr::NodePtr;

  std::map<std::string, int> state_slots;   // x1..xn -> 0..n-1
  std::map<std::string, int> full_slots;    // + u1..um -> n..n+m-1
  std::set<std::string> state_symbols, full_symbols;
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const std::string nm = "x" + std::to_string(i + 1);
    state_slots[nm] = static_cast<int>(i);
    full_slots[nm] = static_cast<int>(i);
    state_symbols.insert(nm);
    full_symbols.insert(nm);
  }
  for (std::size_t j = 0; j < cfg.m; ++j) {
    const std::string nm = "u" + std::to_string(j + 1);
    full_slots[nm] = static_cast<int>(cfg.n + j);
    full_symbols.insert(nm);
  }
  for (const auto& [nm, _] : cfg.parameters) {
    state_symbols.insert(nm);
    full_symbols.insert(nm);
  }

  struct Compiled {
    std::vector<CompiledExpr> dynamics;     // n tapes over [x;u]
    std::vector<CompiledExpr> constraints;  // p tapes over [x] (u slots unused)
    std::size_t n, m;
  };
  auto prog = std::make_shared<Compiled>();
  prog->n = cfg.n;
  prog->m = cfg.m;

  for (std::size_t i = 0; i < cfg.n; ++i) {
    NodePtr ast = expr::parse_expression(cfg.dynamics_exprs[i]);
    expr::validate(ast, full_symbols, /*allow_abs=*/false);
    prog->dynamics.push_back(CompiledExpr::compile(ast, full_slots, cfg.parameters));
  }
  for (std::size_t i = 0; i < cfg.p; ++i) {
    NodePtr ast = expr::parse_expression(cfg.constraint_exprs[i]);
    expr::validate(ast, state_symbols, /*allow_abs=*/false);
    prog->constraints.push_back(CompiledExpr::compile(ast, state_slots, cfg.parameters));
  }

  const std::size_t n = cfg.n, m = cfg.m;

  CompiledSystem sys;
  sys.config = cfg;
  sys.source_text = std::move(source_text);
  sys.model.n = n;
  sys.model.m = m;
  sys.model.dynamics = [prog, n, m](const Vec& x, const Vec& u) {
    Vec env(n + m);
    std::copy(x.begin(), x.end(), env.begin());
    std::copy(u.begin(), u.end(), env.begin() + n);
    Vec f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = prog->dynamics[i].eval(env.data());
    return f;
  };
  sys.model.jacobian_x = [prog, n, m](const Vec& x, const Vec& u) {
    Vec env(n + m);
    std::copy(x.begin(), x.end(), env.begin());
    std::copy(u.begin(), u.end(), env.begin() + n);
    Mat J(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        J(i, j) = prog->dynamics[i].eval_dual(env.data(), static_cast<int>(j)).deriv;
    return J;
  };
  if (n + m <= 64) {
    sys.model.dynamics_into = [prog, n, m](const double* x, const double* u, double* out) {
      double env[64];
      for (std::size_t i = 0; i < n; ++i) env[i] = x[i];
      for (std::size_t j = 0; j < m; ++j) env[n + j] = u[j];
      for (std::size_t i = 0; i < n; ++i) out[i] = prog->dynamics[i].eval(env);
    };
  }

  sys.constraints.p = cfg.p;
  sys.constraints.g = [prog](const Vec& x) {
    Vec gv(prog->constraints.size());
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] = prog->constraints[i].eval(x.data());
    return gv;
  };
  sys.constraints.gradient = [prog, n](std::size_t i, const Vec& x) {
    if (i >= prog->constraints.size())
      throw ArgumentError("constraint gradient index out of range");
    Vec grad(n);
    for (std::size_t j = 0; j < n; ++j)
      grad[j] = prog->constraints[i].eval_dual(x.data(), static_cast<int>(j)).deriv;
    return grad;
  };
  sys.constraints.g_into = [prog](const double* x, double* out) {
    for (std::size_t i = 0; i < prog->constraints.size(); ++i)
      out[i] = prog->constraints[i].eval(x);
  };

  if (cfg.control.kind == "ball") {
    sys.control = ControlSet::unit_ball(m, cfg.control.sample_count);
  } else {
    sys.control = ControlSet::box(cfg.control.lower, cfg.control.upper, cfg.control.sample_count);
  }

  // Affine-in-u detection: df/du_j must not depend on u. Checked by dual
  // seeding on control slots at 20 sampled states and 2 control draws each.
  std::mt19937_64 rng(0x5eedULL);
  auto unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  bool affine = true;
  for (int trial = 0; trial < 20 && affine; ++trial) {
    Vec env(n + m);
    for (std::size_t i = 0; i < n; ++i) env[i] = -2.0 + 4.0 * unit();
    Vec ua(m), ub(m);
    for (std::size_t j = 0; j < m; ++j) {
      ua[j] = -1.0 + 2.0 * unit();
      ub[j] = -1.0 + 2.0 * unit();
    }
    for (std::size_t i = 0; i < n && affine; ++i) {
      for (std::size_t j = 0; j < m && affine; ++j) {
        std::copy(ua.begin(), ua.end(), env.begin() + n);
        const double da = prog->dynamics[i].eval_dual(env.data(), static_cast<int>(n + j)).deriv;
        std::copy(ub.begin(), ub.end(), env.begin() + n);
        const double db = prog->dynamics[i].eval_dual(env.data(), static_cast<int>(n + j)).deriv;
        if (std::fabs(da - db) > 1e-10 * (1.0 + std::fabs(da))) affine = false;
      }
    }
  }
  if (affine) {
    AffineDecomposition dec;
    dec.drift = [prog, n, m](const Vec& x) {
      Vec env(n + m, 0.0);
      std::copy(x.begin(), x.end(), env.begin());
      Vec f0(n);
      for (std::size_t i = 0; i < n; ++i) f0[i] = prog->dynamics[i].eval(env.data());
      return f0;
    };
    dec.input_matrix = [prog, n, m](const Vec& x) {
      Vec env(n + m, 0.0);
      std::copy(x.begin(), x.end(), env.begin());
      Mat B(n, m);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j)
          B(i, j) = prog->dynamics[i].eval_dual(env.data(), static_cast<int>(n + j)).deriv;
      return B;
    };
    sys.model.affine = std::move(dec);
  }
  return sys;
}

CompiledSystem load_system_config(const std::string& path_or_text) {
  namespace fs = std::filesystem;
  std::string text;
  if (fs::exists(fs::path(path_or_text)) && fs::is_regular_file(fs::path(path_or_text))) {
    std::ifstream in(path_or_text);
    if (!in) throw ArgumentError("cannot open config file: " + path_or_text);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  } else if (path_or_text.find('\n') != std::string::npos ||
             path_or_text.find('=') != std::string::npos ||
             (!path_or_text.empty() && path_or_text.front() == '{')) {
    text = path_or_text;
  } else {
    throw ArgumentError("no such config file: " + path_or_text);
  }
  return compile_system(parse_system_config(text), text);
}

}  // namespace barrierkit
