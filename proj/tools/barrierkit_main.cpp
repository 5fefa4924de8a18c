// barrierkit: admissible-set boundary computation for input-constrained
// nonlinear systems. Subcommands: tangency, barrier, classify, verify.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include "barrierkit/config.hpp"
#include "barrierkit/fixtures.hpp"
#include "barrierkit/io.hpp"
#include "barrierkit/oracle.hpp"
#include "barrierkit/parallel.hpp"

namespace fs = std::filesystem;
using namespace barrierkit;

namespace {

// Exit codes shared by all subcommands (scripts branch on these).
constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;
constexpr int kEmpty = 3;
constexpr int kPartial = 4;
constexpr int kVerifyFailed = 5;

struct CommonArgs {
  std::string fixture_name;
  std::string config_path;
  std::vector<std::string> params;  // name=value overrides (fixtures only)
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::string bbox;    // lo:hi pairs, 2n values
  std::string scheme = "rk4";
  double step = 1e-3;
  bool step_given = false;
  std::vector<std::string> formats;  // default: all
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  auto* fx = cmd->add_option("--fixture", args.fixture_name,
                             "built-in fixture name (see --list-fixtures)");
  auto* cf = cmd->add_option("--config", args.config_path, "system config file (TOML or JSON)");
  fx->excludes(cf);
  cmd->add_option("--param", args.params, "fixture parameter override name=value")
      ->type_name("NAME=VALUE");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "random seed for sampled controls");
  cmd->add_option("--bbox", args.bbox, "state box lo:hi per axis, e.g. -1:3:-4:4");
  cmd->add_option("--scheme", args.scheme, "integration scheme: rk4 | rkf45")
      ->check(CLI::IsMember({"rk4", "rkf45"}));
  cmd->add_option_function<double>(
         "--step",
         [&args](double v) {
           args.step = v;
           args.step_given = true;
         },
         "integration step (rk4) / initial step (rkf45)");
  cmd->add_option("--format", args.formats,
                  "output formats (csv, json, gnuplot, svg); default all")
      ->delimiter(',');
}

struct LoadedSystem {
  CompiledSystem sys;
  Vec bbox_lo, bbox_hi;
  Vec grid_lo, grid_hi;
  bool has_bbox = false;
};

std::map<std::string, double> parse_param_overrides(const std::vector<std::string>& params) {
  std::map<std::string, double> overrides;
  for (const std::string& kv : params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("--param expects NAME=VALUE, got '" + kv + "'");
    overrides[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  return overrides;
}

LoadedSystem load_system(const CommonArgs& args) {
  LoadedSystem ls;
  if (!args.fixture_name.empty()) {
    ls.sys = load_fixture(args.fixture_name, parse_param_overrides(args.params));
    const Fixture& fx = fixture(args.fixture_name);
    ls.bbox_lo = fx.bbox_lo;
    ls.bbox_hi = fx.bbox_hi;
    ls.grid_lo = fx.grid_lo;
    ls.grid_hi = fx.grid_hi;
    ls.has_bbox = true;
  } else if (!args.config_path.empty()) {
    if (!args.params.empty())
      throw ArgumentError("--param overrides apply to fixtures only; edit the config instead");
    ls.sys = load_system_config(args.config_path);
  } else {
    throw ArgumentError("one of --fixture or --config is required");
  }
  if (!args.bbox.empty()) {
    std::vector<double> vals;
    std::string tok;
    for (char c : args.bbox + ":") {
      if (c == ':') {
        if (!tok.empty()) vals.push_back(std::stod(tok));
        tok.clear();
      } else {
        tok += c;
      }
    }
    if (vals.size() != 2 * ls.sys.model.n)
      throw ArgumentError("--bbox needs " + std::to_string(2 * ls.sys.model.n) +
                          " values lo:hi per axis");
    ls.bbox_lo.clear();
    ls.bbox_hi.clear();
    for (std::size_t i = 0; i < ls.sys.model.n; ++i) {
      ls.bbox_lo.push_back(vals[2 * i]);
      ls.bbox_hi.push_back(vals[2 * i + 1]);
    }
    ls.grid_lo = ls.bbox_lo;
    ls.grid_hi = ls.bbox_hi;
    ls.has_bbox = true;
  }
  if (!ls.has_bbox)
    throw ArgumentError("--bbox is required when loading a config file (fixtures have defaults)");
  return ls;
}

IntegratorOptions integrator_options(const CommonArgs& args) {
  IntegratorOptions opts;
  opts.scheme = args.scheme == "rkf45" ? IntegratorOptions::Scheme::RKF45
                                       : IntegratorOptions::Scheme::RK4;
  opts.step = args.step;
  return opts;
}

bool wants(const CommonArgs& args, const std::string& format) {
  if (args.formats.empty()) return true;
  for (const std::string& f : args.formats)
    if (f == format) return true;
  return false;
}

io::RunManifest make_manifest(const std::string& command, const CommonArgs& args,
                              const LoadedSystem& ls,
                              std::map<std::string, std::string> extra = {}) {
  io::RunManifest mf;
  mf.command = command;
  mf.config_hash = io::fnv1a_hex(ls.sys.source_text);
  mf.seed = args.seed;
  mf.options["fixture"] = args.fixture_name;
  mf.options["config"] = args.config_path;
  mf.options["scheme"] = args.scheme;
  mf.options["step"] = io::fmt(args.step);
  mf.options["seed"] = std::to_string(args.seed);
  for (std::size_t i = 0; i < ls.bbox_lo.size(); ++i) {
    mf.options["bbox_lo_" + std::to_string(i + 1)] = io::fmt(ls.bbox_lo[i]);
    mf.options["bbox_hi_" + std::to_string(i + 1)] = io::fmt(ls.bbox_hi[i]);
  }
  for (auto& [k, v] : extra) mf.options[k] = std::move(v);
  return mf;
}

std::vector<std::size_t> faces_to_scan(const LoadedSystem& ls, int face_flag) {
  std::vector<std::size_t> faces;
  if (face_flag > 0) {
    if (static_cast<std::size_t>(face_flag) > ls.sys.constraints.p)
      throw ArgumentError("--face out of range (1.." + std::to_string(ls.sys.constraints.p) + ")");
    faces.push_back(static_cast<std::size_t>(face_flag) - 1);
  } else {
    for (std::size_t i = 0; i < ls.sys.constraints.p; ++i) faces.push_back(i);
  }
  return faces;
}

std::vector<TangencyPoint> scan_faces(const LoadedSystem& ls,
                                      const std::vector<std::size_t>& faces, int grid) {
  FaceSearchOptions fopts;
  fopts.lo = ls.bbox_lo;
  fopts.hi = ls.bbox_hi;
  if (grid > 0) fopts.grid = grid;
  std::vector<TangencyPoint> all;
  for (std::size_t face : faces) {
    auto pts = find_tangency_points(ls.sys.model, ls.sys.constraints, ls.sys.control, face, fopts);
    all.insert(all.end(), pts.begin(), pts.end());
  }
  return all;
}

// ---------------------------------------------------------------------------
// tangency
// ---------------------------------------------------------------------------

int run_tangency(const CommonArgs& args, int face_flag, int grid) {
  const LoadedSystem ls = load_system(args);
  const auto points = scan_faces(ls, faces_to_scan(ls, face_flag), grid);

  fs::create_directories(args.out_dir);
  io::write_json(fs::path(args.out_dir) / "tangency.json", io::tangency_json(points));
  io::write_manifest(args.out_dir, make_manifest("tangency", args, ls,
                                                 {{"face", std::to_string(face_flag)}}));

  std::cout << "tangency points: " << points.size() << "\n";
  for (const TangencyPoint& tp : points) {
    std::cout << "  z = (";
    for (std::size_t i = 0; i < tp.z.size(); ++i) std::cout << (i ? ", " : "") << io::fmt(tp.z[i]);
    std::cout << ")  face " << (tp.i_star + 1) << "  residual " << io::fmt(tp.residual) << "\n";
  }
  return points.empty() ? kEmpty : kOk;
}

// ---------------------------------------------------------------------------
// barrier
// ---------------------------------------------------------------------------

// Is p inside the region bounded by the reference barrier and faces?
// Nearest-boundary-normal membership, used for the spring containment summary.
bool inside_by_boundary(const SystemModel& sys, const ConstraintSet& cs,
                        const AdmissibleBoundary& boundary, const Vec& p) {
  const Vec gv = cs.g(p);
  for (double v : gv)
    if (v > cs.activation_tol) return false;
  double best_d = std::numeric_limits<double>::infinity();
  double side = -1.0;
  for (std::size_t a = 0; a < boundary.arcs.size(); ++a) {
    const BarrierArc& arc = boundary.arcs[a];
    const std::size_t limit =
        a < boundary.kept_nodes.size() ? boundary.kept_nodes[a] : arc.traj.size();
    for (std::size_t k = 0; k < std::min(limit, arc.traj.size()); ++k) {
      const Vec q = arc.state_at(k);
      const double d = dist(p, q);
      if (d < best_d) {
        best_d = d;
        Vec lam = arc.adjoint_at(k);
        const double nn = norm(lam);
        side = nn > 0 ? dot(lam, sub(p, q)) / nn : -1.0;
      }
    }
  }
  for (const UsableSegment& seg : boundary.usable_segments) {
    for (const Vec& q : seg.points) {
      const double d = dist(p, q);
      if (d < best_d) {
        best_d = d;
        Vec nrm = cs.gradient(seg.face, q);
        const double nn = norm(nrm);
        side = nn > 0 ? dot(nrm, sub(p, q)) / nn : -1.0;
      }
    }
  }
  return side <= 0.0;
}

int run_barrier(const CommonArgs& args, int face_flag, int grid, double t_max) {
  const LoadedSystem ls = load_system(args);
  const auto points = scan_faces(ls, faces_to_scan(ls, face_flag), grid);
  if (points.empty()) {
    std::cout << "no tangency points found; nothing to integrate\n";
    return kEmpty;
  }

  BarrierOptions bopts;
  bopts.ode = integrator_options(args);
  bopts.t_max = t_max;
  std::vector<BarrierArc> arcs;
  for (const TangencyPoint& tp : points) {
    auto launched = integrate_barrier_arcs(ls.sys.model, ls.sys.constraints, ls.sys.control, tp,
                                           bopts);
    for (auto& arc : launched) arcs.push_back(std::move(arc));
  }

  BoundaryOptions bnd;
  bnd.lo = ls.bbox_lo;
  bnd.hi = ls.bbox_hi;
  AdmissibleBoundary boundary = assemble_boundary(ls.sys.model, ls.sys.constraints,
                                                  ls.sys.control, std::move(arcs), bnd);

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);
  if (wants(args, "csv"))
    for (std::size_t a = 0; a < boundary.arcs.size(); ++a)
      io::write_arc_csv(out / ("arc_" + std::to_string(a) + ".csv"), ls.sys.model,
                        boundary.arcs[a]);
  if (wants(args, "json")) io::write_boundary_json(out / "boundary.json", ls.sys.model, boundary);
  if (wants(args, "gnuplot"))
    io::write_boundary_gnuplot(out / "boundary.dat", ls.sys.model, boundary);
  if (wants(args, "svg"))
    io::write_boundary_svg(out / "boundary.svg", ls.sys.model, ls.sys.constraints, boundary,
                           ls.bbox_lo, ls.bbox_hi);
  io::write_manifest(args.out_dir,
                     make_manifest("barrier", args, ls, {{"t_max", io::fmt(t_max)}}));

  std::cout << "arcs: " << boundary.arcs.size() << "\n";
  bool drift = false;
  for (std::size_t a = 0; a < boundary.arcs.size(); ++a) {
    const BarrierArc& arc = boundary.arcs[a];
    const double res = hamiltonian_residual(ls.sys.model, arc);
    std::cout << "  arc " << a << ": endpoint (";
    for (std::size_t i = 0; i < arc.endpoint.z.size(); ++i)
      std::cout << (i ? ", " : "") << io::fmt(arc.endpoint.z[i]);
    std::cout << ")  nodes " << arc.traj.size() << "  termination "
              << to_string(arc.termination) << "  max|H| " << io::fmt(res) << "\n";
    if (arc.termination == ArcTermination::HamiltonianDrift) drift = true;
  }
  for (const Corner& c : boundary.corners) {
    std::cout << "  corner (";
    for (std::size_t i = 0; i < c.point.size(); ++i)
      std::cout << (i ? ", " : "") << io::fmt(c.point[i]);
    std::cout << ") between arcs " << c.arc_a << " and " << c.arc_b << "\n";
  }
  std::cout << "usable segments: " << boundary.usable_segments.size() << "\n";

  // Containment summary against the linear spring for its nonlinear variants.
  if (args.fixture_name == "nonlinear_spring" || args.fixture_name == "nonlinear_spring_soft") {
    CommonArgs ref_args = args;
    ref_args.fixture_name = "linear_spring";
    ref_args.params.clear();
    const LoadedSystem ref = load_system(ref_args);
    const auto ref_points = scan_faces(ref, faces_to_scan(ref, 0), grid);
    std::vector<BarrierArc> ref_arcs;
    for (const TangencyPoint& tp : ref_points) {
      auto launched = integrate_barrier_arcs(ref.sys.model, ref.sys.constraints, ref.sys.control,
                                             tp, bopts);
      for (auto& arc : launched) ref_arcs.push_back(std::move(arc));
    }
    BoundaryOptions ref_bnd;
    ref_bnd.lo = ref.bbox_lo;
    ref_bnd.hi = ref.bbox_hi;
    const AdmissibleBoundary ref_boundary = assemble_boundary(
        ref.sys.model, ref.sys.constraints, ref.sys.control, std::move(ref_arcs), ref_bnd);
    std::size_t total = 0, inside = 0;
    for (std::size_t a = 0; a < boundary.trimmed.size(); ++a) {
      const auto& poly = boundary.trimmed[a];
      for (std::size_t k = 0; k < poly.size(); k += std::max<std::size_t>(1, poly.size() / 200)) {
        ++total;
        if (inside_by_boundary(ref.sys.model, ref.sys.constraints, ref_boundary, poly[k]))
          ++inside;
      }
    }
    std::cout << "containment vs linear_spring: " << inside << "/" << total
              << " boundary samples inside the linear-spring admissible region\n";
  }
  return drift ? kPartial : kOk;
}

// ---------------------------------------------------------------------------
// classify
// ---------------------------------------------------------------------------

struct GridFlag {
  Vec lo, hi;
  std::vector<std::size_t> res;
};

GridFlag parse_grid(const std::string& spec, std::size_t n) {
  GridFlag g;
  std::string axis;
  std::vector<std::string> axes;
  for (char c : spec + ",") {
    if (c == ',') {
      if (!axis.empty()) axes.push_back(axis);
      axis.clear();
    } else {
      axis += c;
    }
  }
  if (axes.size() != n)
    throw ArgumentError("--grid needs " + std::to_string(n) + " axis specs lo:hi:count");
  for (const std::string& a : axes) {
    std::vector<std::string> parts;
    std::string tok;
    for (char c : a + ":") {
      if (c == ':') {
        parts.push_back(tok);
        tok.clear();
      } else {
        tok += c;
      }
    }
    if (parts.size() != 3) throw ArgumentError("--grid axis spec must be lo:hi:count, got " + a);
    g.lo.push_back(std::stod(parts[0]));
    g.hi.push_back(std::stod(parts[1]));
    g.res.push_back(static_cast<std::size_t>(std::stoul(parts[2])));
  }
  return g;
}

int run_classify(const CommonArgs& args, const std::string& point_csv,
                 const std::string& grid_spec, double horizon, int signals, bool ladder) {
  const LoadedSystem ls = load_system(args);
  ClassifyOptions copts;
  copts.T = horizon;
  copts.n_signals = signals;
  copts.seed = args.seed;
  if (args.step_given) copts.step = args.step;

  fs::create_directories(args.out_dir);
  const fs::path out(args.out_dir);

  if (!point_csv.empty()) {
    Vec x0;
    std::string tok;
    for (char c : point_csv + ",") {
      if (c == ',') {
        if (!tok.empty()) x0.push_back(std::stod(tok));
        tok.clear();
      } else {
        tok += c;
      }
    }
    if (x0.size() != ls.sys.model.n)
      throw ArgumentError("--point needs " + std::to_string(ls.sys.model.n) + " coordinates");
    for (std::size_t i = 0; i < x0.size(); ++i)
      if (x0[i] < ls.bbox_lo[i] || x0[i] > ls.bbox_hi[i]) {
        std::cerr << "warning: point lies outside the declared bbox; classifying anyway\n";
        break;
      }
    const AdmissibilityVerdict verdict =
        classify_admissible(ls.sys.model, ls.sys.constraints, ls.sys.control, x0, copts);
    const nlohmann::json j = io::verdict_json(verdict);
    io::write_json(out / "verdict.json", j);
    io::write_manifest(args.out_dir, make_manifest("classify", args, ls,
                                                   {{"point", point_csv},
                                                    {"horizon", io::fmt(horizon)},
                                                    {"signals", std::to_string(signals)}}));
    std::cout << j.dump(2) << "\n";
    return kOk;
  }

  GridFlag gf;
  if (!grid_spec.empty()) {
    gf = parse_grid(grid_spec, ls.sys.model.n);
  } else {
    gf.lo = ls.grid_lo;
    gf.hi = ls.grid_hi;
    gf.res.assign(ls.sys.model.n, 60);
  }
  GridSpec spec{gf.lo, gf.hi, gf.res};
  std::vector<double> horizons;
  if (ladder) {
    horizons = {5.0, 10.0, 20.0};
    if (horizon != 20.0) horizons.push_back(horizon);
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  } else {
    horizons = {horizon};
  }
  const GridResult grid =
      grid_classify(ls.sys.model, ls.sys.constraints, ls.sys.control, spec, copts, horizons);

  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const std::string tag = horizons.size() == 1
                                ? std::string()
                                : "_T" + std::to_string(static_cast<int>(horizons[h]));
    if (wants(args, "csv")) io::write_grid_csv(out / ("grid" + tag + ".csv"), grid, h);
    io::write_grid_pgm(out / ("grid" + tag + ".pgm"), grid, h);
    std::size_t adm = 0, inadm = 0, unk = 0;
    for (Admissibility a : grid.labels[h]) {
      if (a == Admissibility::Admissible) ++adm;
      else if (a == Admissibility::Inadmissible) ++inadm;
      else ++unk;
    }
    const std::size_t comps = count_components(grid, Admissibility::Admissible, h);
    std::cout << "T=" << horizons[h] << ": admissible " << adm << ", inadmissible " << inadm
              << ", unknown " << unk << ", admissible components " << comps;
    if (comps >= 2) std::cout << "  (admissible set is disconnected)";
    std::cout << "\n";
  }
  io::write_manifest(args.out_dir,
                     make_manifest("classify", args, ls,
                                   {{"grid", grid_spec},
                                    {"horizon", io::fmt(horizon)},
                                    {"ladder", ladder ? "true" : "false"},
                                    {"signals", std::to_string(signals)}}));
  return kOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

int run_verify(const CommonArgs& args, const std::string& boundary_path,
               const std::string& grid_spec, double horizon, int signals, double threshold) {
  const LoadedSystem ls = load_system(args);
  if (!fs::exists(boundary_path)) {
    std::cerr << "missing boundary artifact: " << boundary_path << "\n";
    return kUsage;
  }
  const AdmissibleBoundary boundary = io::load_boundary_json(boundary_path);
  if (boundary.arcs.empty()) {
    std::cerr << "boundary JSON contains no arcs\n";
    return kUsage;
  }

  SemiOptions sopts;
  sopts.T = horizon;
  sopts.n_signals = signals;
  sopts.seed = args.seed;
  const SemiReport report = semipermeability_report(ls.sys.model, ls.sys.constraints,
                                                    ls.sys.control, boundary, sopts);

  GridFlag gf;
  if (!grid_spec.empty()) {
    gf = parse_grid(grid_spec, ls.sys.model.n);
  } else {
    gf.lo = ls.grid_lo;
    gf.hi = ls.grid_hi;
    gf.res.assign(ls.sys.model.n, 40);
  }
  GridSpec spec{gf.lo, gf.hi, gf.res};
  ClassifyOptions copts;
  copts.T = horizon;
  copts.n_signals = signals;
  copts.seed = args.seed;
  if (args.step_given) copts.step = args.step;
  const GridResult grid =
      grid_classify(ls.sys.model, ls.sys.constraints, ls.sys.control, spec, copts);

  std::size_t agree = 0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const bool labelled_adm = grid.labels[0][c] == Admissibility::Admissible;
    const bool member =
        inside_by_boundary(ls.sys.model, ls.sys.constraints, boundary, grid.centers[c]);
    if (labelled_adm == member) ++agree;
  }
  const double agreement =
      grid.cell_count() == 0 ? 1.0 : static_cast<double>(agree) / grid.cell_count();

  nlohmann::json j;
  j["semipermeability"] = io::semi_report_json(report);
  j["grid_agreement"] = agreement;
  j["grid_cells"] = grid.cell_count();
  j["threshold"] = threshold;
  fs::create_directories(args.out_dir);
  io::write_json(fs::path(args.out_dir) / "verify_report.json", j);
  io::write_manifest(args.out_dir,
                     make_manifest("verify", args, ls,
                                   {{"boundary", boundary_path},
                                    {"horizon", io::fmt(horizon)},
                                    {"signals", std::to_string(signals)},
                                    {"threshold", io::fmt(threshold)},
                                    {"grid", grid_spec}}));

  std::cout << "outward violations: " << report.total_outward_violations << "\n";
  std::cout << "inward witness fraction: " << io::fmt(report.inward_witness_fraction) << "\n";
  std::cout << "grid agreement: " << io::fmt(agreement) << " (threshold " << io::fmt(threshold)
            << ")\n";
  const bool pass = report.total_outward_violations == 0 && agreement >= threshold;
  std::cout << (pass ? "verification passed\n" : "verification FAILED\n");
  return pass ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"admissible-set boundary computation for constrained control systems"};
  app.require_subcommand(0, 1);

  bool list_fixtures = false;
  app.add_flag("--list-fixtures", list_fixtures, "list built-in fixtures and exit");

  CommonArgs targs, bargs, cargs, vargs;
  int t_face = 0, b_face = 0;
  int t_grid = 0, b_grid = 0;
  double b_tmax = 50.0;
  std::string c_point, c_grid_spec;
  double c_horizon = 20.0, v_horizon = 20.0;
  int c_signals = 200, v_signals = 50;
  bool c_ladder = false;
  std::string v_boundary = "out/boundary.json", v_grid_spec;
  double v_threshold = 0.95;

  CLI::App* tangency_cmd = app.add_subcommand("tangency", "find ultimate-tangentiality points");
  add_common(tangency_cmd, targs);
  tangency_cmd->add_option("--face", t_face, "scan a single face (1-based); default all");
  tangency_cmd->add_option("--grid-nodes", t_grid, "scan resolution per free coordinate");

  CLI::App* barrier_cmd =
      app.add_subcommand("barrier", "integrate barrier arcs and assemble the boundary");
  add_common(barrier_cmd, bargs);
  barrier_cmd->add_option("--face", b_face, "restrict tangency scan to one face (1-based)");
  barrier_cmd->add_option("--grid-nodes", b_grid, "tangency scan resolution");
  barrier_cmd->add_option("--horizon", b_tmax, "backward integration horizon (time units)");

  CLI::App* classify_cmd =
      app.add_subcommand("classify", "admissibility of a point or a grid by forward simulation");
  add_common(classify_cmd, cargs);
  classify_cmd->add_option("--point", c_point, "point to classify, comma-separated");
  classify_cmd->add_option("--grid", c_grid_spec, "grid spec lo:hi:count per axis, comma-separated");
  classify_cmd->add_option("--horizon", c_horizon, "simulation horizon T");
  classify_cmd->add_option("--signals", c_signals, "number of sampled bang-bang signals");
  classify_cmd->add_flag("--ladder", c_ladder, "classify at T in {5,10,20} (nesting check)");

  CLI::App* verify_cmd =
      app.add_subcommand("verify", "semipermeability and grid agreement for a computed boundary");
  add_common(verify_cmd, vargs);
  verify_cmd->add_option("--boundary", v_boundary, "boundary JSON from the barrier command");
  verify_cmd->add_option("--grid", v_grid_spec, "agreement grid spec lo:hi:count per axis");
  verify_cmd->add_option("--horizon", v_horizon, "simulation horizon T");
  verify_cmd->add_option("--signals", v_signals, "sampled signals per displaced point");
  verify_cmd->add_option("--threshold", v_threshold, "required grid agreement fraction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  if (list_fixtures) {
    for (const std::string& name : fixture_names()) std::cout << name << "\n";
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kUsage;
  }

  try {
    if (tangency_cmd->parsed()) return run_tangency(targs, t_face, t_grid);
    if (barrier_cmd->parsed()) return run_barrier(bargs, b_face, b_grid, b_tmax);
    if (classify_cmd->parsed())
      return run_classify(cargs, c_point, c_grid_spec, c_horizon, c_signals, c_ladder);
    if (verify_cmd->parsed())
      return run_verify(vargs, v_boundary, v_grid_spec, v_horizon, v_signals, v_threshold);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const SchemaError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "expression error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
