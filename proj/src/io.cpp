#include "barrierkit/io.hpp"

#include <cstdio>
#include <fstream>

namespace barrierkit::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);  // binary: no platform newline translation
  if (!out) throw ArgumentError("cannot open output file: " + path.string());
  return out;
}

}  // namespace

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fnv1a_hex(const std::string& content) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : content) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const std::filesystem::path& dir, const RunManifest& manifest) {
  nlohmann::json j;
  j["command"] = manifest.command;
  j["config_hash"] = manifest.config_hash;
  j["options"] = manifest.options;
  j["tool_version"] = manifest.tool_version;
  j["seed"] = manifest.seed;
  write_json(dir / "manifest.json", j);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// barrier artifacts
// ---------------------------------------------------------------------------

void write_arc_csv(const std::filesystem::path& path, const SystemModel& sys,
                   const BarrierArc& arc) {
  auto out = open_out(path);
  out << "t";
  for (std::size_t i = 0; i < sys.n; ++i) out << ",x_" << (i + 1);
  for (std::size_t i = 0; i < sys.n; ++i) out << ",lambda_" << (i + 1);
  for (std::size_t j = 0; j < sys.m; ++j) out << ",u_" << (j + 1);
  out << ",H_residual\n";
  for (std::size_t k = 0; k < arc.traj.size(); ++k) {
    const Vec x = arc.state_at(k);
    const Vec lam = arc.adjoint_at(k);
    const Vec& u = arc.controls[k];
    out << fmt(arc.traj.times[k]);
    for (double v : x) out << "," << fmt(v);
    for (double v : lam) out << "," << fmt(v);
    for (double v : u) out << "," << fmt(v);
    out << "," << fmt(std::fabs(hamiltonian(sys, x, lam, u))) << "\n";
  }
}

namespace {

nlohmann::json arc_json(const SystemModel& sys, const BarrierArc& arc, std::size_t max_nodes,
                        std::size_t kept_full) {
  nlohmann::json ja;
  ja["termination"] = to_string(arc.termination);
  ja["t_bar"] = arc.t_bar;
  ja["switch_times"] = arc.switch_times;
  if (!arc.diagnostic.empty()) ja["diagnostic"] = arc.diagnostic;
  nlohmann::json ep;
  ep["z"] = arc.endpoint.z;
  ep["i_star"] = arc.endpoint.i_star + 1;  // faces are 1-based externally
  nlohmann::json active = nlohmann::json::array();
  for (std::size_t i : arc.endpoint.active) active.push_back(i + 1);
  ep["active"] = active;
  ep["u_star"] = arc.endpoint.u_star;
  ep["degenerate"] = arc.endpoint.degenerate_u;
  ep["residual"] = arc.endpoint.residual;
  ja["endpoint"] = ep;

  const std::size_t nn = arc.traj.size();
  std::size_t stride = 1;
  if (max_nodes > 0 && nn > max_nodes) stride = (nn + max_nodes - 1) / max_nodes;
  std::size_t kept_decimated = 0;
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t k = 0; k < nn; k += stride) {
    const std::size_t idx = k;
    if (idx < kept_full) ++kept_decimated;
    nlohmann::json node;
    node["t"] = arc.traj.times[idx];
    const Vec x = arc.state_at(idx);
    const Vec lam = arc.adjoint_at(idx);
    for (std::size_t i = 0; i < sys.n; ++i) {
      node["x_" + std::to_string(i + 1)] = x[i];
      node["lambda_" + std::to_string(i + 1)] = lam[i];
    }
    for (std::size_t j = 0; j < sys.m; ++j)
      node["u_" + std::to_string(j + 1)] = arc.controls[idx][j];
    node["H_residual"] = std::fabs(hamiltonian(sys, x, lam, arc.controls[idx]));
    nodes.push_back(node);
  }
  // Keep the final node: terminations live there.
  if (stride > 1 && (nn - 1) % stride != 0) {
    const std::size_t idx = nn - 1;
    nlohmann::json node;
    node["t"] = arc.traj.times[idx];
    const Vec x = arc.state_at(idx);
    const Vec lam = arc.adjoint_at(idx);
    for (std::size_t i = 0; i < sys.n; ++i) {
      node["x_" + std::to_string(i + 1)] = x[i];
      node["lambda_" + std::to_string(i + 1)] = lam[i];
    }
    for (std::size_t j = 0; j < sys.m; ++j)
      node["u_" + std::to_string(j + 1)] = arc.controls[idx][j];
    node["H_residual"] = std::fabs(hamiltonian(sys, x, lam, arc.controls[idx]));
    nodes.push_back(node);
  }
  ja["nodes"] = nodes;
  ja["kept_nodes"] = kept_decimated;
  return ja;
}

}  // namespace

nlohmann::json boundary_json(const SystemModel& sys, const AdmissibleBoundary& boundary,
                             std::size_t max_nodes_per_arc) {
  nlohmann::json j;
  j["n"] = sys.n;
  j["m"] = sys.m;
  nlohmann::json arcs = nlohmann::json::array();
  for (std::size_t a = 0; a < boundary.arcs.size(); ++a) {
    const std::size_t kept = a < boundary.kept_nodes.size() ? boundary.kept_nodes[a]
                                                            : boundary.arcs[a].traj.size();
    arcs.push_back(arc_json(sys, boundary.arcs[a], max_nodes_per_arc, kept));
  }
  j["arcs"] = arcs;

  nlohmann::json trimmed = nlohmann::json::array();
  for (const auto& poly : boundary.trimmed) {
    nlohmann::json jp = nlohmann::json::array();
    for (const Vec& p : poly) jp.push_back(p);
    trimmed.push_back(jp);
  }
  j["trimmed_polylines"] = trimmed;

  nlohmann::json segs = nlohmann::json::array();
  for (const UsableSegment& seg : boundary.usable_segments) {
    nlohmann::json js;
    js["face"] = seg.face + 1;
    nlohmann::json pts = nlohmann::json::array();
    for (const Vec& p : seg.points) pts.push_back(p);
    js["points"] = pts;
    segs.push_back(js);
  }
  j["usable_segments"] = segs;

  nlohmann::json corners = nlohmann::json::array();
  for (const Corner& c : boundary.corners) {
    nlohmann::json jc;
    jc["point"] = c.point;
    jc["arc_a"] = c.arc_a;
    jc["arc_b"] = c.arc_b;
    jc["dist"] = c.dist;
    corners.push_back(jc);
  }
  j["corners"] = corners;
  if (!boundary.note.empty()) j["note"] = boundary.note;
  return j;
}

void write_boundary_json(const std::filesystem::path& path, const SystemModel& sys,
                         const AdmissibleBoundary& boundary, std::size_t max_nodes_per_arc) {
  write_json(path, boundary_json(sys, boundary, max_nodes_per_arc));
}

AdmissibleBoundary load_boundary_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open boundary JSON: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("boundary JSON parse failure: ") + e.what(), path.string());
  }
  AdmissibleBoundary boundary;
  const std::size_t n = j.at("n").get<std::size_t>();
  const std::size_t m = j.at("m").get<std::size_t>();
  for (const auto& ja : j.at("arcs")) {
    BarrierArc arc;
    arc.n = n;
    const auto& ep = ja.at("endpoint");
    arc.endpoint.z = ep.at("z").get<Vec>();
    arc.endpoint.i_star = ep.at("i_star").get<std::size_t>() - 1;
    for (const auto& a : ep.at("active"))
      arc.endpoint.active.push_back(a.get<std::size_t>() - 1);
    arc.endpoint.u_star = ep.at("u_star").get<Vec>();
    arc.endpoint.degenerate_u = ep.value("degenerate", false);
    arc.endpoint.residual = ep.value("residual", 0.0);
    if (ja.contains("switch_times")) arc.switch_times = ja.at("switch_times").get<std::vector<double>>();
    const std::string term = ja.value("termination", "reached_horizon");
    if (term == "left_constraint_set") arc.termination = ArcTermination::LeftConstraintSet;
    else if (term == "hamiltonian_drift") arc.termination = ArcTermination::HamiltonianDrift;
    else if (term == "self_intersection") arc.termination = ArcTermination::SelfIntersection;
    else arc.termination = ArcTermination::ReachedHorizon;
    for (const auto& node : ja.at("nodes")) {
      arc.traj.times.push_back(node.at("t").get<double>());
      Vec y(2 * n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = node.at("x_" + std::to_string(i + 1)).get<double>();
        y[n + i] = node.at("lambda_" + std::to_string(i + 1)).get<double>();
      }
      arc.traj.states.push_back(y);
      arc.traj.derivs.push_back(Vec(2 * n, 0.0));
      Vec u(m, 0.0);
      for (std::size_t jj = 0; jj < m; ++jj)
        u[jj] = node.value("u_" + std::to_string(jj + 1), 0.0);
      arc.controls.push_back(u);
    }
    boundary.kept_nodes.push_back(ja.value("kept_nodes", arc.traj.size()));
    boundary.arcs.push_back(std::move(arc));
  }
  if (j.contains("trimmed_polylines"))
    for (const auto& jp : j.at("trimmed_polylines")) {
      std::vector<Vec> poly;
      for (const auto& p : jp) poly.push_back(p.get<Vec>());
      boundary.trimmed.push_back(std::move(poly));
    }
  if (j.contains("usable_segments"))
    for (const auto& js : j.at("usable_segments")) {
      UsableSegment seg;
      seg.face = js.at("face").get<std::size_t>() - 1;
      for (const auto& p : js.at("points")) seg.points.push_back(p.get<Vec>());
      boundary.usable_segments.push_back(std::move(seg));
    }
  if (j.contains("corners"))
    for (const auto& jc : j.at("corners")) {
      Corner c;
      c.point = jc.at("point").get<Vec>();
      c.arc_a = jc.value("arc_a", 0);
      c.arc_b = jc.value("arc_b", 0);
      c.dist = jc.value("dist", 0.0);
      boundary.corners.push_back(std::move(c));
    }
  return boundary;
}

void write_boundary_gnuplot(const std::filesystem::path& path, const SystemModel& sys,
                            const AdmissibleBoundary& boundary) {
  auto out = open_out(path);
  out << "# barrier arcs (t, x_1.., lambda_1.., u_1..); blocks separated by blank lines\n";
  for (std::size_t a = 0; a < boundary.arcs.size(); ++a) {
    const BarrierArc& arc = boundary.arcs[a];
    out << "# arc " << a << " termination=" << to_string(arc.termination) << "\n";
    for (std::size_t k = 0; k < arc.traj.size(); ++k) {
      out << fmt(arc.traj.times[k]);
      for (double v : arc.state_at(k)) out << " " << fmt(v);
      for (double v : arc.adjoint_at(k)) out << " " << fmt(v);
      for (double v : arc.controls[k]) out << " " << fmt(v);
      out << "\n";
    }
    out << "\n\n";
  }
  for (std::size_t s = 0; s < boundary.usable_segments.size(); ++s) {
    const UsableSegment& seg = boundary.usable_segments[s];
    out << "# usable segment " << s << " face " << (seg.face + 1) << "\n";
    for (const Vec& p : seg.points) {
      out << fmt(0.0);
      for (double v : p) out << " " << fmt(v);
      for (std::size_t i = 0; i < sys.n + sys.m; ++i) out << " 0";
      out << "\n";
    }
    out << "\n\n";
  }
  if (!boundary.corners.empty()) {
    out << "# corners\n";
    for (const Corner& c : boundary.corners) {
      out << fmt(0.0);
      for (double v : c.point) out << " " << fmt(v);
      out << "\n";
    }
    out << "\n\n";
  }
}

// ---------------------------------------------------------------------------
// SVG rendering
// ---------------------------------------------------------------------------

namespace {

class SvgCanvas {
public:
  SvgCanvas(double x_lo, double x_hi, double y_lo, double y_hi)
      : x_lo_(x_lo), x_hi_(x_hi), y_lo_(y_lo), y_hi_(y_hi) {}

  double px(double x) const { return margin_ + (x - x_lo_) / (x_hi_ - x_lo_) * extent_; }
  double py(double y) const { return margin_ + (y_hi_ - y) / (y_hi_ - y_lo_) * extent_; }

  std::string polyline(const std::vector<Vec>& pts, const std::string& stroke, double width,
                       const std::string& dash = "") const {
    if (pts.size() < 2) return "";
    std::string s = "  <polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
                    fmt(width) + "\"";
    if (!dash.empty()) s += " stroke-dasharray=\"" + dash + "\"";
    s += " points=\"";
    for (const Vec& p : pts) s += fmt(px(p[0])) + "," + fmt(py(p[1])) + " ";
    s += "\"/>\n";
    return s;
  }

  std::string circle(const Vec& p, double r, const std::string& fill) const {
    return "  <circle cx=\"" + fmt(px(p[0])) + "\" cy=\"" + fmt(py(p[1])) + "\" r=\"" + fmt(r) +
           "\" fill=\"" + fill + "\"/>\n";
  }

  double total() const { return extent_ + 2 * margin_; }

private:
  double x_lo_, x_hi_, y_lo_, y_hi_;
  double extent_ = 720.0;
  double margin_ = 40.0;
};

}  // namespace

void write_boundary_svg(const std::filesystem::path& path, const SystemModel& sys,
                        const ConstraintSet& cs, const AdmissibleBoundary& boundary, const Vec& lo,
                        const Vec& hi) {
  auto out = open_out(path);
  SvgCanvas cv(lo[0], hi[0], lo[1], hi[1]);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(cv.total()) << "\" height=\""
      << fmt(cv.total()) << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Constraint faces: dashed black, sampled along the window.
  for (std::size_t face = 0; face < cs.p; ++face) {
    std::vector<Vec> pts;
    for (int i = 0; i <= 200; ++i) {
      Vec z(sys.n, 0.0);
      z[1] = lo[1] + (hi[1] - lo[1]) * i / 200.0;
      z[0] = 0.5 * (lo[0] + hi[0]);
      bool ok = false;
      for (int it = 0; it < 50; ++it) {
        const double gv = cs.g(z)[face];
        if (std::fabs(gv) <= 1e-10) {
          ok = true;
          break;
        }
        const double slope = cs.gradient(face, z)[0];
        if (std::fabs(slope) < 1e-14) break;
        z[0] -= gv / slope;
      }
      if (ok && z[0] >= lo[0] - 1e-9 && z[0] <= hi[0] + 1e-9) {
        pts.push_back(z);
      } else if (pts.size() >= 2) {
        out << cv.polyline(pts, "black", 1.0, "6,4");
        pts.clear();
      } else {
        pts.clear();
      }
    }
    if (pts.size() >= 2) out << cv.polyline(pts, "black", 1.0, "6,4");
  }

  // Full arcs thin, kept (trimmed) parts bold.
  for (const BarrierArc& arc : boundary.arcs) {
    std::vector<Vec> pts;
    for (std::size_t k = 0; k < arc.traj.size(); ++k) pts.push_back(arc.state_at(k));
    out << cv.polyline(pts, "#9ecae1", 1.0);
  }
  for (const auto& poly : boundary.trimmed) out << cv.polyline(poly, "#1f62a8", 2.5);

  for (const UsableSegment& seg : boundary.usable_segments)
    out << cv.polyline(seg.points, "#2ca02c", 3.0);

  for (const Corner& c : boundary.corners) out << cv.circle(c.point, 4.0, "#d62728");
  for (const BarrierArc& arc : boundary.arcs) out << cv.circle(arc.endpoint.z, 3.0, "#ff7f0e");

  out << "</svg>\n";
}

// ---------------------------------------------------------------------------
// oracle artifacts
// ---------------------------------------------------------------------------

void write_grid_csv(const std::filesystem::path& path, const GridResult& grid,
                    std::size_t horizon_index) {
  if (horizon_index >= grid.labels.size())
    throw ArgumentError("write_grid_csv: bad horizon index");
  auto out = open_out(path);
  const std::size_t n = grid.spec.lo.size();
  for (std::size_t i = 0; i < n; ++i) out << "x" << (i + 1) << ",";
  out << "label,min_sup_estimate\n";
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    for (double v : grid.centers[c]) out << fmt(v) << ",";
    out << to_string(grid.labels[horizon_index][c]) << ","
        << fmt(grid.min_sup[horizon_index][c]) << "\n";
  }
}

void write_grid_pgm(const std::filesystem::path& path, const GridResult& grid,
                    std::size_t horizon_index) {
  if (horizon_index >= grid.labels.size())
    throw ArgumentError("write_grid_pgm: bad horizon index");
  if (grid.spec.resolution.size() < 2)
    throw ArgumentError("write_grid_pgm: raster needs at least two axes");
  const std::size_t nx = grid.spec.resolution[0];
  const std::size_t ny = grid.spec.resolution[1];
  auto out = open_out(path);
  out << "P2\n" << nx << " " << ny << "\n2\n";
  for (std::size_t row = ny; row-- > 0;) {
    for (std::size_t col = 0; col < nx; ++col) {
      const std::size_t cell = col + nx * row;
      int v = 1;
      switch (grid.labels[horizon_index][cell]) {
        case Admissibility::Inadmissible: v = 0; break;
        case Admissibility::Unknown: v = 1; break;
        case Admissibility::Admissible: v = 2; break;
      }
      out << v << (col + 1 == nx ? "" : " ");
    }
    out << "\n";
  }
}

nlohmann::json tangency_json(const std::vector<TangencyPoint>& points) {
  nlohmann::json j;
  nlohmann::json arr = nlohmann::json::array();
  for (const TangencyPoint& tp : points) {
    nlohmann::json jt;
    jt["z"] = tp.z;
    nlohmann::json active = nlohmann::json::array();
    for (std::size_t i : tp.active) active.push_back(i + 1);
    jt["active"] = active;
    jt["i_star"] = tp.i_star + 1;
    jt["u_star"] = tp.u_star;
    jt["degenerate"] = tp.degenerate_u;
    jt["residual"] = tp.residual;
    arr.push_back(jt);
  }
  j["points"] = arr;
  j["count"] = points.size();
  return j;
}

nlohmann::json verdict_json(const AdmissibilityVerdict& verdict) {
  nlohmann::json j;
  j["label"] = to_string(verdict.label);
  j["min_sup_estimate"] = verdict.min_sup_estimate;
  j["horizon"] = verdict.horizon;
  j["samples"] = verdict.samples;
  if (verdict.witness) {
    nlohmann::json w;
    const ControlSignal& sig = *verdict.witness;
    w["description"] = sig.describe();
    switch (sig.kind) {
      case ControlSignal::Kind::Constant:
        w["kind"] = "constant";
        w["value"] = sig.constant_value;
        break;
      case ControlSignal::Kind::PiecewiseConstant:
        w["kind"] = "piecewise_constant";
        w["switch_times"] = sig.switch_times;
        w["values"] = sig.values;
        break;
      case ControlSignal::Kind::BangBang:
        w["kind"] = "bang_bang";
        w["switch_count"] = sig.switch_count;
        w["seed"] = sig.seed;
        w["horizon"] = sig.horizon;
        w["switch_times"] = sig.switch_times;
        w["values"] = sig.values;
        break;
    }
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

nlohmann::json semi_report_json(const SemiReport& report) {
  nlohmann::json j;
  nlohmann::json arcs = nlohmann::json::array();
  for (const ArcSemiReport& ar : report.arcs) {
    nlohmann::json ja;
    ja["arc_index"] = ar.arc_index;
    ja["outward_points"] = ar.outward_points;
    ja["outward_violations"] = ar.outward_violations;
    ja["inward_points"] = ar.inward_points;
    ja["inward_witnesses"] = ar.inward_witnesses;
    arcs.push_back(ja);
  }
  j["arcs"] = arcs;
  j["total_outward_violations"] = report.total_outward_violations;
  j["inward_witness_fraction"] = report.inward_witness_fraction;
  return j;
}

}  // namespace barrierkit::io
