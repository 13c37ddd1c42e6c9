#include "snpp/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "snpp/cell.hpp"
#include "snpp/diagnostics.hpp"
#include "snpp/io.hpp"
#include "snpp/micro.hpp"

namespace snpp::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& msg) {
  throw Error(ErrorCode::ValidationError, "cli::parse_config", field + ": " + msg);
}

// Reader over one JSON object that remembers which keys were consumed.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(path_, "expected an object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* get(const std::string& k) {
    seen_.push_back(k);
    auto it = j_.find(k);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& k, double& out) {
    if (const json* v = get(k)) out = as_number(*v, field(k));
  }
  void integer(const std::string& k, int& out) {
    if (const json* v = get(k)) {
      const double d = as_number(*v, field(k));
      if (d != std::floor(d) || std::abs(d) > 1e9) invalid(field(k), "expected an integer");
      out = static_cast<int>(d);
    }
  }
  void boolean(const std::string& k, bool& out) {
    if (const json* v = get(k)) {
      if (!v->is_boolean()) invalid(field(k), "expected true or false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& k, std::string& out) {
    if (const json* v = get(k)) {
      if (!v->is_string()) invalid(field(k), "expected a string");
      out = v->get<std::string>();
    }
  }
  void vec2(const std::string& k, Vec2& out) {
    if (const json* v = get(k)) out = as_vec2(*v, field(k));
  }

  Block child(const std::string& k) {
    seen_.push_back(k);
    return Block(j_.at(k), field(k));
  }

  /// Unknown keys are errors: a typo would otherwise silently fall back to a default.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end()) invalid(field(it.key()), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& f) {
    if (!v.is_number()) invalid(f, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) invalid(f, "must be finite");
    return d;
  }

  static Vec2 as_vec2(const json& v, const std::string& f) {
    if (!v.is_array() || v.size() != 2) invalid(f, "expected [x, y]");
    return {as_number(v[0], f + "[0]"), as_number(v[1], f + "[1]")};
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

// "1/4" or 0.25
double eps_value(const json& v, const std::string& f) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash != std::string::npos) {
        std::size_t a = 0, b = 0;
        const double num = std::stod(s.substr(0, slash), &a);
        const double den = std::stod(s.substr(slash + 1), &b);
        if (a == slash && b == s.size() - slash - 1 && den != 0.0) return num / den;
      }
    } catch (const std::exception&) {
    }
    invalid(f, "expected a number or a fraction like \"1/4\"");
  }
  return Block::as_number(v, f);
}

void positive(double v, const std::string& f) {
  if (!(v > 0.0)) invalid(f, "must be positive");
}

void non_negative(double v, const std::string& f) {
  if (!(v >= 0.0)) invalid(f, "must be non-negative");
}

void parse_geometry(Block b, RunConfig& c) {
  if (b.has("inclusion")) {
    const json* inc = b.get("inclusion");
    if (inc->is_null() || (inc->is_boolean() && !inc->get<bool>())) {
      c.cell.inclusion.reset();
    } else {
      Block ib(*inc, b.field("inclusion"));
      mesh::Disk d;
      ib.vec2("center", d.center);
      ib.number("radius", d.radius);
      ib.finish();
      positive(d.radius, ib.field("radius"));
      c.cell.inclusion = d;
    }
  }
  b.number("cell_h", c.cell.target_h);
  positive(c.cell.target_h, b.field("cell_h"));
  if (b.has("domain")) {
    Block db = b.child("domain");
    db.vec2("lo", c.domain.lo);
    db.vec2("hi", c.domain.hi);
    db.finish();
    if (!(c.domain.width() > 0.0 && c.domain.height() > 0.0)) invalid(db.field("hi"), "must exceed lo");
  }
  b.number("eps", c.eps);
  positive(c.eps, b.field("eps"));
  b.finish();
}

void parse_regime(Block b, RunConfig& c) {
  std::string bc = "neumann";
  b.string("bc", bc);
  std::transform(bc.begin(), bc.end(), bc.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (bc == "neumann") c.regime.bc = macro::BcType::Neumann;
  else if (bc == "dirichlet") c.regime.bc = macro::BcType::Dirichlet;
  else invalid(b.field("bc"), "expected \"neumann\" or \"dirichlet\"");
  b.number("alpha", c.regime.alpha);
  b.number("beta", c.regime.beta);
  b.number("gamma", c.regime.gamma);
  b.number("sigma", c.regime.sigma);
  b.number("phi_d", c.regime.phi_d);
  b.finish();
}

void parse_discretization(Block b, RunConfig& c) {
  b.number("h", c.h);
  non_negative(c.h, b.field("h"));
  b.integer("macro_n", c.macro_n);
  if (c.macro_n < 1) invalid(b.field("macro_n"), "must be at least 1");
  b.number("dt", c.dt);
  non_negative(c.dt, b.field("dt"));
  b.number("T", c.T);
  positive(c.T, b.field("T"));
  b.number("lambda", c.lambda);
  positive(c.lambda, b.field("lambda"));
  b.number("fp_tol", c.fp_tol);
  positive(c.fp_tol, b.field("fp_tol"));
  b.integer("fp_max", c.fp_max);
  if (c.fp_max < 1) invalid(b.field("fp_max"), "must be at least 1");
  b.boolean("upwind", c.upwind);
  b.finish();
}

void parse_initial(Block b, RunConfig& c) {
  auto& d = c.initial;
  b.vec2("center", d.center);
  if (b.has("width")) {
    const json* w = b.get("width");
    if (w->is_array()) d.width = Block::as_vec2(*w, b.field("width"));
    else d.width = Vec2{1.0, 1.0} * Block::as_number(*w, b.field("width"));
    positive(std::min(d.width.x, d.width.y), b.field("width"));
  }
  b.number("amplitude", d.amplitude);
  b.number("background", d.background);
  b.boolean("neutral", d.neutral);
  b.finish();
}

void parse_study(Block b, RunConfig& c) {
  if (b.has("eps")) {
    const json* e = b.get("eps");
    if (!e->is_array() || e->empty()) invalid(b.field("eps"), "expected a non-empty list");
    c.eps_list.clear();
    for (std::size_t i = 0; i < e->size(); ++i) {
      const std::string f = b.field("eps") + "[" + std::to_string(i) + "]";
      const double v = eps_value((*e)[i], f);
      if (!(v > 0.0 && v <= 1.0)) invalid(f, "must lie in (0, 1]");
      c.eps_list.push_back(v);
    }
    std::sort(c.eps_list.begin(), c.eps_list.end(), std::greater<>());
    if (std::adjacent_find(c.eps_list.begin(), c.eps_list.end()) != c.eps_list.end()) {
      invalid(b.field("eps"), "duplicate values");
    }
  }
  b.number("h_factor", c.h_factor);
  positive(c.h_factor, b.field("h_factor"));
  b.boolean("corrector", c.corrector);
  b.integer("threads", c.threads);
  if (c.threads < 0) invalid(b.field("threads"), "must be non-negative");
  b.finish();
}

void parse_output(Block b, RunConfig& c) {
  b.string("directory", c.output.directory);
  if (c.output.directory.empty()) invalid(b.field("directory"), "must not be empty");
  if (b.has("formats")) {
    const json* f = b.get("formats");
    if (!f->is_array()) invalid(b.field("formats"), "expected a list");
    c.output.csv = c.output.vtk = false;
    for (const auto& x : *f) {
      const std::string s = x.is_string() ? x.get<std::string>() : "";
      if (s == "csv") c.output.csv = true;
      else if (s == "vtk") c.output.vtk = true;
      else invalid(b.field("formats"), "entries must be \"csv\" or \"vtk\"");
    }
  }
  b.integer("snapshot_stride", c.output.snapshot_stride);
  if (c.output.snapshot_stride < 0) invalid(b.field("snapshot_stride"), "must be non-negative");
  b.finish();
}

std::string where_in_text(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  // nlohmann reports the position one past the offending character
  if (col > 1) --col;
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

const char* to_string(Command c) {
  switch (c) {
    case Command::Cell: return "cell";
    case Command::Macro: return "macro";
    case Command::Micro: return "micro";
    case Command::Converge: return "converge";
    case Command::Check: return "check";
  }
  return "?";
}

std::optional<Command> parse_command(const std::string& s) {
  for (Command c : {Command::Cell, Command::Macro, Command::Micro, Command::Converge, Command::Check}) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

RunConfig parse_config(const std::string& text, std::optional<Command> command) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "cli::parse_config", where_in_text(text, e.byte) + ": " + e.what());
  }
  RunConfig c;
  c.cell.inclusion = mesh::Disk{};
  c.cell.target_h = 0.025;
  Block root(j, "");

  if (root.has("command")) {
    std::string s;
    root.string("command", s);
    const auto parsed = parse_command(s);
    if (!parsed) invalid("command", "unknown command '" + s + "'");
    if (command && *command != *parsed) {
      invalid("command", std::string("config says '") + s + "' but '" + to_string(*command) + "' was requested");
    }
    c.command = *parsed;
  } else if (command) {
    c.command = *command;
  } else {
    invalid("command", "missing");
  }

  auto require = [&](const char* block) {
    if (!root.has(block)) invalid(block, std::string("required for '") + to_string(c.command) + "'");
  };
  switch (c.command) {
    case Command::Cell: require("geometry"); break;
    case Command::Macro:
      if (!root.has("coefficients")) require("geometry");
      require("regime");
      break;
    case Command::Micro: require("geometry"); require("regime"); break;
    case Command::Converge: require("geometry"); require("regime"); require("study"); break;
    case Command::Check: require("diagnostics"); break;
  }

  if (root.has("geometry")) parse_geometry(root.child("geometry"), c);
  if (root.has("regime")) parse_regime(root.child("regime"), c);
  if (root.has("discretization")) parse_discretization(root.child("discretization"), c);
  if (root.has("initial")) parse_initial(root.child("initial"), c);
  if (root.has("study")) parse_study(root.child("study"), c);
  if (root.has("output")) parse_output(root.child("output"), c);
  root.string("coefficients", c.coefficients);
  root.string("diagnostics", c.diagnostics);
  root.finish();

  if (c.command != Command::Cell && c.command != Command::Check) {
    if (!c.regime.admissible()) invalid("regime", "inadmissible exponents (" + c.regime.describe() + ")");
  }
  return c;
}

std::string echo_config(const RunConfig& c) {
  json j;
  j["command"] = to_string(c.command);
  json g;
  if (c.cell.inclusion) {
    g["inclusion"] = {{"center", {c.cell.inclusion->center.x, c.cell.inclusion->center.y}},
                      {"radius", c.cell.inclusion->radius}};
  } else {
    g["inclusion"] = nullptr;
  }
  g["cell_h"] = c.cell.target_h;
  g["domain"] = {{"lo", {c.domain.lo.x, c.domain.lo.y}}, {"hi", {c.domain.hi.x, c.domain.hi.y}}};
  g["eps"] = c.eps;
  j["geometry"] = g;
  j["regime"] = {{"bc", c.regime.bc == macro::BcType::Neumann ? "neumann" : "dirichlet"},
                 {"alpha", c.regime.alpha},
                 {"beta", c.regime.beta},
                 {"gamma", c.regime.gamma},
                 {"sigma", c.regime.sigma},
                 {"phi_d", c.regime.phi_d}};
  j["discretization"] = {{"h", c.h},         {"macro_n", c.macro_n}, {"dt", c.dt},         {"T", c.T},
                         {"lambda", c.lambda}, {"fp_tol", c.fp_tol}, {"fp_max", c.fp_max}, {"upwind", c.upwind}};
  j["initial"] = {{"center", {c.initial.center.x, c.initial.center.y}},
                  {"width", {c.initial.width.x, c.initial.width.y}},
                  {"amplitude", c.initial.amplitude},
                  {"background", c.initial.background},
                  {"neutral", c.initial.neutral}};
  j["study"] = {{"eps", c.eps_list}, {"h_factor", c.h_factor}, {"corrector", c.corrector}, {"threads", c.threads}};
  json formats = json::array();
  if (c.output.csv) formats.push_back("csv");
  if (c.output.vtk) formats.push_back("vtk");
  j["output"] = {{"directory", c.output.directory}, {"formats", formats}, {"snapshot_stride", c.output.snapshot_stride}};
  if (!c.coefficients.empty()) j["coefficients"] = c.coefficients;
  if (!c.diagnostics.empty()) j["diagnostics"] = c.diagnostics;
  return j.dump(2);
}

verify::StudyConfig study_config(const RunConfig& c) {
  verify::StudyConfig s;
  s.regime = c.regime;
  s.cell = c.cell;
  s.domain = c.domain;
  s.eps_list = c.eps_list;
  s.h_factor = c.h_factor;
  s.T = c.T;
  s.dt = c.dt > 0.0 ? c.dt : 1e-3;
  s.macro_n = c.macro_n;
  s.lambda = c.lambda;
  s.data = c.initial;
  s.corrector = c.corrector;
  s.threads = c.threads;
  return s;
}

// ---------------------------------------------------------------------------
// Execution

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorCode::IoError, "cli::execute", "cannot write " + p.string());
  return f;
}

std::string snapshot_name(const char* prefix, int step) {
  std::ostringstream s;
  s << prefix << '_' << std::setw(6) << std::setfill('0') << step << ".vtk";
  return s.str();
}

bool want_snapshot(const RunConfig& c, int step, int last) {
  if (!c.output.vtk) return false;
  if (step == last) return true;
  return c.output.snapshot_stride > 0 && step % c.output.snapshot_stride == 0;
}

int expected_steps(const RunConfig& c, double dt) {
  return static_cast<int>(std::ceil(c.T / dt - 1e-9));
}

int finish_run(const RunDiagnostics& d, const fs::path& dir, const RunConfig& c, std::ostream& out) {
  if (c.output.csv) {
    auto f = open_out(dir / "diagnostics.csv");
    write_diagnostics_csv(f, d);
  }
  const auto rep = verify::run_invariant_suite(d);
  auto f = open_out(dir / "invariants.txt");
  verify::write_report(f, rep);
  verify::write_report(out, rep);
  return rep.all_passed() ? kOk : kAcceptance;
}

cell::EffectiveCoefficients load_coefficients(const RunConfig& c) {
  if (c.coefficients.empty()) return cell::compute_effective_coefficients(c.cell, c.regime.sigma);
  std::ifstream f(c.coefficients);
  if (!f) throw Error(ErrorCode::IoError, "cli::execute", "cannot read " + c.coefficients);
  return cell::read_coefficients(f);
}

int run_cell(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const auto co = cell::compute_effective_coefficients(c.cell, c.regime.sigma);
  auto f = open_out(dir / "coefficients.txt");
  cell::write_coefficients(f, co, c.cell);
  cell::write_coefficients(out, co, c.cell);
  return kOk;
}

int run_macro_cmd(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  auto m = std::make_shared<const mesh::TriMesh>(mesh::generate_rectangle_mesh(c.domain, c.macro_n, c.macro_n));
  macro::MacroProblem p;
  p.mesh = m;
  p.coeffs = load_coefficients(c);
  p.regime = c.regime;
  p.T = c.T;
  p.dt = c.dt;
  p.lambda = c.lambda;
  p.fp_tol = c.fp_tol;
  p.fp_max = c.fp_max;
  p.upwind = c.upwind;
  std::tie(p.c_plus0, p.c_minus0) = c.initial.sample(*m, verify::macro_charge_target(*m, p.coeffs, c.regime));
  const double dt = c.dt > 0.0 ? c.dt : std::pow(mesh::mesh_quality_report(*m).h_max, 2) / 4.0;
  const int last = expected_steps(c, dt);
  auto observer = [&](const macro::MacroState& s, int step) {
    if (!want_snapshot(c, step, last)) return;
    io::VtkFields fl;
    fl.point_scalars = {{"c_plus", &s.c_plus}, {"c_minus", &s.c_minus}, {"potential", &s.potential},
                        {"pressure", &s.pressure}};
    fl.cell_vectors = {{"velocity", s.velocity.values}};
    auto f = open_out(dir / snapshot_name("macro", step));
    io::write_vtk(f, *m, fl, "snpp macro t=" + std::to_string(s.t));
  };
  const auto r = macro::run_macro(p, observer);
  out << "macro: " << r.steps << " steps\n";
  return finish_run(r.diagnostics, dir, c, out);
}

int run_micro_cmd(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  mesh::PerforatedDomain dom;
  dom.outer = c.domain;
  dom.eps = c.eps;
  dom.cell = c.cell;
  const double h = c.h > 0.0 ? c.h : c.eps / 8.0;
  auto pm = std::make_shared<const mesh::PerforatedMesh>(mesh::generate_perforated_mesh(dom, h));
  micro::MicroProblem p;
  p.pmesh = pm;
  p.regime = c.regime;
  p.T = c.T;
  p.dt = c.dt;
  p.lambda = c.lambda;
  p.fp_tol = c.fp_tol;
  p.fp_max = c.fp_max;
  p.upwind = c.upwind;
  std::tie(p.c_plus0, p.c_minus0) = c.initial.sample(pm->mesh, verify::micro_charge_target(*pm, c.regime));
  const double dt = c.dt > 0.0 ? c.dt : std::pow(mesh::mesh_quality_report(pm->mesh).h_max, 2) / 4.0;
  const int last = expected_steps(c, dt);
  auto observer = [&](const micro::MicroState& s, int step) {
    if (!want_snapshot(c, step, last)) return;
    io::VtkFields fl;
    fl.point_scalars = {{"c_plus", &s.c_plus}, {"c_minus", &s.c_minus}, {"potential", &s.potential},
                        {"pressure", &s.pressure}};
    fl.point_vectors = {{"velocity", io::vertex_values(pm->mesh, s.velocity)}};
    auto f = open_out(dir / snapshot_name("micro", step));
    io::write_vtk(f, pm->mesh, fl, "snpp micro t=" + std::to_string(s.t));
  };
  const auto r = micro::run_micro(p, observer);
  out << "micro: " << r.steps << " steps, " << pm->mesh.num_nodes() << " nodes\n";
  return finish_run(r.diagnostics, dir, c, out);
}

int run_converge(const RunConfig& c, const fs::path& dir, std::ostream& out) {
  const auto s = verify::run_convergence_study(study_config(c));
  {
    auto f = open_out(dir / "study.csv");
    verify::write_study_csv(f, s);
  }
  verify::write_study_csv(out, s);
  for (const auto& f : s.non_monotone) out << "non-monotone: " << f << '\n';
  for (double e : s.corrector_failures) out << "corrector did not help at eps=" << e << '\n';
  if (!s.monotone()) {
    out << "error [NonMonotoneConvergence] verify::run_convergence_study: errors not strictly decreasing\n";
  }
  return s.monotone() && s.corrector_ok() ? kOk : kAcceptance;
}

int run_check(const RunConfig& c, std::ostream& out) {
  std::ifstream f(c.diagnostics);
  if (!f) throw Error(ErrorCode::IoError, "cli::check", "cannot read " + c.diagnostics);
  const auto d = read_diagnostics_csv(f);
  const auto rep = verify::run_invariant_suite(d);
  verify::write_report(out, rep);
  return rep.all_passed() ? kOk : kAcceptance;
}

int exit_code_for(ErrorCode e) {
  switch (e) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::IoError:
    case ErrorCode::InadmissibleScaling:
    case ErrorCode::InclusionTouchesBoundary:
    case ErrorCode::GridMisaligned:
    case ErrorCode::ResolutionTooCoarse:
    case ErrorCode::NoSolidPhase:
    case ErrorCode::MalformedDiagnostics:
      return kUsage;
    default:
      return kNumerical;
  }
}

}  // namespace

int execute(const RunConfig& c, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path dir(c.output.directory);
  int code = kOk;
  try {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cli::execute", "cannot create " + dir.string() + ": " + ec.message());
    {
      auto f = open_out(dir / "config.json");
      f << echo_config(c) << '\n';
    }
    switch (c.command) {
      case Command::Cell: code = run_cell(c, dir, out); break;
      case Command::Macro: code = run_macro_cmd(c, dir, out); break;
      case Command::Micro: code = run_micro_cmd(c, dir, out); break;
      case Command::Converge: code = run_converge(c, dir, out); break;
      case Command::Check: code = run_check(c, out); break;
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "] " << e.where() << ": " << e.what() << '\n';
    code = exit_code_for(e.code());
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  try {
    json m;
    m["tool"] = "snpp";
    m["version"] = kVersion;
    m["command"] = to_string(c.command);
    m["config"] = json::parse(echo_config(c));
    m["wall_time_s"] = wall;
    m["exit_code"] = code;
    m["fast"] = opts.fast;
    m["threads"] = c.threads > 0 ? c.threads : verify::default_thread_count();
    std::ofstream f(dir / "manifest.json");
    if (f) f << m.dump(2) << '\n';
  } catch (const std::exception&) {
  }
  return code;
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"snpp: pore-scale and homogenized Stokes-Nernst-Planck-Poisson solver"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string config_path, output_dir;
  bool fast = false;
  std::vector<std::pair<Command, CLI::App*>> subs;
  const std::pair<Command, const char*> defs[] = {
      {Command::Cell, "solve the cell problems and write the effective coefficients"},
      {Command::Macro, "run the homogenized model"},
      {Command::Micro, "run the pore-scale model"},
      {Command::Converge, "eps-convergence study, micro against macro"},
      {Command::Check, "invariant suite on an existing diagnostics file"}};
  std::string diag_arg;
  for (const auto& [cmd, help] : defs) {
    CLI::App* s = app.add_subcommand(to_string(cmd), help);
    if (cmd == Command::Check) {
      s->add_option("--config", config_path, "JSON config file");
      s->add_option("diagnostics", diag_arg, "diagnostics CSV (instead of a config)");
    } else {
      s->add_option("--config", config_path, "JSON config file")->required();
    }
    s->add_option("--output", output_dir, "output directory (overrides output.directory)");
    s->add_flag("--fast", fast, "allow nondeterministic parallel reductions");
    subs.emplace_back(cmd, s);
  }
  if (argc > 1 && argv[1][0] != '-' && !parse_command(argv[1])) {
    err << "unknown subcommand '" << argv[1] << "'\n" << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    if (rc != 0) err << app.help();
    return rc == 0 ? kOk : kUsage;
  }
  Command cmd = Command::Cell;
  for (const auto& [c, s] : subs) {
    if (s->parsed()) cmd = c;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw Error(ErrorCode::IoError, "cli::main", "cannot read " + config_path);
      std::stringstream ss;
      ss << f.rdbuf();
      cfg = parse_config(ss.str(), cmd);
    } else if (cmd == Command::Check && !diag_arg.empty()) {
      cfg.command = Command::Check;
      cfg.diagnostics = diag_arg;
    } else {
      err << "check needs --config or a diagnostics file\n" << app.help();
      return kUsage;
    }
    if (!diag_arg.empty()) cfg.diagnostics = diag_arg;
    if (!output_dir.empty()) cfg.output.directory = output_dir;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "] " << e.where() << ": " << e.what() << '\n';
    return kUsage;
  }
  if (cmd == Command::Check && config_path.empty()) {
    // no output directory requested: report only
    try {
      std::ifstream f(cfg.diagnostics);
      if (!f) throw Error(ErrorCode::IoError, "cli::check", "cannot read " + cfg.diagnostics);
      const auto rep = verify::run_invariant_suite(read_diagnostics_csv(f));
      verify::write_report(out, rep);
      return rep.all_passed() ? kOk : kAcceptance;
    } catch (const Error& e) {
      err << "error [" << to_string(e.code()) << "] " << e.where() << ": " << e.what() << '\n';
      return exit_code_for(e.code());
    }
  }
  RunOptions opts;
  opts.fast = fast;
  return execute(cfg, opts, out, err);
}

}  // namespace snpp::cli
