#include "choquard/cli.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <CLI11.hpp>

#include "choquard/certificates.hpp"
#include "choquard/continuation.hpp"
#include "choquard/errors.hpp"
#include "choquard/output.hpp"

namespace choquard {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Stopwatch {
 public:
  void lap(const std::string& name) {
    const auto now = std::chrono::steady_clock::now();
    times_[name] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  void set(const std::string& name, double seconds) { times_[name] = seconds; }
  const json& times() const { return times_; }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  json times_ = json::object();
};

fs::path prepare_dir(const RunConfig& cfg, const std::string& sub) {
  const fs::path dir = cfg.output_dir / sub;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("output.dir: cannot create " + dir.string());
  return dir;
}

json summary_head(const std::string& sub, const RunConfig& cfg, const RadialGrid* grid) {
  json j = {{"command", sub},
            {"config", cfg.echo()},
            {"inputs_hash", hex64(cfg.hash())},
            {"build", build_info()},
            {"warnings", cfg.warnings}};
  j["grid_hash"] = grid ? json(hex64(grid->hash())) : json(nullptr);
  if (grid) j["grid"] = {{"nodes", grid->size()}, {"r_max", grid->r_max()}, {"min_spacing", grid->min_spacing()}};
  return j;
}

int finish(json summary, const json& verdicts, const fs::path& dir, const Stopwatch& sw, std::ostream& log) {
  bool pass = true;
  for (const auto& [_, v] : verdicts.items()) pass = pass && v.get<bool>();
  summary["verdicts"] = verdicts;
  summary["pass"] = pass;
  write_json(summary, dir / "summary.json");
  write_json({{"seconds", sw.times()}}, dir / "timings.json");
  for (const auto& [name, v] : verdicts.items()) log << (v.get<bool>() ? "PASS " : "FAIL ") << name << '\n';
  log << "wrote " << (dir / "summary.json").string() << '\n';
  return pass ? kExitPass : kExitVerdict;
}

std::shared_ptr<const ConvolutionOperator> shared_op(GridPtr g, const KernelSpec& spec, const OperatorOptions& o) {
  return std::make_shared<const ConvolutionOperator>(build_operator(std::move(g), spec, o));
}

std::vector<double> radii(const RadialGrid& g) { return {g.nodes().begin(), g.nodes().end()}; }

// ---------------------------------------------------------------- solve

int run_solve(const RunConfig& cfg, std::ostream& log) {
  Stopwatch sw;
  const auto dir = prepare_dir(cfg, "solve");
  auto grid = make_grid(cfg.grid);
  const auto nl = Nonlinearity::from_params(cfg.nonlinearity);
  auto op = shared_op(grid, KernelSpec::galpha(cfg.kernel_alpha), cfg.operator_options());
  sw.lap("operator");
  EnergyModel model(nl, op);
  const auto r = mountain_pass(model, cfg.solver_options());
  sw.lap("solve");
  const auto diag = cerami_diagnostics(r.u_star, nl, r.c_level);
  sw.lap("diagnostics");

  write_csv(r.u_star, dir / "u_star.csv");
  CsvTable it;
  it.header = {"iter", "phase", "c_level", "residual", "step"};
  for (const auto& rec : r.log)
    it.add_cells({std::to_string(rec.iter), rec.phase, format_double(rec.c_level), format_double(rec.residual),
                  format_double(rec.step)});
  it.write(dir / "iterations.csv");

  json summary = summary_head("solve", cfg, grid.get());
  summary["result"] = r.to_json();
  summary["cerami"] = diag.to_json();
  const bool nonzero = h1_norm(r.u_star) > 0.0;
  if (nonzero) {
    const auto decay = decay_certificate(r.u_star, cfg.continuation.decay_R);
    summary["decay"] = decay.to_result().to_json();
    summary["radial_bound"] = radial_bound_check(r.u_star).to_json();
    if (cfg.output_svg) {
      const auto v = r.u_star.values();
      LinePlot prof{"mountain-pass profile", "r", "u", false, {{"u_star", radii(*grid), {v.begin(), v.end()}}}, {}};
      write_svg(prof, dir / "profile.svg");
      LinePlot dec{"decay fit", "r", "u", true, {}, {}};
      Series u{"u_star", {}, {}}, fit{"M exp(-rate r)", {}, {}};
      for (std::size_t i = 0; i < grid->size(); ++i) {
        if (grid->r(i) < 0.5 || grid->r(i) > grid->r_max() / 2) continue;
        u.x.push_back(grid->r(i));
        u.y.push_back(r.u_star[i]);
        fit.x.push_back(grid->r(i));
        fit.y.push_back(decay.M * std::exp(-decay.rate * grid->r(i)));
      }
      dec.series = {u, fit};
      write_svg(dec, dir / "decay.svg");
    }
  }
  json verdicts = {{"converged", r.converged && r.residual <= cfg.solver.tol},
                   {"positive", r.positivity_flag},
                   {"cerami_bounds", diag.pass()}};
  log << "c = " << format_double(r.c_level) << ", residual " << r.residual << ", " << r.iterations
      << " path iterations, " << r.newton_iterations << " newton steps\n";
  return finish(summary, verdicts, dir, sw, log);
}

// ---------------------------------------------------------------- continue

int run_continue(const RunConfig& cfg, std::ostream& log) {
  Stopwatch sw;
  const auto dir = prepare_dir(cfg, "continue");
  auto grid = make_grid(cfg.grid);
  const auto nl = Nonlinearity::from_params(cfg.nonlinearity);
  const auto schedule = geometric_schedule(cfg.continuation.alpha0, cfg.continuation.steps);
  ContinuationOptions co;
  co.solver = cfg.solver_options();
  co.operators = cfg.operator_options();
  co.decay_R = cfg.continuation.decay_R;
  const auto trace = run_continuation(nl, grid, schedule, co);
  sw.lap("continuation");

  CsvTable t;
  t.header = {"alpha", "c", "residual", "dh1", "log_residual", "decay_rate"};
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    const auto& s = trace.steps[k];
    t.add({s.alpha, s.c, s.residual, s.dh1, s.log_residual, s.decay.rate});
    char name[32];
    std::snprintf(name, sizeof(name), "u_%02zu.csv", k);
    write_csv(s.u, dir / name);
  }
  t.write(dir / "trace.csv");

  json tails = json::array();
  bool tails_ok = true;
  for (double a : schedule) {
    auto tr = tail_kernel_bound_check(a, cfg.continuation.omega);
    if (tr.applicable) tails_ok = tails_ok && tr.pass;
    tails.push_back(tr.to_json());
  }
  json summary = summary_head("continue", cfg, grid.get());
  summary["trace"] = trace.to_json();
  for (std::size_t k = 0; k < trace.steps.size(); ++k) {
    summary["trace"]["steps"][k].erase("seconds");
    sw.set("step_" + std::to_string(k), trace.steps[k].seconds);
  }
  summary["tail_kernel"] = tails;

  if (cfg.output_svg && !trace.steps.empty()) {
    Series dh{"||u_k - u_k-1||", {}, {}}, lr{"log residual", {}, {}}, lv{"c_k", {}, {}};
    for (const auto& s : trace.steps) {
      if (s.dh1 > 0.0) {
        dh.x.push_back(std::log2(s.alpha));
        dh.y.push_back(s.dh1);
      }
      lr.x.push_back(std::log2(s.alpha));
      lr.y.push_back(s.log_residual);
      lv.x.push_back(std::log2(s.alpha));
      lv.y.push_back(s.c);
    }
    write_svg({"continuation trace", "log2 alpha", "size", true, {dh, lr}, {{"1e-3", 1e-3}}}, dir / "trace.svg");
    write_svg({"mountain-pass levels", "log2 alpha", "c", false, {lv}, {{"1/2", 0.5}}}, dir / "levels.svg");
  }

  log << trace.steps.size() << " steps, final log residual " << trace.final_log_residual << '\n';
  if (trace.truncated) {
    summary["verdicts"] = json::object();
    summary["pass"] = false;
    write_json(summary, dir / "summary.json");
    write_json({{"seconds", sw.times()}}, dir / "timings.json");
    log << "truncated: " << trace.message << '\n';
    return kExitNumerical;
  }
  json verdicts = {{"cauchy_decreasing", trace.cauchy_decreasing},
                   {"levels_in_window", trace.levels_in_window},
                   {"nontrivial", trace.nontrivial},
                   {"log_residual", trace.log_residual_ok},
                   {"decay_uniform", trace.decay_uniform},
                   {"tail_kernel", tails_ok}};
  return finish(summary, verdicts, dir, sw, log);
}

// ---------------------------------------------------------------- certify

json moser_set(const RunConfig& cfg, bool& ok) {
  auto base = make_grid(20000, cfg.grid.r_max, 1.02, cfg.grid.core_cut);
  json rows = json::array();
  ok = true;
  for (int n : {10, 100, 1000}) {
    const MoserConfig mc{n, cfg.nonlinearity.rho};
    mc.validate();
    auto g = moser_grid(*base, mc);
    const auto w = moser_w(mc, g);
    const double quad = h1_norm_sq(*g, w.values()), closed = moser_norm_closed(mc);
    const double rel = std::abs(quad - closed) / closed;
    ok = ok && rel <= 1e-4;
    rows.push_back({{"n", n},
                    {"delta_n", moser_delta(n)},
                    {"closed_form", closed},
                    {"quadrature", quad},
                    {"relative_error", rel},
                    {"w_at_0", w[0]},
                    {"pass", rel <= 1e-4}});
  }
  return {{"name", "moser_norm"}, {"rho", cfg.nonlinearity.rho}, {"nodes", base->size()}, {"rows", rows}, {"pass", ok}};
}

json level_set(const RunConfig& cfg, const fs::path& dir, bool& ok) {
  const MoserConfig mc{cfg.certify.moser_n, cfg.nonlinearity.rho};
  mc.validate();
  const auto nl = Nonlinearity::from_params(cfg.nonlinearity);
  auto grid = moser_grid(*make_grid(cfg.grid), mc);
  auto log_op = build_operator(grid, KernelSpec::log(), cfg.operator_options());
  json certs = json::array();
  CsvTable t;
  t.header = {"alpha", "t", "level", "psi"};
  LinePlot plot{"level curves t -> I(t w_n)", "t", "I", false, {}, {{"1/2", 0.5}}};
  ok = true;
  for (double a : {0.5, 0.1, 0.02}) {
    EnergyModel m(nl, shared_op(grid, KernelSpec::galpha(a), cfg.operator_options()));
    const auto mesh = level_t_mesh(mc, m);
    try {
      const auto c = level_certificate(mc, m, log_op, mesh);
      ok = ok && c.pass();
      certs.push_back(c.to_json());
      Series s{"alpha = " + format_double(a), c.t_mesh, c.levels};
      for (std::size_t i = 0; i < c.t_mesh.size(); ++i) t.add({a, c.t_mesh[i], c.levels[i], c.psi[i]});
      plot.series.push_back(std::move(s));
    } catch (const ConfigError& e) {
      ok = false;
      certs.push_back({{"alpha", a}, {"applicable", false}, {"pass", false}, {"detail", e.what()}});
    }
  }
  t.write(dir / "level_curves.csv");
  if (cfg.output_svg) write_svg(plot, dir / "level_curves.svg");
  return {{"name", "level"}, {"n", mc.n}, {"rho", mc.rho}, {"grid_hash", hex64(grid->hash())},
          {"threshold", fm_threshold(mc.rho)}, {"beta", nl.beta()}, {"certificates", certs}, {"pass", ok}};
}

json kernel_set(bool& ok) {
  const double alphas[] = {0.1, 0.03, 0.01, 0.003, 0.001};
  const auto limit = kernel_limit_check(alphas);
  std::vector<double> mesh;
  for (int k = 0; k <= 4000; ++k) mesh.push_back(std::pow(10.0, -12.0 + 12.0 * k / 4000.0));
  for (int k = 1; k <= 400; ++k) mesh.push_back(1.0 + 19.0 * k / 400.0);
  json lower = json::array();
  ok = limit.pass;
  for (double a : {0.5, 0.1, 0.01}) {
    const auto r = g_alpha_bounds(a, 1.0, mesh);
    ok = ok && r.pass;
    lower.push_back(r.to_json());
  }
  return {{"name", "kernel"}, {"limit", limit.to_json()}, {"lower_bound", lower}, {"pass", ok}};
}

json tail_set(const RunConfig& cfg, bool& ok) {
  json rows = json::array();
  ok = true;
  std::size_t applicable = 0;
  for (double a : geometric_schedule(cfg.continuation.alpha0, cfg.continuation.steps)) {
    const auto r = tail_kernel_bound_check(a, cfg.continuation.omega);
    if (r.applicable) {
      ++applicable;
      ok = ok && r.pass;
    }
    rows.push_back(r.to_json());
  }
  return {{"name", "tail_kernel"},
          {"omega", cfg.continuation.omega},
          {"admissible_alpha_max", admissible_alpha_max(cfg.continuation.omega)},
          {"applicable", applicable},
          {"checks", rows},
          {"pass", ok}};
}

int run_certify(const RunConfig& cfg, std::ostream& log) {
  Stopwatch sw;
  const auto dir = prepare_dir(cfg, "certify");
  json summary = summary_head("certify", cfg, nullptr);
  json verdicts = json::object();
  json reports = json::object();
  for (const auto& set : cfg.certify.sets) {
    bool ok = false;
    json rep;
    if (set == "moser") rep = moser_set(cfg, ok);
    else if (set == "level") rep = level_set(cfg, dir, ok);
    else if (set == "hls") {
      const auto r = hls_certificate(cfg.kernel_alpha, cfg.certify.hls_trials, cfg.certify.seed);
      ok = r.pass;
      rep = r.to_json();
    } else if (set == "kernel") rep = kernel_set(ok);
    else if (set == "tail") rep = tail_set(cfg, ok);
    else throw ConfigError("certify.sets: unknown certificate set '" + set + "'");
    sw.lap(set);
    write_json(rep, dir / (set + ".json"));
    reports[set] = (dir / (set + ".json")).filename().string();
    verdicts[set] = ok;
  }
  summary["reports"] = reports;
  return finish(summary, verdicts, dir, sw, log);
}

// ---------------------------------------------------------------- check-nonlinearity

int run_check_nonlinearity(const RunConfig& cfg, std::ostream& log) {
  Stopwatch sw;
  const auto dir = prepare_dir(cfg, "check-nonlinearity");
  const auto nl = Nonlinearity::from_params(cfg.nonlinearity);
  const auto rep = check_assumptions(nl, default_t_mesh(nl));
  sw.lap("audit");
  json summary = summary_head("check-nonlinearity", cfg, nullptr);
  summary["report"] = rep.to_json();
  write_json(rep.to_json(), dir / "assumptions.json");

  CsvTable t;
  t.header = {"t", "F", "f", "fprime", "ratio"};
  Series ratio{"F f' / f^2", {}, {}};
  for (double s : default_t_mesh(nl, 400)) {
    try {
      t.add({s, nl.F(s), nl.f(s), nl.fprime(s), nl.ratio(s)});
      ratio.x.push_back(s);
      ratio.y.push_back(nl.ratio(s));
    } catch (const RangeError&) {
      break;
    }
  }
  t.write(dir / "profile.csv");
  if (cfg.output_svg)
    write_svg({"(f2) quotient for " + nl.name(), "t", "ratio", false, {ratio}, {{"tau", nl.tau()}, {"C", nl.C()}}},
              dir / "ratio.svg");

  json verdicts = json::object();
  for (const auto& c : rep.checks) verdicts[c.name] = c.pass;
  if (rep.domain_singularity) log << "domain singularity at t = " << rep.singularity_at << '\n';
  return finish(summary, verdicts, dir, sw, log);
}

// ---------------------------------------------------------------- kernel-table

int run_kernel_table(const RunConfig& cfg, const KernelTableArgs& args, std::ostream& log) {
  Stopwatch sw;
  const auto dir = prepare_dir(cfg, "kernel-table");
  const double alpha = args.alpha.value_or(cfg.kernel_alpha);
  KernelSpec spec;
  if (args.kind == "galpha") spec = KernelSpec::galpha(alpha);
  else if (args.kind == "riesz") spec = KernelSpec::riesz(alpha);
  else if (args.kind == "log") spec = KernelSpec::log();
  else throw ConfigError("--kind: expected galpha, riesz or log, got '" + args.kind + "'");
  spec.validate();
  if (args.points < 2 || !(args.s_max > 0.0)) throw ConfigError("--points must be >= 2 and --smax positive");

  std::vector<double> mesh(args.points);
  for (std::size_t i = 0; i < args.points; ++i)
    mesh[i] = args.s_max * static_cast<double>(i + 1) / static_cast<double>(args.points);
  CsvTable t;
  t.header = {"r", "s", "average"};
  for (double r : mesh)
    for (double s : mesh) t.add({r, s, angular_avg(spec, r, s)});
  t.write(dir / "kernel_table.csv");
  sw.lap("table");

  json summary = summary_head("kernel-table", cfg, nullptr);
  summary["kernel"] = {{"kind", to_string(spec.kind)}, {"alpha", spec.kind == KernelKind::log ? json(nullptr) : json(alpha)}};
  summary["mesh"] = mesh;
  summary["rows"] = t.rows.size();
  return finish(summary, json{{"table_finite", true}}, dir, sw, log);
}

json error_record(const std::string& kind, const std::string& what, int code, const std::string& sub) {
  return {{"error", {{"kind", kind}, {"message", what}, {"exit_code", code}, {"subcommand", sub}}}};
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"solve", "continue", "certify", "check-nonlinearity", "kernel-table"};
  return s;
}

int dispatch(const std::string& sub, const RunConfig& cfg, std::ostream& log, const KernelTableArgs& table) {
  for (const auto& w : cfg.warnings) log << "warning: " << w << '\n';
  if (sub == "solve") return run_solve(cfg, log);
  if (sub == "continue") return run_continue(cfg, log);
  if (sub == "certify") return run_certify(cfg, log);
  if (sub == "check-nonlinearity") return run_check_nonlinearity(cfg, log);
  if (sub == "kernel-table") return run_kernel_table(cfg, table, log);
  throw ConfigError("unknown subcommand '" + sub + "'");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variational solver and certificate checker for the planar logarithmic Choquard equation", "choquard"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::vector<std::string> params;
  app.add_option("-c,--config", config_path, "config file (section.key = value lines)");
  app.add_option("-p,--param", params, "override one key, e.g. -p grid.n=1024");
  app.add_option("-o,--out", out_dir, "output directory (output.dir)");

  std::optional<double> solve_alpha;
  auto* solve = app.add_subcommand("solve", "mountain-pass solve at the configured alpha");
  solve->add_option("--alpha", solve_alpha, "kernel.alpha");

  std::optional<double> alpha0;
  std::optional<std::size_t> steps;
  auto* cont = app.add_subcommand("continue", "alpha -> 0 continuation with warm starts");
  cont->add_option("--alpha0", alpha0, "continuation.alpha0");
  cont->add_option("--steps", steps, "continuation.steps");

  std::vector<std::string> sets;
  auto* cert = app.add_subcommand("certify", "closed-form and inequality certificates");
  cert->add_option("--set", sets, "certificate set: moser, level, hls, kernel, tail (repeatable)");

  std::optional<std::string> family;
  auto* chk = app.add_subcommand("check-nonlinearity", "audit the growth assumptions of a nonlinearity");
  chk->add_option("--family", family, "nonlinearity.family");

  KernelTableArgs table;
  auto* kt = app.add_subcommand("kernel-table", "CSV of circle averages on an (r, s) mesh");
  kt->add_option("--alpha", table.alpha, "kernel exponent (kernel.alpha when omitted)");
  kt->add_option("--kind", table.kind, "galpha, riesz or log");
  kt->add_option("--points", table.points, "mesh points per axis");
  kt->add_option("--smax", table.s_max, "largest radius of the mesh");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    err << error_record("usage", e.what(), kExitUsage, "").dump() << '\n';
    return kExitUsage;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  json record;
  int code = kExitPass;
  try {
    if (!config_path.empty()) cfg = parse_config(config_path);
    for (const auto& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + p + "'");
      apply_setting(cfg, p.substr(0, eq), p.substr(eq + 1));
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (solve_alpha) cfg.kernel_alpha = *solve_alpha;
    if (alpha0) cfg.continuation.alpha0 = *alpha0;
    if (steps) apply_setting(cfg, "continuation.steps", std::to_string(*steps));
    if (!sets.empty()) {
      std::string joined;
      for (const auto& s : sets) joined += (joined.empty() ? "" : ",") + s;
      apply_setting(cfg, "certify.sets", joined);
    }
    if (family) apply_setting(cfg, "nonlinearity.family", *family);
    cfg.warnings.clear();
    validate(cfg);
    return dispatch(sub, cfg, out, table);
  } catch (const ConfigError& e) {
    code = kExitUsage;
    record = error_record("config", e.what(), code, sub);
  } catch (const GridMismatch& e) {
    code = kExitUsage;
    record = error_record("grid_mismatch", e.what(), code, sub);
  } catch (const RangeError& e) {
    code = kExitNumerical;
    record = error_record("range", e.what(), code, sub);
    record["error"]["at"] = e.at();
  } catch (const NumericalError& e) {
    code = kExitNumerical;
    record = error_record("numerical", e.what(), code, sub);
  } catch (const std::exception& e) {
    code = kExitNumerical;
    record = error_record("internal", e.what(), code, sub);
  }
  err << "error: " << record["error"]["message"].get<std::string>() << '\n';
  err << record.dump() << '\n';
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  std::error_code ec;
  const fs::path dir = cfg.output_dir / sub;
  if (fs::create_directories(dir, ec), !ec && fs::is_directory(dir)) write_json(record, dir / "error.json");
  return code;
}

}  // namespace choquard
