#include "grinn/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "grinn/error.hpp"
#include "grinn/harness.hpp"
#include "grinn/io.hpp"
#include "grinn/linear_theory.hpp"

namespace grinn {

namespace fs = std::filesystem;

namespace {

const char* module_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_domain:
    case ErrorKind::unknown_case:
    case ErrorKind::invalid_config: return "units_domain";
    case ErrorKind::regime:
    case ErrorKind::singular_mode:
    case ErrorKind::unsupported_regime: return "linear_theory";
    case ErrorKind::solver_failure:
    case ErrorKind::positivity_failure: return "fd_reference";
    case ErrorKind::evaluation:
    case ErrorKind::shape: return "neural_core";
    case ErrorKind::training_failure: return "grinn_model";
    case ErrorKind::fit_failure:
    case ErrorKind::query: return "benchmark_harness";
    case ErrorKind::parse:
    case ErrorKind::io: return "cli_io";
  }
  return "unknown";
}

std::string quoted(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

std::string time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

// Options shared by every solver-facing subcommand.
struct CommonOptions {
  std::string case_name;
  int dim = 0;
  std::string config_file;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("--case", case_name, "case id: 1, 1o, 2, 3, sound, shock or a full name");
    app->add_option("--dim", dim, "spatial dimension")->check(CLI::Range(1, 3));
    app->add_option("--config", config_file, "key = value config file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override a config key (key=value), repeatable");
    app->add_option("--seed", seed, "master seed")->each([this](const std::string&) {
      seed_given = true;
    });
    app->add_option("--out", out_dir, "output directory");
    app->add_flag("--quiet", quiet, "suppress training progress");
  }

  CaseConfig resolve() const {
    KeyValues file_values;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      file_values = parse_key_values(text);
    }
    KeyValues flags;
    if (!case_name.empty()) flags.emplace_back("case", case_name);
    if (dim > 0) flags.emplace_back("dim", std::to_string(dim));
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorKind::parse, "--set expects key=value, got '" + s + "'");
      }
      flags.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (seed_given) flags.emplace_back("seed", std::to_string(seed));
    return resolve_config(file_values, flags);
  }

  fs::path output(std::string_view command, const CaseConfig& c) const {
    if (!out_dir.empty()) return out_dir;
    return default_output_root() / (std::string(command) + "_" + std::string(to_string(c.id)));
  }
};

fs::path prepare_run(std::string_view command, const std::vector<std::string>& args,
                     const CommonOptions& common, const CaseConfig& config) {
  const fs::path dir = common.output(command, config);
  fs::create_directories(dir);
  write_manifest(make_manifest(std::string(command), args, config, dir.string()),
                 dir / "manifest.txt");
  std::ofstream(dir / "config.cfg") << serialize_config(config);
  return dir;
}

TrainOptions progress(const CommonOptions& common, std::ostream& err) {
  TrainOptions o;
  if (common.quiet) return o;
  o.on_progress = [&err](const LossReport& r) {
    if (r.epoch % 100 != 0) return;
    char buf[160];
    std::snprintf(buf, sizeof buf, "[%s %6d] loss %.4e (pde %.3e, bc %.3e, ic %.3e)\n",
                  to_string(r.phase), r.epoch, r.total, r.pde, r.boundary, r.initial);
    err << buf << std::flush;
  };
  return o;
}

void write_history(const fs::path& path, const TrainedModel& model) {
  std::ofstream out(path);
  out << "phase,epoch,total,pde,boundary,initial\n";
  char buf[160];
  for (const auto& r : model.history) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%.17g\n", to_string(r.phase),
                  r.epoch, r.total, r.pde, r.boundary, r.initial);
    out << buf;
  }
}

// Cell centers of the case's FD grid at time t.
std::vector<SpaceTimePoint> output_points(const CaseConfig& c, double t) {
  EvalGrid grid;
  grid.volume = true;
  return grid_points(grid, case_domain(c), c.fd.grid_points, t);
}

Snapshot snapshot_from_fields(const SampledFields& f, std::vector<SpaceTimePoint> pts,
                              const CaseConfig& c) {
  Snapshot s;
  s.dimension = f.dimension;
  s.points = std::move(pts);
  s.rho = f.rho;
  s.v = f.v;
  s.phi = f.phi;
  s.case_id = std::string(to_string(c.id));
  const DomainSpec dom = case_domain(c);
  s.shape = {1, 1, 1};
  for (int a = 0; a < c.dimension; ++a) {
    s.shape[a] = c.fd.grid_points;
    s.spacing[a] = dom.extent[a] / c.fd.grid_points;
  }
  return s;
}

int cmd_run(const CommonOptions& common, const std::string& solver_name,
            std::vector<double> times, const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CaseConfig c = common.resolve();
  if (!solver_name.empty()) c.solver = parse_solver(solver_name);
  const fs::path dir = prepare_run("run", args, common, c);
  const std::string tag(to_string(c.solver));
  if (c.solver == SolverKind::fd) {
    const Trajectory tr = evolve(c, times);
    for (double t : times) {
      for (const auto& s : tr.snapshots) {
        if (s.t == t) {
          const fs::path p = dir / ("fd_t" + time_tag(t) + ".csv");
          write_snapshot(snapshot_from_state(s, {}, std::string(to_string(c.id))), p);
          out << p.string() << '\n';
          break;
        }
      }
    }
    return 0;
  }
  std::optional<TrainedModel> model;
  if (c.solver == SolverKind::grinn) {
    model = train_case(c, {}, progress(common, err));
    save_model(dir / "model", *model);
    write_history(dir / "history.csv", *model);
  }
  const WaveMode mode = case_mode(c);
  for (double t : times) {
    std::vector<SpaceTimePoint> pts = output_points(c, t);
    const SampledFields f = model ? sample_model(*model, pts) : sample_mode(mode, pts);
    const fs::path p = dir / (tag + "_t" + time_tag(t) + ".csv");
    write_snapshot(snapshot_from_fields(f, std::move(pts), c), p);
    out << p.string() << '\n';
  }
  return 0;
}

void print_reports(std::ostream& out, std::span<const MismatchReport> reports) {
  char buf[200];
  out << "      t  field          mean%       std%       max%\n";
  for (const auto& r : reports) {
    for (const auto& f : r.fields) {
      if (f.kind == MismatchKind::literal) continue;
      std::snprintf(buf, sizeof buf, "%7.3f  %-8s %10.4f %10.4f %10.4f\n", r.t, f.field.c_str(),
                    f.mean, f.stddev, f.max);
      out << buf;
    }
  }
}

void write_reports(const fs::path& dir, std::span<const MismatchReport> reports, int d) {
  {
    std::ofstream s(dir / "mismatch_summary.csv");
    write_mismatch_summary(s, reports);
  }
  for (const auto& r : reports) {
    std::ofstream p(dir / ("mismatch_" + r.solver_a + "_" + r.solver_b + "_t" + time_tag(r.t) +
                           ".csv"));
    write_mismatch_points(p, r, d);
  }
}

struct CutOptions {
  int axis = 0;
  std::vector<double> transverse;
  int points = 0;
  bool volume = false;

  void attach(CLI::App* app) {
    app->add_option("--cut-axis", axis, "axis of the 1D cut")->check(CLI::Range(0, 2));
    app->add_option("--cut-at", transverse, "fixed coordinates x,y,z of the cut")
        ->delimiter(',')
        ->expected(1, 3);
    app->add_option("--points", points, "evaluation points per axis (default: FD grid)");
    app->add_flag("--volume", volume, "compare over the whole volume instead of a cut");
  }

  EvalGrid grid() const {
    EvalGrid g;
    g.axis = axis;
    g.volume = volume;
    g.points = points;
    for (std::size_t i = 0; i < transverse.size() && i < 3; ++i) g.transverse[i] = transverse[i];
    return g;
  }
};

int cmd_compare(const CommonOptions& common, const std::string& solvers,
                const std::vector<double>& times, const CutOptions& cut,
                const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const CaseConfig c = common.resolve();
  const auto comma = solvers.find(',');
  if (comma == std::string::npos) {
    throw Error(ErrorKind::parse, "solvers: expected two names separated by a comma");
  }
  CompareInputs in;
  in.a = parse_solver(solvers.substr(0, comma));
  in.b = parse_solver(solvers.substr(comma + 1));
  const fs::path dir = prepare_run("compare", args, common, c);
  std::optional<TrainedModel> model;
  if (in.a == SolverKind::grinn || in.b == SolverKind::grinn) {
    model = train_case(c, {}, progress(common, err));
    save_model(dir / "model", *model);
    write_history(dir / "history.csv", *model);
    in.model = &*model;
  }
  std::vector<MismatchReport> reports;
  try {
    reports = compare_case(c, in, times, cut.grid());
  } catch (const CompareFailure& f) {
    write_reports(dir, f.partial(), c.dimension);
    throw;
  }
  write_reports(dir, reports, c.dimension);
  print_reports(out, reports);
  out << "reports: " << (dir / "mismatch_summary.csv").string() << '\n';
  return 0;
}

int cmd_scale(const CommonOptions& common, const std::string& mode, const std::string& solver,
              ScalingOptions so, const std::vector<std::string>& args, std::ostream& out) {
  const CaseConfig c = common.resolve();
  const fs::path dir = prepare_run("scale", args, common, c);
  std::vector<ScalingRecord> records;
  if (mode == "dimension") {
    if (solver == "fd" || solver == "all") {
      auto r = fd_dimension_scaling(so);
      records.insert(records.end(), r.begin(), r.end());
    }
    if (solver == "grinn" || solver == "all") {
      auto r = grinn_dimension_scaling(so);
      records.insert(records.end(), r.begin(), r.end());
    }
  } else if (mode == "time") {
    if (solver == "grinn") {
      throw Error(ErrorKind::invalid_config, "mode: the time study applies to fd only");
    }
    records = fd_time_scaling(so);
  } else {
    throw Error(ErrorKind::parse, "mode: expected dimension or time, got '" + mode + "'");
  }
  std::ofstream f(dir / "scaling.csv");
  write_scaling(f, records);
  write_scaling(out, records);
  if (mode == "time") out << "linearity deviation " << linearity_deviation(records) << '\n';
  return 0;
}

int cmd_extrapolate(const CommonOptions& common, double train_to, double predict_to,
                    std::vector<double> times, const CutOptions& cut,
                    const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CaseConfig c = common.resolve();
  if (!(train_to > c.t_start) || !(predict_to >= train_to)) {
    throw Error(ErrorKind::invalid_config,
                "train-to: need t_start < train_to <= predict_to");
  }
  c.t_end = train_to;
  c.validate();
  const fs::path dir = prepare_run("extrapolate", args, common, c);
  const TrainedModel model = train_case(c, {}, progress(common, err));
  save_model(dir / "model", model);
  write_history(dir / "history.csv", model);
  if (times.empty()) {
    for (double t = 0.5; t < predict_to - 1e-9; t += 0.5) times.push_back(t);
    times.push_back(predict_to);
  }
  CompareInputs in;
  in.a = SolverKind::grinn;
  in.b = SolverKind::fd;
  in.model = &model;
  const auto reports = compare_case(c, in, times, cut.grid());
  write_reports(dir, reports, c.dimension);
  char buf[120];
  out << "      t  window        eps_bar%    std%\n";
  for (const auto& r : reports) {
    const FieldMismatch& f = r.field("rho");
    std::snprintf(buf, sizeof buf, "%7.3f  %-12s %9.4f %8.4f\n", r.t,
                  r.t <= train_to + 1e-12 ? "trained" : "extrapolated", f.mean, f.stddev);
    out << buf;
  }
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"GRINN and finite-difference solvers for self-gravitating isothermal flow", "grinn"};
  app.require_subcommand(1);

  CommonOptions run_common, cmp_common, scale_common, ext_common;
  std::string run_solver;
  std::vector<double> run_times;
  auto* run = app.add_subcommand("run", "run one solver and write snapshots");
  run_common.attach(run);
  run->add_option("--solver", run_solver, "grinn, fd or lt");
  run->add_option("--times", run_times, "output times")->delimiter(',')->required();

  std::string solvers = "grinn,lt";
  std::vector<double> cmp_times;
  CutOptions cmp_cut;
  auto* cmp = app.add_subcommand("compare", "compare two solvers and write mismatch reports");
  cmp_common.attach(cmp);
  cmp->add_option("--solvers", solvers, "solver pair, e.g. grinn,lt");
  cmp->add_option("--times", cmp_times, "comparison times")->delimiter(',')->required();
  cmp_cut.attach(cmp);

  std::string scale_mode = "dimension", scale_solver = "all";
  ScalingOptions so;
  auto* scale = app.add_subcommand("scale", "wall-clock scaling with dimension or time");
  scale_common.attach(scale);
  scale->add_option("--mode", scale_mode, "dimension or time");
  scale->add_option("--solver", scale_solver, "fd, grinn or all");
  scale->add_option("--reps", so.repetitions, "repetitions per point")->check(CLI::PositiveNumber);
  scale->add_option("--amplitude", so.amplitude, "perturbation amplitude of the timed case");
  scale->add_option("--fd-points", so.fd_points, "FD points per axis (dimension study)");
  scale->add_option("--fd-time", so.fd_time, "FD integration time (dimension study)");
  scale->add_option("--fd-time-points", so.fd_time_points, "FD points (time study)");
  scale->add_option("--times", so.times, "integration times (time study)")->delimiter(',');
  scale->add_option("--n-interior", so.n_interior, "GRINN interior points");
  scale->add_option("--iterations", so.iterations, "GRINN iterations timed per sample");

  double train_to = 1.0, predict_to = 3.0;
  std::vector<double> ext_times;
  CutOptions ext_cut;
  auto* ext = app.add_subcommand("extrapolate", "train on [0, train-to], compare to FD beyond");
  ext_common.attach(ext);
  ext->add_option("--train-to", train_to, "end of the training window");
  ext->add_option("--predict-to", predict_to, "last prediction time");
  ext->add_option("--times", ext_times, "comparison times (default: every 0.5)")->delimiter(',');
  ext_cut.attach(ext);

  std::string manifest_path, replay_out;
  auto* replay = app.add_subcommand("replay", "rerun a recorded manifest");
  replay->add_option("manifest", manifest_path, "manifest.txt of an earlier run")
      ->required()
      ->check(CLI::ExistingFile);
  replay->add_option("--out", replay_out, "output directory for the rerun")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error kind=usage module=cli_io message=" << quoted(e.what()) << '\n';
    return 2;
  }

  try {
    if (*run) return cmd_run(run_common, run_solver, run_times, args, out, err);
    if (*cmp) return cmd_compare(cmp_common, solvers, cmp_times, cmp_cut, args, out, err);
    if (*scale) return cmd_scale(scale_common, scale_mode, scale_solver, so, args, out);
    if (*ext) {
      return cmd_extrapolate(ext_common, train_to, predict_to, ext_times, ext_cut, args, out, err);
    }
    if (*replay) {
      // Rerun from the recorded config rather than the original flags, so
      // edits to a referenced config file cannot change the result.
      const RunManifest m = read_manifest(manifest_path);
      fs::create_directories(replay_out);
      const fs::path cfg = fs::path(replay_out) / "replayed.cfg";
      std::ofstream(cfg) << serialize_config(m.config);
      static const std::vector<std::string> dropped{"--out",  "--config", "--set",
                                                    "--case", "--dim",    "--seed"};
      std::vector<std::string> again;
      for (std::size_t i = 0; i < m.arguments.size(); ++i) {
        const std::string& a = m.arguments[i];
        bool drop = false;
        for (const auto& opt : dropped) {
          if (a == opt) {
            ++i;
            drop = true;
          } else if (a.rfind(opt + "=", 0) == 0) {
            drop = true;
          }
        }
        if (!drop) again.push_back(a);
      }
      again.insert(again.end(), {"--config", cfg.string(), "--out", replay_out});
      return run_command(again, out, err);
    }
  } catch (const Error& e) {
    err << "error kind=" << to_string(e.kind()) << " module=" << module_of(e.kind())
        << " message=" << quoted(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error kind=internal module=cli_io message=" << quoted(e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace grinn
