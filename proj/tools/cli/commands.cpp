#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <set>

#include <difflab/discrete.hpp>
#include <difflab/eval.hpp>
#include <difflab/forward.hpp>
#include <difflab/io.hpp>
#include <difflab/net.hpp>
#include <difflab/sample.hpp>
#include <difflab/schedule.hpp>
#include <difflab/target.hpp>
#include <difflab/train.hpp>

#include "cli.hpp"
#include "manifest.hpp"

namespace fs = std::filesystem;

namespace difflab::cli {

namespace {

std::string num(double v) { return io::format_double(v); }

fs::path resolve_out(const std::string& out, const std::string& command) {
  fs::path dir = out.empty() ? fs::path(default_output_root()) / command : fs::path(out);
  dir = fs::absolute(dir).lexically_normal();
  fs::create_directories(dir);
  return dir;
}

fs::path require_input(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError(what + " path is empty");
  if (!fs::is_regular_file(path)) throw InputMissingError(what + " not found: " + path);
  return fs::absolute(path).lexically_normal();
}

std::vector<int> parse_steps(const std::string& text, int T, const std::string& flag) {
  std::vector<int> steps;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string token = text.substr(pos, comma - pos);
    int v = 0;
    try {
      std::size_t used = 0;
      v = std::stoi(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw UsageError(flag + ": not an integer: '" + token + "'");
    }
    if (v < 0 || v >= T) throw UsageError(flag + ": step " + token + " outside [0, " + std::to_string(T) + ")");
    steps.push_back(v);
    pos = comma + 1;
  }
  return steps;
}

// Reference steps are given for T = 100 and mapped onto [0, T-1].
std::vector<int> scaled_steps(std::initializer_list<int> reference, int T) {
  std::vector<int> out;
  std::set<int> seen;
  for (int r : reference) {
    const int v = static_cast<int>(std::lround(r * (T - 1) / 99.0));
    if (seen.insert(v).second) out.push_back(v);
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

// Schedule flags shared by train, schedule and diffuse.
struct ScheduleOpts {
  std::string kind = "cosine";
  int T = 100;
  std::optional<double> s;
  std::optional<double> beta_start;
  std::optional<double> beta_end;

  void add_to(CLI::App* app, const std::string& kind_flag) {
    app->add_option(kind_flag, kind, "noise schedule: linear or cosine")->capture_default_str();
    app->add_option("--T", T, "number of diffusion steps")->capture_default_str();
    app->add_option("--cosine-s", s, "cosine offset s (default 0.008)");
    app->add_option("--beta-start", beta_start, "first beta of a linear schedule");
    app->add_option("--beta-end", beta_end, "last beta of a linear schedule");
  }

  ScheduleKind parsed_kind() const { return parse_schedule_kind(kind); }

  void validate() const {
    if (T < 1) throw UsageError("--T must be at least 1");
    const ScheduleKind k = parsed_kind();
    if (k == ScheduleKind::Cosine && (beta_start || beta_end)) {
      throw UsageError("--beta-start/--beta-end apply to the linear schedule only");
    }
    if (k == ScheduleKind::Linear && s) throw UsageError("--cosine-s applies to the cosine schedule only");
    if (beta_start.has_value() != beta_end.has_value()) throw UsageError("give both --beta-start and --beta-end");
  }

  Schedule build() const {
    validate();
    if (parsed_kind() == ScheduleKind::Cosine) return Schedule::cosine(T, s.value_or(kDefaultCosineOffset));
    if (beta_start) return Schedule::linear(T, *beta_start, *beta_end);
    return Schedule::linear_default(T);
  }

  void apply(TrainConfig& c) const {
    validate();
    c.schedule = parsed_kind();
    c.T = T;
    c.cosine_offset = s.value_or(kDefaultCosineOffset);
    if (beta_start) c.linear_betas = std::pair{*beta_start, *beta_end};
  }

  void replay(std::vector<std::string>& args, const std::string& kind_flag) const {
    args.insert(args.end(), {kind_flag, to_string(parsed_kind()), "--T", std::to_string(T)});
    if (parsed_kind() == ScheduleKind::Cosine) {
      args.insert(args.end(), {"--cosine-s", num(s.value_or(kDefaultCosineOffset))});
    } else if (beta_start) {
      args.insert(args.end(), {"--beta-start", num(*beta_start), "--beta-end", num(*beta_end)});
    }
  }

  Json json() const {
    Json j{{"kind", to_string(parsed_kind())}, {"T", T}};
    if (parsed_kind() == ScheduleKind::Cosine) {
      j["cosine_s"] = s.value_or(kDefaultCosineOffset);
    } else if (beta_start) {
      j["beta_start"] = *beta_start;
      j["beta_end"] = *beta_end;
    } else {
      j["endpoints"] = "default";
    }
    return j;
  }

  void to_meta(std::map<std::string, std::string>& meta) const {
    meta["schedule"] = to_string(parsed_kind());
    meta["T"] = std::to_string(T);
    if (parsed_kind() == ScheduleKind::Cosine) meta["cosine_s"] = num(s.value_or(kDefaultCosineOffset));
    if (beta_start) {
      meta["beta_start"] = num(*beta_start);
      meta["beta_end"] = num(*beta_end);
    }
  }

  static ScheduleOpts from_meta(const std::map<std::string, std::string>& meta) {
    auto get = [&](const std::string& key) -> const std::string& {
      auto it = meta.find(key);
      if (it == meta.end()) throw UsageError("checkpoint metadata lacks '" + key + "'");
      return it->second;
    };
    ScheduleOpts o;
    o.kind = get("schedule");
    o.T = std::stoi(get("T"));
    if (meta.count("cosine_s")) o.s = io::parse_double(get("cosine_s"));
    if (meta.count("beta_start")) {
      o.beta_start = io::parse_double(get("beta_start"));
      o.beta_end = io::parse_double(get("beta_end"));
    }
    return o;
  }
};

struct LoadedModel {
  Checkpoint checkpoint;
  Objective objective;
  ScheduleOpts schedule_opts;
  Schedule schedule;
};

LoadedModel load_model(const fs::path& path) {
  Checkpoint ck = load_checkpoint(path);
  auto it = ck.meta.find("objective");
  if (it == ck.meta.end()) throw UsageError("checkpoint metadata lacks 'objective'");
  const Objective objective = parse_objective(it->second);
  ScheduleOpts opts = ScheduleOpts::from_meta(ck.meta);
  Schedule schedule = opts.build();
  return {std::move(ck), objective, std::move(opts), std::move(schedule)};
}

RunManifest base_manifest(const std::string& command, const std::vector<std::string>& argv) {
  RunManifest m;
  m.command = command;
  m.argv = argv;
  m.replay = {command};
  return m;
}

// gen ------------------------------------------------------------------------

Command gen_command(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out) {
  struct Opts {
    long long n = 10000;
    std::uint64_t seed = 0;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("gen", "sample a training set from the 2-D mixture");
  sub->add_option("--n", o->n, "number of points")->capture_default_str();
  sub->add_option("--seed", o->seed, "random seed")->capture_default_str();
  sub->add_option("--out", o->out, "run directory");
  return {sub, [o, &argv, &out] {
            if (o->n <= 0) throw UsageError("--n must be positive");
            const fs::path dir = resolve_out(o->out, "gen");
            const GmmTarget target = default_target();
            const Dataset ds = sample(target, static_cast<std::size_t>(o->n), o->seed);
            write_dataset(dir / "data.csv", dir / "data.json", ds, target);

            RunManifest m = base_manifest("gen", argv);
            m.replay.insert(m.replay.end(), {"--n", std::to_string(o->n), "--seed", std::to_string(o->seed)});
            m.seed = o->seed;
            m.config = {{"n", o->n}, {"seed", o->seed}};
            m.outputs = {"data.csv", "data.json"};
            write_manifest(dir, m);
            out << "wrote " << o->n << " points to " << (dir / "data.csv").string() << "\n";
            return kOk;
          }};
}

// train ----------------------------------------------------------------------

Command train_command(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out) {
  struct Opts {
    std::string data;
    std::string objective = "noise";
    std::string forward = "gaussian";
    ScheduleOpts schedule;
    int epochs = 50;
    long long batch = 64;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("train", "train the denoising network on a dataset");
  sub->add_option("--data", o->data, "dataset CSV (x,y)")->required();
  sub->add_option("--objective", o->objective, "noise, whole or single")->capture_default_str();
  sub->add_option("--forward", o->forward, "gaussian or deterministic")->capture_default_str();
  o->schedule.add_to(sub, "--schedule");
  sub->add_option("--epochs", o->epochs)->capture_default_str();
  sub->add_option("--batch", o->batch)->capture_default_str();
  sub->add_option("--lr", o->lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--seed", o->seed)->capture_default_str();
  sub->add_option("--out", o->out, "run directory");
  return {sub, [o, &argv, &out] {
            TrainConfig config;
            config.objective = parse_objective(o->objective);
            config.forward = parse_forward_kind(o->forward);
            o->schedule.apply(config);
            if (o->batch <= 0) throw UsageError("--batch must be positive");
            config.batch_size = static_cast<std::size_t>(o->batch);
            config.epochs = o->epochs;
            config.learning_rate = o->lr;
            config.seed = o->seed;
            config.validate();

            const fs::path data = require_input(o->data, "dataset");
            const std::vector<Vec2> points = io::read_points_csv(data);
            const fs::path dir = resolve_out(o->out, "train");
            const TrainResult result = train_run(config, points);

            Checkpoint ck{result.mlp, {}};
            ck.meta["objective"] = to_string(config.objective);
            ck.meta["forward"] = to_string(config.forward);
            o->schedule.to_meta(ck.meta);
            ck.meta["epochs"] = std::to_string(config.epochs);
            ck.meta["batch"] = std::to_string(config.batch_size);
            ck.meta["lr"] = num(config.learning_rate);
            ck.meta["seed"] = std::to_string(config.seed);
            ck.meta["data_sha256"] = io::sha256_file(data);
            save_checkpoint(dir / "checkpoint.json", ck);
            io::write_file(dir / "loss.csv", loss_trace_csv(result.epoch_loss));

            Json cfg;
            cfg["objective"] = to_string(config.objective);
            cfg["forward"] = to_string(config.forward);
            cfg["schedule"] = o->schedule.json();
            cfg["epochs"] = config.epochs;
            cfg["batch"] = config.batch_size;
            cfg["lr"] = config.learning_rate;
            cfg["seed"] = config.seed;
            cfg["n_points"] = points.size();
            cfg["optimizer_steps"] = result.steps;
            io::write_file(dir / "config.json", cfg.dump(2) + "\n");

            RunManifest m = base_manifest("train", argv);
            m.replay.insert(m.replay.end(), {"--data", data.string(), "--objective", to_string(config.objective),
                                             "--forward", to_string(config.forward)});
            o->schedule.replay(m.replay, "--schedule");
            m.replay.insert(m.replay.end(),
                            {"--epochs", std::to_string(config.epochs), "--batch", std::to_string(config.batch_size),
                             "--lr", num(config.learning_rate), "--seed", std::to_string(config.seed)});
            m.seed = config.seed;
            m.kinds = {{"schedule", to_string(config.schedule)},
                       {"forward", to_string(config.forward)},
                       {"objective", to_string(config.objective)}};
            m.config = cfg;
            m.inputs = {{"data", data}};
            m.outputs = {"checkpoint.json", "loss.csv", "config.json"};
            write_manifest(dir, m);
            out << "trained " << result.steps << " steps, final loss " << num(result.epoch_loss.back()) << "\n";
            return kOk;
          }};
}

// sample ---------------------------------------------------------------------

Command sample_command(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out) {
  struct Opts {
    std::string checkpoint;
    std::string kind;
    std::string init = "grid";
    long long n = 10000;
    std::string record;
    std::uint64_t seed = 0;
    std::optional<double> clip;
    bool svg = false;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("sample", "run the reverse process from a checkpoint");
  sub->add_option("--checkpoint", o->checkpoint)->required();
  sub->add_option("--kind", o->kind, "sampler: noise, whole or single (default: match the checkpoint)");
  sub->add_option("--init", o->init, "grid or gaussian")->capture_default_str();
  sub->add_option("--n", o->n, "particles (a perfect square for grid init)")->capture_default_str();
  sub->add_option("--record", o->record, "comma-separated steps to record (default 99,54,36,18,0 for T=100)");
  sub->add_option("--seed", o->seed)->capture_default_str();
  sub->add_option("--clip", o->clip, "clamp clean-point estimates to [-c, c]");
  sub->add_flag("--svg", o->svg, "also write one SVG scatter per snapshot");
  sub->add_option("--out", o->out, "run directory");
  return {sub, [o, &argv, &out] {
            const fs::path ck_path = require_input(o->checkpoint, "checkpoint");
            const LoadedModel model = load_model(ck_path);
            const SamplerKind kind = o->kind.empty() ? sampler_for(model.objective) : parse_sampler_kind(o->kind);
            check_compatible(kind, model.objective);
            const InitMode init = parse_init_mode(o->init);
            if (o->n <= 0) throw UsageError("--n must be positive");
            const int T = model.schedule.steps();
            const std::vector<int> record =
                o->record.empty() ? scaled_steps({99, 54, 36, 18, 0}, T) : parse_steps(o->record, T, "--record");
            SamplerOptions options;
            if (o->clip) {
              if (!(*o->clip > 0.0)) throw UsageError("--clip must be positive");
              options.clip = o->clip;
            }

            const std::vector<Vec2> particles = init_particles(init, static_cast<std::size_t>(o->n), o->seed);
            const Trajectory traj = run_sampler(network_predictor(model.checkpoint.mlp, T), kind, model.schedule,
                                                particles, record, o->seed, options);
            for (const auto& p : traj.last().points) {
              if (!is_finite(p)) throw NumericError("sampler produced non-finite values");
            }

            const fs::path dir = resolve_out(o->out, "sample");
            write_trajectory(dir / "trajectory.csv", traj);
            io::write_points_csv(dir / "samples.csv", traj.last().points);
            Json side;
            side["sampler"] = to_string(kind);
            side["objective"] = to_string(model.objective);
            side["init"] = to_string(init);
            side["n"] = o->n;
            side["seed"] = o->seed;
            side["clip"] = o->clip ? Json(*o->clip) : Json(nullptr);
            side["schedule"] = model.schedule_opts.json();
            std::vector<int> recorded;
            for (const auto& s : traj.snapshots) recorded.push_back(s.t);
            side["snapshots"] = recorded;
            side["checkpoint_sha256"] = io::sha256_file(ck_path);
            io::write_file(dir / "trajectory.json", side.dump(2) + "\n");
            if (o->svg) {
              const GmmTarget target = default_target();
              for (const auto& s : traj.snapshots) {
                io::write_file(dir / ("snapshot_t" + std::to_string(s.t) + ".svg"), snapshot_svg(s, target));
              }
            }

            RunManifest m = base_manifest("sample", argv);
            m.replay.insert(m.replay.end(), {"--checkpoint", ck_path.string(), "--kind", to_string(kind), "--init",
                                             to_string(init), "--n", std::to_string(o->n), "--record",
                                             join(record), "--seed", std::to_string(o->seed)});
            if (o->clip) m.replay.insert(m.replay.end(), {"--clip", num(*o->clip)});
            if (o->svg) m.replay.push_back("--svg");
            m.seed = o->seed;
            m.kinds = {{"schedule", to_string(model.schedule.kind())},
                       {"forward", model.checkpoint.meta.count("forward") ? model.checkpoint.meta.at("forward") : ""},
                       {"objective", to_string(model.objective)},
                       {"sampler", to_string(kind)}};
            m.config = side;
            m.config["record"] = record;
            m.inputs = {{"checkpoint", ck_path}};
            m.outputs = {"trajectory.csv", "samples.csv", "trajectory.json"};
            write_manifest(dir, m);
            out << "sampled " << o->n << " particles with the " << to_string(kind) << " sampler into "
                << dir.string() << "\n";
            return kOk;
          }};
}

// eval -----------------------------------------------------------------------

Command eval_command(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out) {
  struct Opts {
    std::string samples;
    std::string reference;
    std::string trajectory;
    long long n_reference = 10000;
    std::uint64_t seed = 0;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("eval", "score samples against the target");
  sub->add_option("--samples", o->samples, "samples CSV (x,y)")->required();
  sub->add_option("--reference", o->reference, "reference CSV; fresh target draws when omitted");
  sub->add_option("--trajectory", o->trajectory, "trajectory CSV, for the positional bias");
  sub->add_option("--n-reference", o->n_reference, "fresh reference draws")->capture_default_str();
  sub->add_option("--seed", o->seed, "seed of the fresh reference")->capture_default_str();
  sub->add_option("--out", o->out, "run directory");
  return {sub, [o, &argv, &out] {
            const GmmTarget target = default_target();
            const fs::path samples_path = require_input(o->samples, "samples");
            RunManifest m = base_manifest("eval", argv);
            m.replay.insert(m.replay.end(), {"--samples", samples_path.string()});
            m.inputs = {{"samples", samples_path}};
            m.seed = o->seed;

            const std::vector<Vec2> samples = io::read_points_csv(samples_path);
            std::vector<Vec2> reference;
            if (!o->reference.empty()) {
              const fs::path ref = require_input(o->reference, "reference");
              reference = io::read_points_csv(ref);
              m.replay.insert(m.replay.end(), {"--reference", ref.string()});
              m.inputs.push_back({"reference", ref});
              m.config["reference"] = ref.string();
            } else {
              if (o->n_reference <= 0) throw UsageError("--n-reference must be positive");
              reference = sample(target, static_cast<std::size_t>(o->n_reference), o->seed).points;
              m.replay.insert(m.replay.end(),
                              {"--n-reference", std::to_string(o->n_reference), "--seed", std::to_string(o->seed)});
              m.config["reference"] = Json{{"fresh", o->n_reference}, {"seed", o->seed}};
            }
            std::optional<Trajectory> traj;
            if (!o->trajectory.empty()) {
              const fs::path tp = require_input(o->trajectory, "trajectory");
              traj = read_trajectory(tp);
              m.replay.insert(m.replay.end(), {"--trajectory", tp.string()});
              m.inputs.push_back({"trajectory", tp});
            }

            const MetricsReport report = evaluate(samples, reference, target, traj ? &*traj : nullptr);
            const fs::path dir = resolve_out(o->out, "eval");
            io::write_file(dir / "metrics.json", metrics_json(report));
            m.outputs = {"metrics.json"};
            write_manifest(dir, m);
            out << "energy distance " << num(report.energy_distance) << "\n";
            return kOk;
          }};
}

// field ----------------------------------------------------------------------

Command field_command(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out) {
  struct Opts {
    std::string checkpoint;
    std::string t_list;
    long long grid_n = 21;
    double lo = -7.0;
    double hi = 7.0;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("field", "export the learned vector field on a grid");
  sub->add_option("--checkpoint", o->checkpoint)->required();
  sub->add_option("--t-list", o->t_list, "comma-separated steps (default 99,54,36,18,0 for T=100)");
  sub->add_option("--grid-n", o->grid_n, "points per axis")->capture_default_str();
  sub->add_option("--grid-lo", o->lo)->capture_default_str();
  sub->add_option("--grid-hi", o->hi)->capture_default_str();
  sub->add_option("--out", o->out, "run directory");
  return {sub, [o, &argv, &out] {
            const fs::path ck_path = require_input(o->checkpoint, "checkpoint");
            const LoadedModel model = load_model(ck_path);
            const int T = model.schedule.steps();
            const std::vector<int> ts =
                o->t_list.empty() ? scaled_steps({99, 54, 36, 18, 0}, T) : parse_steps(o->t_list, T, "--t-list");
            if (o->grid_n <= 0) throw UsageError("--grid-n must be positive");
            const GridSpec grid{static_cast<std::size_t>(o->grid_n), o->lo, o->hi};
            const GmmTarget target = default_target();
            const fs::path dir = resolve_out(o->out, "field");
            export_vector_field(dir / "field.csv", network_predictor(model.checkpoint.mlp, T), model.objective,
                                model.schedule, ts, grid, &target);

            RunManifest m = base_manifest("field", argv);
            m.replay.insert(m.replay.end(), {"--checkpoint", ck_path.string(), "--t-list", join(ts), "--grid-n",
                                             std::to_string(o->grid_n), "--grid-lo", num(o->lo), "--grid-hi",
                                             num(o->hi)});
            m.kinds = {{"schedule", to_string(model.schedule.kind())}, {"objective", to_string(model.objective)}};
            m.config = {{"t_list", ts}, {"grid", {{"n", o->grid_n}, {"lo", o->lo}, {"hi", o->hi}}}};
            m.inputs = {{"checkpoint", ck_path}};
            m.outputs = {"field.csv"};
            write_manifest(dir, m);
            out << "wrote " << (dir / "field.csv").string() << "\n";
            return kOk;
          }};
}

// schedule -------------------------------------------------------------------

Command schedule_command(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out) {
  struct Opts {
    ScheduleOpts schedule;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("schedule", "dump a noise schedule");
  o->schedule.add_to(sub, "--kind");
  sub->add_option("--out", o->out, "run directory");
  return {sub, [o, &argv, &out] {
            const Schedule schedule = o->schedule.build();
            const fs::path dir = resolve_out(o->out, "schedule");
            dump(schedule, dir / "schedule.csv");
            RunManifest m = base_manifest("schedule", argv);
            o->schedule.replay(m.replay, "--kind");
            m.kinds = {{"schedule", to_string(schedule.kind())}};
            m.config = o->schedule.json();
            m.outputs = {"schedule.csv"};
            write_manifest(dir, m);
            out << "wrote " << schedule.steps() << " steps to " << (dir / "schedule.csv").string() << "\n";
            return kOk;
          }};
}

// discrete -------------------------------------------------------------------

Command discrete_command(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out) {
  struct Opts {
    long long d = 8;
    int T = 20;
    std::string chain = "marginal";
    long long n_train = 10000;
    long long n_samples = 10000;
    int epochs = 50;
    long long batch = 64;
    double lr = 1e-3;
    double lambda = 1.0;
    std::uint64_t seed = 0;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("discrete", "categorical diffusion on the quantised mixture");
  sub->add_option("--d", o->d, "states per axis (2..8)")->capture_default_str();
  sub->add_option("--T", o->T, "steps (1..20)")->capture_default_str();
  sub->add_option("--chain", o->chain, "uniform or marginal")->capture_default_str();
  sub->add_option("--n-train", o->n_train)->capture_default_str();
  sub->add_option("--n-samples", o->n_samples)->capture_default_str();
  sub->add_option("--epochs", o->epochs)->capture_default_str();
  sub->add_option("--batch", o->batch)->capture_default_str();
  sub->add_option("--lr", o->lr)->capture_default_str();
  sub->add_option("--lambda", o->lambda, "weight of the second axis in the loss")->capture_default_str();
  sub->add_option("--seed", o->seed)->capture_default_str();
  sub->add_option("--out", o->out, "run directory");
  return {sub, [o, &argv, &out] {
            using namespace discrete;
            if (o->d <= 0 || o->n_train <= 0 || o->n_samples <= 0 || o->batch <= 0) {
              throw UsageError("--d, --n-train, --n-samples and --batch must be positive");
            }
            DemoConfig config;
            config.d = static_cast<std::size_t>(o->d);
            config.T = o->T;
            config.chain = parse_chain_kind(o->chain);
            config.n_train = static_cast<std::size_t>(o->n_train);
            config.n_samples = static_cast<std::size_t>(o->n_samples);
            config.epochs = o->epochs;
            config.batch_size = static_cast<std::size_t>(o->batch);
            config.learning_rate = o->lr;
            config.lambda = o->lambda;
            config.seed = o->seed;
            config.validate();
            const DemoMetrics metrics = demo_run(config);

            const fs::path dir = resolve_out(o->out, "discrete");
            io::write_file(dir / "metrics.json", demo_metrics_json(config, metrics));
            io::write_file(dir / "loss.csv", loss_trace_csv(metrics.loss_trace));
            std::string samples = "i,j\n";
            for (const auto& [i, j] : metrics.samples) samples += std::to_string(i) + ',' + std::to_string(j) + '\n';
            io::write_file(dir / "samples.csv", samples);
            const Schedule cosine = Schedule::cosine(config.T);
            for (int axis = 0; axis < 2; ++axis) {
              const TransitionChain chain =
                  config.chain == ChainKind::Uniform
                      ? make_uniform_chain(config.d, cosine)
                      : make_marginal_chain(config.d, cosine, metrics.training_marginals[axis]);
              dump_chain(chain, dir / (axis == 0 ? "chain_x.csv" : "chain_y.csv"));
            }

            RunManifest m = base_manifest("discrete", argv);
            m.replay.insert(m.replay.end(),
                            {"--d", std::to_string(config.d), "--T", std::to_string(config.T), "--chain",
                             to_string(config.chain), "--n-train", std::to_string(config.n_train), "--n-samples",
                             std::to_string(config.n_samples), "--epochs", std::to_string(config.epochs), "--batch",
                             std::to_string(config.batch_size), "--lr", num(config.learning_rate), "--lambda",
                             num(config.lambda), "--seed", std::to_string(config.seed)});
            m.seed = config.seed;
            m.kinds = {{"schedule", "cosine"}, {"chain", to_string(config.chain)}};
            m.config = Json::parse(demo_metrics_json(config, metrics)).at("config");
            m.outputs = {"metrics.json", "loss.csv", "samples.csv", "chain_x.csv", "chain_y.csv"};
            write_manifest(dir, m);
            out << "mean total variation " << num(metrics.mean_total_variation) << "\n";
            return kOk;
          }};
}

// diffuse --------------------------------------------------------------------

Command diffuse_command(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out) {
  struct Opts {
    std::string data;
    std::string forward = "gaussian";
    ScheduleOpts schedule;
    std::string steps;
    std::uint64_t seed = 0;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("diffuse", "dump forward-process slices of a dataset");
  sub->add_option("--data", o->data, "dataset CSV (x,y)")->required();
  sub->add_option("--forward", o->forward, "gaussian or deterministic")->capture_default_str();
  o->schedule.add_to(sub, "--schedule");
  sub->add_option("--steps", o->steps, "comma-separated steps (default 0,27,54,81,99 for T=100)");
  sub->add_option("--seed", o->seed)->capture_default_str();
  sub->add_option("--out", o->out, "run directory");
  return {sub, [o, &argv, &out] {
            const ForwardKind kind = parse_forward_kind(o->forward);
            const Schedule schedule = o->schedule.build();
            const int T = schedule.steps();
            const std::vector<int> steps =
                o->steps.empty() ? scaled_steps({0, 27, 54, 81, 99}, T) : parse_steps(o->steps, T, "--steps");
            const fs::path data = require_input(o->data, "dataset");
            const std::vector<Vec2> points = io::read_points_csv(data);
            const fs::path dir = resolve_out(o->out, "diffuse");
            dump_forward_slices(dir / "slices.csv", points, default_target(), schedule, kind, steps, o->seed);

            RunManifest m = base_manifest("diffuse", argv);
            m.replay.insert(m.replay.end(), {"--data", data.string(), "--forward", to_string(kind)});
            o->schedule.replay(m.replay, "--schedule");
            m.replay.insert(m.replay.end(), {"--steps", join(steps), "--seed", std::to_string(o->seed)});
            m.seed = o->seed;
            m.kinds = {{"schedule", to_string(schedule.kind())}, {"forward", to_string(kind)}};
            m.config = {{"schedule", o->schedule.json()}, {"steps", steps}};
            m.inputs = {{"data", data}};
            m.outputs = {"slices.csv"};
            write_manifest(dir, m);
            out << "wrote " << (dir / "slices.csv").string() << "\n";
            return kOk;
          }};
}

// reproduce ------------------------------------------------------------------

Command reproduce_command(CLI::App& app, std::ostream& out, std::ostream& err) {
  struct Opts {
    std::string manifest;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* sub = app.add_subcommand("reproduce", "re-run a manifest and compare output hashes");
  sub->add_option("--manifest", o->manifest, "manifest.json of an earlier run")->required();
  sub->add_option("--out", o->out, "directory for the re-run");
  return {sub, [o, &out, &err]() -> int {
            const fs::path path = require_input(o->manifest, "manifest");
            const Json j = read_manifest(path);
            const auto replay = j.at("replay").get<std::vector<std::string>>();
            if (replay.empty() || replay.front() == "reproduce") throw UsageError("manifest has no command to replay");

            bool inputs_ok = true;
            for (const auto& in : j.at("inputs")) {
              const std::string p = in.at("path").get<std::string>();
              if (!fs::is_regular_file(p)) throw InputMissingError("input recorded in manifest is gone: " + p);
              if (io::sha256_file(p) != in.at("sha256").get<std::string>()) {
                err << "input changed since the run: " << p << "\n";
                inputs_ok = false;
              }
            }
            if (!inputs_ok) return kFailure;

            const fs::path dir = resolve_out(o->out, "reproduce");
            std::vector<std::string> args = replay;
            args.insert(args.end(), {"--out", dir.string()});
            const int code = run(args, out, err);
            if (code != kOk) return code;

            const Json fresh = read_manifest(dir / kManifestName);
            std::map<std::string, std::string> got;
            for (const auto& f : fresh.at("outputs")) got[f.at("path")] = f.at("sha256");
            bool same = true;
            for (const auto& f : j.at("outputs")) {
              const std::string name = f.at("path");
              const std::string want = f.at("sha256");
              auto it = got.find(name);
              if (it != got.end() && it->second == want) {
                out << "ok " << name << " " << want << "\n";
              } else {
                same = false;
                out << "DIFF " << name << " expected " << want << " got "
                    << (it == got.end() ? std::string("nothing") : it->second) << "\n";
              }
            }
            out << (same ? "reproduced" : "NOT reproduced") << " into " << dir.string() << "\n";
            return same ? kOk : kFailure;
          }};
}

}  // namespace

std::vector<Command> register_commands(CLI::App& app, const std::vector<std::string>& argv, std::ostream& out,
                                       std::ostream& err) {
  return {gen_command(app, argv, out),      train_command(app, argv, out),   sample_command(app, argv, out),
          eval_command(app, argv, out),     field_command(app, argv, out),   schedule_command(app, argv, out),
          discrete_command(app, argv, out), diffuse_command(app, argv, out), reproduce_command(app, out, err)};
}

}  // namespace difflab::cli
