#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "bricklab/datagen.hpp"
#include "bricklab/metrics.hpp"
#include "bricklab/training.hpp"

namespace fs = std::filesystem;

namespace bricklab::cli {

namespace {

std::string numbered(const std::string& stem, int i, const std::string& ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05d%s", stem.c_str(), i, ext.c_str());
  return buf;
}

std::string scores_line(const Scores& s) {
  std::ostringstream out;
  out << "f1_b=" << s.f1_b << " f1_e=" << s.f1_e << " f1_a=" << s.f1_a << " aed=" << s.aed;
  return out.str();
}

std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

int run_gen(const GenOptions& o) {
  const Catalog& catalog = Catalog::builtin();
  const DatasetSpec spec{o.kind, o.n, o.count, o.seed};
  if (spec.kind != "rc" && spec.kind != "vehicles") throw Error("unknown dataset kind '" + spec.kind + "'");
  const Manifest m = generate_dataset(catalog, spec, o.out);
  std::vector<std::string> paths;
  for (const ManifestEntry& e : m.entries) paths.push_back((fs::path(o.out) / e.path).string());
  const DatasetReport rep = validate_dataset(catalog, paths);
  std::cout << "wrote " << m.entries.size() << " assemblies to " << o.out << " (config " << m.config_hash
            << ", mean bricks " << rep.mean_bricks << ")\n";
  for (const std::string& v : rep.violations) std::cerr << "violation: " << v << '\n';
  return rep.violations.empty() ? 0 : 1;
}

int run_rollout(const RolloutOptions& o) {
  const Catalog& catalog = Catalog::builtin();
  const Manifest manifest = load_manifest(o.manifest);
  const std::vector<std::string> paths = manifest.paths(o.split);
  if (paths.empty()) throw Error("manifest has no '" + o.split + "' entries");
  std::vector<Assembly> targets;
  for (const std::string& p : paths) targets.push_back(load_assembly(catalog, p));
  const TaskSource tasks(targets, false);
  const std::unique_ptr<Policy> policy = make_policy(o.policy);

  EvalConfig ec;
  ec.episodes = o.episodes < 0 ? static_cast<int>(targets.size()) : o.episodes;
  if (ec.episodes > static_cast<int>(targets.size())) throw Error("more episodes requested than the split holds");
  ec.seed = o.seed;
  ec.episode.instructions = instruction_source_from_string(o.instructions);
  ec.episode.label = o.label;
  if (o.mode == "argmax") {
    ec.episode.mode = SampleMode::argmax;
  } else if (o.mode == "stochastic") {
    ec.episode.mode = SampleMode::stochastic;
  } else {
    throw Error("unknown sampling mode '" + o.mode + "'");
  }
  if (o.jitter) ec.episode.env.camera.jitter = CameraJitter{};
  const EvalReport rep = evaluate(catalog, *policy, tasks, ec);

  fs::create_directories(o.out);
  std::ofstream csv(fs::path(o.out) / "scores.csv");
  if (!csv) throw Error("cannot write scores.csv in " + o.out);
  csv << "episode,task,seed,steps,finished,reached_make,f1_b,f1_e,f1_a,aed,stop_reason\n";
  for (int i = 0; i < rep.episodes; ++i) {
    const EpisodeResult& r = rep.results[static_cast<std::size_t>(i)];
    TrajectoryLog log;
    log.task = {targets[static_cast<std::size_t>(i)], std::nullopt, 0};
    log.seed = r.seed;
    log.jitter = o.jitter;
    log.policy = policy->name();
    log.instructions = o.instructions;
    log.records = r.trajectory;
    save_trajectory(catalog, log, (fs::path(o.out) / numbered("traj", i, ".json")).string());
    csv << i << ',' << csv_field(fs::path(paths[static_cast<std::size_t>(i)]).filename().string()) << ',' << r.seed
        << ',' << r.steps << ',' << r.finished << ',' << r.reached_make << ',' << r.scores.f1_b << ','
        << r.scores.f1_e << ',' << r.scores.f1_a << ',' << r.scores.aed << ',' << csv_field(r.stop_reason) << '\n';
  }
  std::cout << "episodes=" << rep.episodes << " finished=" << rep.finished << ' ' << scores_line(rep.mean) << '\n';
  return 0;
}

int run_train(const TrainOptions& o) {
  const Catalog& catalog = Catalog::builtin();
  TrainConfig config = load_train_config(o.config);
  if (o.alpha) config.alpha = *o.alpha;
  if (o.workers) config.workers = *o.workers;
  if (!o.checkpoint_dir.empty()) config.checkpoint_dir = o.checkpoint_dir;
  if (o.resume) config.resume_epoch = *o.resume;
  config.validate();
  if (config.dataset.empty()) throw Error("training config names no dataset");
  const TaskSource train = load_task_source(catalog, config.dataset, config.train_split);
  const TaskSource eval = load_task_source(catalog, config.dataset, config.eval_split);

  ReferencePolicy policy(initial_params(catalog, config));
  std::ofstream csv(o.out);
  if (!csv) throw Error("cannot write " + o.out);
  csv << epoch_csv_header() << '\n';
  std::cout << epoch_csv_header() << '\n';
  const TrainingReport rep = run_training(catalog, config, train, eval, policy, [&](const EpochReport& e, const Policy&) {
    csv << epoch_csv_row(e) << '\n' << std::flush;
    std::cout << epoch_csv_row(e) << '\n' << std::flush;
  });
  std::cout << "env_steps=" << rep.env_steps << ' ' << scores_line(rep.final_scores) << '\n';
  return 0;
}

int run_score(const ScoreOptions& o) {
  const Catalog& catalog = Catalog::builtin();
  const Assembly est = load_assembly(catalog, o.estimated);
  const Assembly tgt = load_assembly(catalog, o.target);
  std::cout << scores_line(score(catalog, est, tgt)) << '\n';
  return 0;
}

int run_render(const RenderOptions& o) {
  const Catalog& catalog = Catalog::builtin();
  std::ifstream in(o.input);
  if (!in) throw Error("cannot read " + o.input);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(o.input + ": " + e.what());
  }
  fs::create_directories(o.out);
  auto write = [&](const FrameBuffers& fb, const std::string& stem) {
    write_png(fb, (fs::path(o.out) / (stem + ".png")).string());
    if (o.buffers) {
      write_instance_pgm(fb, (fs::path(o.out) / (stem + "_instance.pgm")).string());
      write_snap_pgm(fb, (fs::path(o.out) / (stem + "_snap.pgm")).string());
    }
  };
  if (j.is_object() && j.contains("format")) {
    const TrajectoryLog log = trajectory_from_json(catalog, j);
    const std::vector<FrameBuffers> frames = replay_frames(catalog, log);
    for (std::size_t k = 0; k < frames.size(); ++k) write(frames[k], numbered("frame", static_cast<int>(k + 1), ""));
    std::cout << "wrote " << frames.size() << " frames to " << o.out << '\n';
  } else {
    const Assembly a = assembly_from_json_text(catalog, j.dump());
    write(render(catalog, a, Camera::fixed(o.resolution)), fs::path(o.input).stem().string());
    std::cout << "wrote 1 image to " << o.out << '\n';
  }
  return 0;
}

}  // namespace bricklab::cli
