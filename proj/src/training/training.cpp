#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "bricklab/datagen.hpp"
#include "bricklab/expert.hpp"
#include "bricklab/training.hpp"

namespace bricklab {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return mix(mix(a) ^ (b * 0xD1B54A32D192ED03ull)); }
std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return mix(mix(a, b), c); }

// Stream tags so the different consumers of one seed never share a stream.
enum Stream : std::uint64_t { kEnv = 1, kExpert, kPolicy, kLabel, kTrainer, kEval };

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (in.fail() || !in.eof()) throw Error("config key '" + key + "': cannot parse '" + value + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw Error("config key '" + key + "': expected a boolean, got '" + v + "'");
}

struct WorkerOutput {
  std::vector<std::pair<int, Transition>> items;  // (epoch step index, transition)
  int truncated = 0;
  std::exception_ptr error;
};

void run_worker(const Catalog& catalog, const TrainConfig& config, const TaskSource& train, const Policy& policy,
                int epoch, int worker, WorkerOutput& out) {
  try {
    EnvConfig env_config;
    if (config.jitter) env_config.camera.jitter = CameraJitter{};
    BreakMakeEnv env(catalog, env_config);
    std::mt19937_64 expert_rng(mix(config.seed, mix(epoch, worker), kExpert));
    std::mt19937_64 policy_rng(mix(config.seed, mix(epoch, worker), kPolicy));
    const int n = config.steps_per_epoch, w = config.workers;
    bool active = false;
    int episode = -1;
    int episode_id = 0;
    for (int j = worker; j < n; j += w) {
      int stops = 0;
      while (true) {
        if (!active) {
          ++episode;
          // consecutive indices per worker; with a cycling source this walks the task list in order
          const std::uint64_t index = static_cast<std::uint64_t>(epoch - 1) * n + static_cast<std::uint64_t>(episode) * w + worker;
          env.reset({train.task(index), std::nullopt, 0}, mix(config.seed, index, kEnv));
          episode_id = ((epoch * w) + worker) * 100000 + episode;
          active = true;
        }
        const ExpertAction label = expert_act(env, expert_rng);
        if (label.terminate()) {
          // truncate the episode; the step is retried on a fresh one
          active = false;
          ++out.truncated;
          if (++stops > 64) throw Error("expert stops on every episode");
          continue;
        }
        Action action = *label.action;
        Actor actor = Actor::expert;
        if (!expert_drives(j, n, config.alpha)) {
          const PolicyOutput po = policy.act(env, SampleMode::stochastic, policy_rng);
          if (!po.action) {
            active = false;
            ++out.truncated;
            if (++stops > 64) throw Error("policy stops on every episode");
            continue;
          }
          action = *po.action;
          actor = Actor::agent;
        }
        out.items.push_back({j, {make_example(env, *label.action), actor, episode_id, env.steps()}});
        env.step(action);
        if (env.done()) active = false;
        break;
      }
    }
  } catch (...) {
    out.error = std::current_exception();
  }
}

void accumulate(LossReport& into, const LossReport& r) {
  into.mode += r.mode;
  into.angle += r.angle;
  into.move += r.move;
  into.shape += r.shape;
  into.color += r.color;
  into.click += r.click;
  into.release += r.release;
  into.samples += r.samples;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::string to_string(Actor a) { return a == Actor::expert ? "expert" : "agent"; }

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("replay buffer capacity must be positive");
}

void ReplayBuffer::add(Transition t) {
  if (items_.size() == capacity_) {
    items_.pop_front();
    ++evicted_;
  }
  items_.push_back(std::move(t));
}

std::vector<const Transition*> sample_batch(const ReplayBuffer& buffer, int batch_size, std::mt19937_64& rng) {
  if (buffer.empty()) throw Error("cannot sample from an empty replay buffer");
  if (batch_size <= 0) throw Error("batch size must be positive");
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  std::vector<const Transition*> out;
  out.reserve(static_cast<std::size_t>(batch_size));
  for (int i = 0; i < batch_size; ++i) out.push_back(&buffer.at(pick(rng)));
  return out;
}

bool expert_drives(int j, int steps_per_epoch, double alpha) {
  return static_cast<double>(j) / static_cast<double>(steps_per_epoch) < alpha;
}

TaskSource::TaskSource(std::vector<Assembly> tasks, bool cycle) : tasks_(std::move(tasks)), cycle_(cycle) {
  if (tasks_.empty()) throw Error("task source is empty");
}

const Assembly& TaskSource::task(std::uint64_t index) const {
  if (index >= tasks_.size()) {
    if (!cycle_) throw Error("task source exhausted after " + std::to_string(tasks_.size()) + " tasks");
    index %= tasks_.size();
  }
  return tasks_[index];
}

TaskSource load_task_source(const Catalog& catalog, const std::string& manifest_path, const std::string& split,
                            bool cycle) {
  const Manifest m = load_manifest(manifest_path);
  std::vector<Assembly> tasks;
  for (const std::string& p : m.paths(split)) tasks.push_back(load_assembly(catalog, p));
  if (tasks.empty()) throw Error("manifest " + manifest_path + " has no '" + split + "' entries");
  return TaskSource(std::move(tasks), cycle);
}

void TrainConfig::validate() const {
  if (total_steps <= 0 || steps_per_epoch <= 0 || train_steps_per_epoch < 0 || capacity <= 0 || batch_size <= 0 ||
      workers <= 0 || eval_episodes < 0 || eval_every < 0)
    throw Error("training counts must be positive");
  if (!(alpha >= 0 && alpha <= 1)) throw Error("alpha must lie in [0, 1]");
  if (!(learning_rate >= 0) || !(cursor_learning_rate >= 0)) throw Error("learning rates must be non-negative");
  if (resume_epoch < 0 || resume_epoch > epochs()) throw Error("resume epoch out of range");
  if (resume_epoch > 0 && checkpoint_dir.empty()) throw Error("resuming needs a checkpoint directory");
}

ReferencePolicyParams initial_params(const Catalog& catalog, const TrainConfig& config) {
  ReferencePolicyParams p = ReferencePolicyParams::init(catalog, config.seed);
  p.learning_rate = config.learning_rate;
  p.cursor_learning_rate = config.cursor_learning_rate;
  p.cursor_loss = config.cursor_loss;
  return p;
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "total_steps") c.total_steps = parse_number<int>(key, value);
    else if (key == "steps_per_epoch") c.steps_per_epoch = parse_number<int>(key, value);
    else if (key == "train_steps_per_epoch") c.train_steps_per_epoch = parse_number<int>(key, value);
    else if (key == "capacity") c.capacity = parse_number<int>(key, value);
    else if (key == "alpha") c.alpha = parse_number<double>(key, value);
    else if (key == "batch_size") c.batch_size = parse_number<int>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "workers") c.workers = parse_number<int>(key, value);
    else if (key == "eval_episodes") c.eval_episodes = parse_number<int>(key, value);
    else if (key == "eval_every") c.eval_every = parse_number<int>(key, value);
    else if (key == "cursor_loss") c.cursor_loss = cursor_loss_from_string(value);
    else if (key == "learning_rate") c.learning_rate = parse_number<double>(key, value);
    else if (key == "cursor_learning_rate") c.cursor_learning_rate = parse_number<double>(key, value);
    else if (key == "jitter") c.jitter = parse_bool(key, value);
    else if (key == "dataset") c.dataset = value;
    else if (key == "train_split") c.train_split = value;
    else if (key == "eval_split") c.eval_split = value;
    else if (key == "checkpoint_dir") c.checkpoint_dir = value;
    else if (key == "resume_epoch") c.resume_epoch = parse_number<int>(key, value);
    else throw Error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config " + path);
  std::ostringstream s;
  s << in.rdbuf();
  TrainConfig c = parse_train_config(s.str());
  // relative paths in the file resolve against its directory
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.dataset);
  resolve(c.checkpoint_dir);
  return c;
}

std::string to_string(InstructionSource s) { return s == InstructionSource::self ? "self" : "expert"; }

InstructionSource instruction_source_from_string(const std::string& s) {
  if (s == "self") return InstructionSource::self;
  if (s == "expert") return InstructionSource::expert;
  throw Error("unknown instruction source '" + s + "'");
}

EpisodeResult run_episode(const Catalog& catalog, const TaskSpec& task, const Policy& policy, std::uint64_t seed,
                          const EpisodeOptions& options) {
  BreakMakeEnv env(catalog, options.env);
  env.reset(task, seed);
  std::mt19937_64 policy_rng(mix(seed, kPolicy)), expert_rng(mix(seed, kExpert)), label_rng(mix(seed, kLabel));
  EpisodeResult out;
  out.seed = seed;
  while (!env.done()) {
    std::optional<Action> action;
    if (options.instructions == InstructionSource::expert && env.phase() == Phase::break_phase) {
      const ExpertAction ea = expert_act(env, expert_rng);
      if (ea.terminate()) {
        out.stop_reason = "expert: " + ea.reason;
        break;
      }
      action = ea.action;
    } else {
      const PolicyOutput po = policy.act(env, options.mode, policy_rng);
      if (!po.action) {
        out.stop_reason = po.stop_reason;
        break;
      }
      action = po.action;
    }
    TrajectoryRecord rec;
    rec.step = env.steps();
    rec.phase = env.phase();
    rec.action = *action;
    if (options.label) {
      const ExpertAction ea = expert_act(env, label_rng);
      rec.expert_action = ea.action;
      rec.expert_terminated = ea.terminate();
    }
    const StepResult r = env.step(*action);
    rec.success = r.success;
    rec.resolved_snap = r.info.resolved_snap;
    out.trajectory.push_back(rec);
    if (r.success && action->mode == ActionMode::done) out.finished = true;
  }
  out.steps = env.steps();
  out.reached_make = env.phase() == Phase::make_phase;
  if (out.reached_make) out.reconstruction = env.scene();
  out.scores = score(catalog, out.reconstruction, env.effective_target());
  return out;
}

EvalReport evaluate(const Catalog& catalog, const Policy& policy, const TaskSource& tasks, const EvalConfig& config) {
  EvalReport rep;
  rep.mean = Scores{0, 0, 0, 0};
  for (int i = 0; i < config.episodes; ++i) {
    EpisodeResult r = run_episode(catalog, {tasks.task(static_cast<std::uint64_t>(i)), std::nullopt, 0}, policy,
                                  mix(config.seed, static_cast<std::uint64_t>(i), kEval), config.episode);
    rep.mean.f1_b += r.scores.f1_b;
    rep.mean.f1_e += r.scores.f1_e;
    rep.mean.f1_a += r.scores.f1_a;
    rep.mean.aed += r.scores.aed;
    rep.finished += r.finished;
    rep.results.push_back(std::move(r));
  }
  rep.episodes = config.episodes;
  if (config.episodes > 0) {
    const double n = config.episodes;
    rep.mean = {rep.mean.f1_b / n, rep.mean.f1_e / n, rep.mean.f1_a / n, rep.mean.aed / n};
  } else {
    rep.mean = Scores{};
  }
  return rep;
}

EpochData collect_epoch(const Catalog& catalog, const TrainConfig& config, const TaskSource& train,
                        const Policy& policy, int epoch) {
  std::vector<WorkerOutput> outs(static_cast<std::size_t>(config.workers));
  if (config.workers == 1) {
    run_worker(catalog, config, train, policy, epoch, 0, outs[0]);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < config.workers; ++w) {
      threads.emplace_back(run_worker, std::cref(catalog), std::cref(config), std::cref(train), std::cref(policy), epoch,
                           w, std::ref(outs[static_cast<std::size_t>(w)]));
    }
    for (auto& t : threads) t.join();
  }
  EpochData data;
  std::vector<std::pair<int, Transition>> all;
  for (WorkerOutput& o : outs) {
    if (o.error) std::rethrow_exception(o.error);
    data.truncated += o.truncated;
    for (auto& item : o.items) all.push_back(std::move(item));
  }
  // worker w owns steps w, w+W, ...; sorting by step interleaves them round-robin
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  data.transitions.reserve(all.size());
  for (auto& item : all) data.transitions.push_back(std::move(item.second));
  return data;
}

std::string checkpoint_path(const std::string& dir, int epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "ckpt_%04d.json", epoch);
  return (std::filesystem::path(dir) / name).string();
}

TrainingReport run_training(const Catalog& catalog, const TrainConfig& config, const TaskSource& train,
                            const TaskSource& eval, Policy& policy, const EpochCallback& on_epoch) {
  config.validate();
  auto* learner = dynamic_cast<ReferencePolicy*>(&policy);
  ReplayBuffer buffer(static_cast<std::size_t>(config.capacity));
  const int epochs = config.epochs();
  const bool keep = !config.checkpoint_dir.empty() && learner;
  if (keep) std::filesystem::create_directories(config.checkpoint_dir);

  if (config.resume_epoch > 0) {
    if (!learner) throw Error("only the reference policy can resume from checkpoints");
    learner->params() = load_checkpoint(checkpoint_path(config.checkpoint_dir, config.resume_epoch));
    // rebuild the buffer from the epochs whose data would still be in it
    const int span = (config.capacity + config.steps_per_epoch - 1) / config.steps_per_epoch;
    for (int k = std::max(1, config.resume_epoch - span + 1); k <= config.resume_epoch; ++k) {
      const ReferencePolicy snapshot(load_checkpoint(checkpoint_path(config.checkpoint_dir, k - 1)));
      for (Transition& t : collect_epoch(catalog, config, train, snapshot, k).transitions) buffer.add(std::move(t));
    }
  } else if (keep) {
    save_checkpoint(learner->params(), checkpoint_path(config.checkpoint_dir, 0));
  }

  EvalConfig ec;
  ec.episodes = config.eval_episodes;
  ec.seed = mix(config.seed, kEval);
  if (config.jitter) ec.episode.env.camera.jitter = CameraJitter{};

  TrainingReport report;
  report.env_steps = config.resume_epoch * config.steps_per_epoch;
  for (int epoch = config.resume_epoch + 1; epoch <= epochs; ++epoch) {
    EpochReport er;
    er.epoch = epoch;
    {
      const std::unique_ptr<Policy> snapshot = policy.clone();
      EpochData data = collect_epoch(catalog, config, train, *snapshot, epoch);
      er.truncated = data.truncated;
      er.env_steps = static_cast<int>(data.transitions.size());
      std::vector<int> seen;
      for (Transition& t : data.transitions) {
        ++(t.actor == Actor::expert ? er.expert_steps : er.agent_steps);
        if (std::find(seen.begin(), seen.end(), t.episode) == seen.end()) seen.push_back(t.episode);
        buffer.add(std::move(t));
      }
      er.episodes = static_cast<int>(seen.size());
    }
    if (policy.trainable() && config.train_steps_per_epoch > 0) {
      std::mt19937_64 rng(mix(config.seed, static_cast<std::uint64_t>(epoch), kTrainer));
      std::vector<const Example*> batch;
      for (int s = 0; s < config.train_steps_per_epoch; ++s) {
        batch.clear();
        for (const Transition* t : sample_batch(buffer, config.batch_size, rng)) batch.push_back(&t->example);
        accumulate(er.loss, policy.update(batch));
      }
      const double inv = 1.0 / config.train_steps_per_epoch;
      for (double* v : {&er.loss.mode, &er.loss.angle, &er.loss.move, &er.loss.shape, &er.loss.color, &er.loss.click,
                        &er.loss.release})
        *v *= inv;
    }
    er.buffer_size = buffer.size();
    const bool eval_now = epoch == epochs || (config.eval_every > 0 && epoch % config.eval_every == 0);
    if (eval_now && config.eval_episodes > 0) er.eval = evaluate(catalog, policy, eval, ec).mean;
    if (keep) save_checkpoint(learner->params(), checkpoint_path(config.checkpoint_dir, epoch));
    report.env_steps += er.env_steps;
    if (er.eval) report.final_scores = *er.eval;
    report.epochs.push_back(er);
    if (on_epoch) on_epoch(er, policy);
  }
  return report;
}

std::string epoch_csv_header() {
  return "epoch,env_steps,expert_steps,agent_steps,episodes,truncated,buffer_size,loss_mode,loss_angle,loss_move,"
         "loss_shape,loss_color,loss_click,loss_release,loss_total,f1_b,f1_e,f1_a,aed";
}

std::string epoch_csv_row(const EpochReport& r) {
  std::ostringstream s;
  s << r.epoch << ',' << r.env_steps << ',' << r.expert_steps << ',' << r.agent_steps << ',' << r.episodes << ','
    << r.truncated << ',' << r.buffer_size << ',' << fmt(r.loss.mode) << ',' << fmt(r.loss.angle) << ','
    << fmt(r.loss.move) << ',' << fmt(r.loss.shape) << ',' << fmt(r.loss.color) << ',' << fmt(r.loss.click) << ','
    << fmt(r.loss.release) << ',' << fmt(r.loss.total());
  if (r.eval) {
    s << ',' << fmt(r.eval->f1_b) << ',' << fmt(r.eval->f1_e) << ',' << fmt(r.eval->f1_a) << ',' << fmt(r.eval->aed);
  } else {
    s << ",,,,";
  }
  return s.str();
}

}  // namespace bricklab
