#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bricklab/env.hpp"
#include "bricklab/metrics.hpp"
#include "bricklab/policy.hpp"

namespace bricklab {

enum class Actor { expert, agent };
std::string to_string(Actor a);

struct Transition {
  Example example;  // observation plus the expert's label
  Actor actor = Actor::expert;
  int episode = 0;
  int step = 0;
};

/// FIFO buffer; adding past capacity evicts the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void add(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  /// 0 is the oldest entry.
  const Transition& at(std::size_t i) const { return items_.at(i); }
  std::uint64_t evicted() const { return evicted_; }

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
  std::uint64_t evicted_ = 0;
};

/// Uniform with replacement.
std::vector<const Transition*> sample_batch(const ReplayBuffer& buffer, int batch_size, std::mt19937_64& rng);

/// Step j of an epoch is expert-driven iff j / steps_per_epoch < alpha.
bool expert_drives(int j, int steps_per_epoch, double alpha);

/// Targets handed out by index; a non-cycling source runs dry.
class TaskSource {
 public:
  TaskSource(std::vector<Assembly> tasks, bool cycle = true);
  const Assembly& task(std::uint64_t index) const;
  std::size_t size() const { return tasks_.size(); }

 private:
  std::vector<Assembly> tasks_;
  bool cycle_;
};

TaskSource load_task_source(const Catalog& catalog, const std::string& manifest_path, const std::string& split,
                            bool cycle = true);

struct TrainConfig {
  int total_steps = 4096;
  int steps_per_epoch = 512;
  int train_steps_per_epoch = 1024;
  int capacity = 2048;
  double alpha = 0.75;
  int batch_size = 32;
  std::uint64_t seed = 0;
  int workers = 8;
  int eval_episodes = 100;
  int eval_every = 1;  // epochs; 0 evaluates only after the last epoch
  CursorLoss cursor_loss = CursorLoss::summed_ce;
  double learning_rate = 1.0;
  double cursor_learning_rate = 0.5;
  bool jitter = false;
  std::string dataset;  // manifest path
  std::string train_split = "train";
  std::string eval_split = "val";
  std::string checkpoint_dir;  // ckpt_NNNN.json after every epoch when set
  int resume_epoch = 0;        // continue after this many finished epochs

  int epochs() const { return (total_steps + steps_per_epoch - 1) / steps_per_epoch; }
  void validate() const;
};

/// Fresh reference policy with the config's seed, learning rates and cursor loss.
ReferencePolicyParams initial_params(const Catalog& catalog, const TrainConfig& config);

/// `key = value` lines; `#` starts a comment.
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);

enum class InstructionSource { self, expert };
std::string to_string(InstructionSource s);
InstructionSource instruction_source_from_string(const std::string& s);

struct EpisodeResult {
  Scores scores;
  Assembly reconstruction;  // empty unless the Make phase was reached
  std::vector<TrajectoryRecord> trajectory;
  int steps = 0;
  bool finished = false;     // ended by a successful Done
  bool reached_make = false;
  std::string stop_reason;   // a policy (or the expert in the Break phase) stopped early
  std::uint64_t seed = 0;    // env seed the episode ran with
};

struct EpisodeOptions {
  SampleMode mode = SampleMode::argmax;
  InstructionSource instructions = InstructionSource::self;
  bool label = false;  // attach the expert's action to every record
  EnvConfig env;
};

EpisodeResult run_episode(const Catalog& catalog, const TaskSpec& task, const Policy& policy, std::uint64_t seed,
                          const EpisodeOptions& options = {});

struct EvalConfig {
  int episodes = 100;
  std::uint64_t seed = 0;
  EpisodeOptions episode;
};

struct EvalReport {
  Scores mean;
  int episodes = 0;
  int finished = 0;
  std::vector<EpisodeResult> results;
};

/// Episode i rebuilds task i with seed derived from (seed, i); equal configs pair up across policies.
EvalReport evaluate(const Catalog& catalog, const Policy& policy, const TaskSource& tasks, const EvalConfig& config);

struct EpochReport {
  int epoch = 0;  // 1-based
  int env_steps = 0;
  int expert_steps = 0;
  int agent_steps = 0;
  int episodes = 0;
  int truncated = 0;  // episodes cut short by an expert stop
  std::size_t buffer_size = 0;
  LossReport loss;  // mean over the epoch's updates
  std::optional<Scores> eval;
};

struct TrainingReport {
  std::vector<EpochReport> epochs;
  int env_steps = 0;
  Scores final_scores;
};

/// Optional hook run after each epoch.
using EpochCallback = std::function<void(const EpochReport&, const Policy&)>;

TrainingReport run_training(const Catalog& catalog, const TrainConfig& config, const TaskSource& train,
                            const TaskSource& eval, Policy& policy, const EpochCallback& on_epoch = {});

struct EpochData {
  std::vector<Transition> transitions;  // merged in worker round-robin order
  int truncated = 0;
};

/// Rollouts of one epoch; every worker starts fresh episodes.
EpochData collect_epoch(const Catalog& catalog, const TrainConfig& config, const TaskSource& train,
                                      const Policy& policy, int epoch);

std::string epoch_csv_header();
std::string epoch_csv_row(const EpochReport& r);
std::string checkpoint_path(const std::string& dir, int epoch);

}  // namespace bricklab
