#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace bricklab::cli {

struct GenOptions {
  std::string kind = "rc";
  int n = 2;
  int count = 100;
  std::uint64_t seed = 0;
  std::string out;
};

struct RolloutOptions {
  std::string manifest;
  std::string split = "test";
  std::string policy = "expert";
  std::string instructions = "self";
  std::string mode = "argmax";
  std::uint64_t seed = 0;
  int episodes = -1;  // whole split
  bool jitter = false;
  bool label = false;
  std::string out;
};

struct TrainOptions {
  std::string config;
  std::optional<double> alpha;
  std::optional<int> workers;
  std::optional<int> resume;
  std::string checkpoint_dir;
  std::string out = "train_report.csv";
};

struct ScoreOptions {
  std::string estimated;
  std::string target;
};

struct RenderOptions {
  std::string input;
  std::string out;
  bool buffers = false;
  int resolution = 128;
};

// Each returns the process exit code; data errors surface as bricklab::Error.
int run_gen(const GenOptions& o);
int run_rollout(const RolloutOptions& o);
int run_train(const TrainOptions& o);
int run_score(const ScoreOptions& o);
int run_render(const RenderOptions& o);

}  // namespace bricklab::cli
