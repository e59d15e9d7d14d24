#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bricklab/core.hpp"
#include "commands.hpp"

using namespace bricklab::cli;

int main(int argc, char** argv) {
  CLI::App app{"bricklab: Break-and-Make assembly environment, expert and reference policy"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "generate a dataset and its manifest");
  g->add_option("--kind", gen.kind, "rc or vehicles")->check(CLI::IsMember({"rc", "vehicles"}));
  g->add_option("--n", gen.n, "bricks per rc assembly");
  g->add_option("--count", gen.count, "number of assemblies");
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out, "output directory")->required();

  RolloutOptions ro;
  auto* r = app.add_subcommand("rollout", "run a policy over a manifest split");
  r->add_option("--manifest", ro.manifest)->required();
  r->add_option("--split", ro.split, "train, val or test");
  r->add_option("--policy", ro.policy, "expert, noisy:<eps> or a checkpoint path");
  r->add_option("--instructions", ro.instructions, "self or expert")->check(CLI::IsMember({"self", "expert"}));
  r->add_option("--mode", ro.mode, "argmax or stochastic")->check(CLI::IsMember({"argmax", "stochastic"}));
  r->add_option("--seed", ro.seed);
  r->add_option("--episodes", ro.episodes, "default: the whole split");
  r->add_flag("--jitter", ro.jitter, "jitter the camera on every render");
  r->add_flag("--label", ro.label, "store the expert's action next to each step");
  r->add_option("--out", ro.out, "output directory")->required();

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "train the reference policy");
  t->add_option("config", tr.config, "config file")->required();
  t->add_option("--alpha", tr.alpha, "expert mixture, overrides the config")->check(CLI::Range(0.0, 1.0));
  t->add_option("--workers", tr.workers)->check(CLI::PositiveNumber);
  t->add_option("--checkpoint-dir", tr.checkpoint_dir);
  t->add_option("--resume", tr.resume, "continue after this many finished epochs");
  t->add_option("--out", tr.out, "per-epoch report CSV");

  ScoreOptions so;
  auto* s = app.add_subcommand("score", "compare an estimated assembly with a target");
  s->add_option("estimated", so.estimated)->required();
  s->add_option("target", so.target)->required();

  RenderOptions re;
  auto* v = app.add_subcommand("render", "render an assembly or replay a trajectory to images");
  v->add_option("input", re.input, "assembly or trajectory file")->required();
  v->add_option("--out", re.out, "output directory")->required();
  v->add_flag("--buffers", re.buffers, "also write instance and snap PGMs");
  v->add_option("--resolution", re.resolution, "assembly renders only")->check(CLI::Range(8, 2048));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*g) return run_gen(gen);
    if (*r) return run_rollout(ro);
    if (*t) return run_train(tr);
    if (*s) return run_score(so);
    if (*v) return run_render(re);
  } catch (const bricklab::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
