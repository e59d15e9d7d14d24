#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

#include "bricklab/datagen.hpp"
#include "bricklab/expert.hpp"
#include "bricklab/policy.hpp"

using namespace bricklab;

namespace {

const Catalog& cat() { return Catalog::builtin(); }

// Expert-labelled examples along a few expert episodes.
std::vector<Example> expert_examples(int episodes, const EnvConfig& config = {}) {
  std::vector<Example> out;
  for (int e = 0; e < episodes; ++e) {
    BreakMakeEnv env(cat(), config);
    env.reset({generate_item(cat(), {"rc", 2, 50, 3}, e), std::nullopt, 0}, static_cast<std::uint64_t>(e));
    std::mt19937_64 rng(static_cast<std::uint64_t>(e));
    while (!env.done()) {
      const ExpertAction ea = expert_act(env, rng);
      if (ea.terminate()) break;
      out.push_back(make_example(env, *ea.action));
      env.step(*ea.action);
    }
  }
  return out;
}

std::vector<const Example*> pointers(const std::vector<Example>& v) {
  std::vector<const Example*> out;
  for (const Example& e : v) out.push_back(&e);
  return out;
}

std::vector<std::vector<double>*> blocks(ReferencePolicyParams& p) {
  return {&p.mode_w, &p.angle_w, &p.move_w, &p.shape_w, &p.color_w, &p.click_w, &p.release_w};
}

}  // namespace

TEST_CASE("parameter shapes follow the catalog") {
  const auto p = ReferencePolicyParams::init(cat(), 1);
  const int g = global_feature_count(static_cast<int>(cat().colors().size()));
  CHECK(p.global_features == g);
  CHECK(p.shape_ids.size() == cat().shapes().size());
  CHECK(p.color_ids.size() == cat().colors().size());
  CHECK(p.mode_w.size() == static_cast<std::size_t>(kNumModes * g));
  CHECK(p.move_w.size() == static_cast<std::size_t>(kNumMoves * g));
  CHECK(p.click_w.size() == static_cast<std::size_t>(kNumModes * kPixelFeatures));
  CHECK(ReferencePolicyParams::init(cat(), 1) == p);
  CHECK_FALSE(ReferencePolicyParams::init(cat(), 2) == p);
}

TEST_CASE("features have the documented sizes") {
  const auto ex = expert_examples(1);
  REQUIRE_FALSE(ex.empty());
  const Observation& obs = ex.front().observation;
  CHECK(global_features(obs, ReferencePolicyParams::init(cat(), 0).color_ids).size() ==
        static_cast<std::size_t>(global_feature_count(static_cast<int>(cat().colors().size()))));
  CHECK(pixel_features(obs).size() == obs.current->pixels.size() * kPixelFeatures);
}

TEST_CASE("expert examples carry click masks on the clicked snap") {
  for (const Example& e : expert_examples(4)) {
    if (uses_click(e.action.mode)) {
      REQUIRE_FALSE(e.click_mask.empty());
      CHECK(std::find(e.click_mask.begin(), e.click_mask.end(), e.action.click) != e.click_mask.end());
    } else {
      CHECK(e.click_mask.empty());
    }
    if (uses_release(e.action.mode)) {
      CHECK(std::find(e.release_mask.begin(), e.release_mask.end(), e.action.release) != e.release_mask.end());
    } else {
      CHECK(e.release_mask.empty());
    }
  }
}

TEST_CASE("gradient matches central finite differences") {
  EnvConfig small;
  small.camera = Camera::fixed(32);
  std::vector<Example> ex = expert_examples(2, small);
  REQUIRE(ex.size() >= 8);
  // relabelled copies so the rotate and translate heads see data too
  for (std::size_t i = 0; i < 4; ++i) {
    if (ex[i].click_mask.empty()) continue;
    Example r = ex[i];
    r.action.mode = ActionMode::rotate;
    r.action.angle = 2;
    r.release_mask.clear();
    Example t = r;
    t.action.mode = ActionMode::translate;
    t.action.direction = 3;
    t.action.magnitude = 1;
    ex.push_back(r);
    ex.push_back(t);
  }
  const auto batch = pointers(ex);
  for (CursorLoss kind : {CursorLoss::summed_ce, CursorLoss::bce, CursorLoss::mse}) {
    CAPTURE(to_string(kind));
    ReferencePolicyParams p = ReferencePolicyParams::init(cat(), 5);
    p.cursor_loss = kind;
    // larger weights so the heads are away from uniform
    std::mt19937_64 rng(8);
    std::normal_distribution<double> n(0, 0.3);
    for (auto* b : blocks(p))
      for (double& w : *b) w = n(rng);
    const auto [loss, grad] = ReferencePolicy(p).gradient(batch);
    CHECK(loss.samples == static_cast<int>(batch.size()));

    ReferencePolicyParams gp = grad;
    const auto gb = blocks(gp);
    const auto pb = blocks(p);
    int compared = 0;
    for (std::size_t k = 0; k < pb.size(); ++k) {
      CAPTURE(k);
      REQUIRE(gb[k]->size() == pb[k]->size());
      // the coordinates with the largest gradient plus a random sample
      std::vector<std::size_t> idx(pb[k]->size());
      std::iota(idx.begin(), idx.end(), 0);
      std::partial_sort(idx.begin(), idx.begin() + 6, idx.end(),
                        [&](std::size_t a, std::size_t b) { return std::abs((*gb[k])[a]) > std::abs((*gb[k])[b]); });
      idx.resize(6);
      for (int r = 0; r < 6; ++r) idx.push_back(rng() % pb[k]->size());
      double num = 0, den = 0;
      for (std::size_t i : idx) {
        const double h = 1e-5;
        ReferencePolicyParams up = p, down = p;
        (*blocks(up)[k])[i] += h;
        (*blocks(down)[k])[i] -= h;
        const double fd =
            (ReferencePolicy(up).gradient(batch).first.total() - ReferencePolicy(down).gradient(batch).first.total()) /
            (2 * h);
        num += (fd - (*gb[k])[i]) * (fd - (*gb[k])[i]);
        den += fd * fd;
      }
      // heads whose mode never occurs in the batch get no gradient at all
      if (den == 0) {
        CHECK(num == 0);
        continue;
      }
      CHECK(std::sqrt(num / den) <= 1e-4);
      ++compared;
    }
    CHECK(compared == 7);
  }
}

TEST_CASE("zero learning rate leaves the parameters unchanged") {
  const std::vector<Example> ex = expert_examples(1);
  ReferencePolicyParams p = ReferencePolicyParams::init(cat(), 3);
  p.learning_rate = 0;
  p.cursor_learning_rate = 0;
  ReferencePolicy pol(p);
  const LossReport r = pol.update(pointers(ex));
  CHECK(r.total() > 0);
  CHECK(pol.params() == p);
}

TEST_CASE("repeated updates fit a single labelled state") {
  const std::vector<Example> ex = expert_examples(1);
  const std::vector<const Example*> batch{&ex.front()};
  ReferencePolicy pol(ReferencePolicyParams::init(cat(), 4));
  const double first = pol.update(batch).mode;
  double last = first;
  for (int i = 0; i < 200; ++i) last = pol.update(batch).mode;
  CHECK(first > 1.0);
  CHECK(last < 0.01);
  CHECK(pol.predict_mode(ex.front().observation) == ex.front().action.mode);
}

TEST_CASE("argmax acting is deterministic and stochastic modes follow the softmax") {
  const std::vector<Example> ex = expert_examples(1);
  ReferencePolicyParams p = ReferencePolicyParams::init(cat(), 6);
  std::mt19937_64 wrng(2);
  std::normal_distribution<double> n(0, 0.05);
  for (double& w : p.mode_w) w = n(wrng);
  const ReferencePolicy pol(p);
  const Observation& obs = ex.front().observation;

  std::mt19937_64 r1(1), r2(99);
  const PolicyOutput a = pol.act(obs, SampleMode::argmax, r1);
  const PolicyOutput b = pol.act(obs, SampleMode::argmax, r2);
  REQUIRE(a.action);
  CHECK(*a.action == *b.action);
  CHECK(a.distribution.conditioning.mode == a.action->mode);

  const std::vector<double> probs = softmax(pol.heads(obs).mode_logits);
  std::map<ActionMode, int> freq;
  std::mt19937_64 rng(17);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const PolicyOutput o = pol.act(obs, SampleMode::stochastic, rng);
    REQUIRE(o.action);
    CHECK(o.distribution.conditioning.mode == o.action->mode);
    ++freq[o.action->mode];
  }
  for (int m = 0; m < kNumModes; ++m) {
    const double pm = probs[static_cast<std::size_t>(m)];
    const double sigma = std::sqrt(draws * pm * (1 - pm));
    CHECK(std::abs(freq[static_cast<ActionMode>(m)] - draws * pm) <= 3 * sigma + 1);
  }
}

TEST_CASE("sampled parameters and cursors are conditioned on the sampled mode") {
  const std::vector<Example> ex = expert_examples(2);
  const ReferencePolicy pol(ReferencePolicyParams::init(cat(), 9));
  std::mt19937_64 rng(3);
  for (const Example& e : ex) {
    const PolicyOutput o = pol.act(e.observation, SampleMode::stochastic, rng);
    REQUIRE(o.action);
    const Conditioning& c = o.distribution.conditioning;
    CHECK(c.mode == o.action->mode);
    if (c.mode == ActionMode::rotate) CHECK(c.angle == o.action->angle);
    if (c.mode == ActionMode::translate) CHECK(c.move == o.action->direction * kNumMagnitudes + o.action->magnitude);
    if (c.mode == ActionMode::pick) {
      CHECK(c.shape == o.action->shape);
      CHECK(c.color == o.action->color);
    }
    CHECK(o.distribution.click.height == e.observation.current->height);
    CHECK(o.action->click.row >= 0);
    CHECK(o.action->click.row < e.observation.current->height);
    CHECK(o.action->release.col < e.observation.current->width);
  }
}

TEST_CASE("expert wrapper replays expert_act") {
  BreakMakeEnv env(cat());
  env.reset({generate_item(cat(), {"rc", 4, 50, 3}, 0), std::nullopt, 0}, 1);
  const ExpertPolicy expert;
  const NoisyExpertPolicy clean(0.0);
  while (!env.done()) {
    std::mt19937_64 r1(5), r2(5), r3(5);
    const ExpertAction direct = expert_act(env, r1);
    const PolicyOutput wrapped = expert.act(env, SampleMode::argmax, r2);
    const PolicyOutput noisy = clean.act(env, SampleMode::argmax, r3);
    REQUIRE(direct.action);
    REQUIRE(wrapped.action);
    CHECK(*wrapped.action == *direct.action);
    CHECK(*noisy.action == *direct.action);
    // a point distribution on the chosen mode
    const auto& ml = wrapped.distribution.mode_logits;
    CHECK(std::max_element(ml.begin(), ml.end()) - ml.begin() == static_cast<int>(direct.action->mode));
    env.step(*direct.action);
  }
}

TEST_CASE("fully noisy expert picks modes uniformly") {
  BreakMakeEnv env(cat());
  env.reset({generate_item(cat(), {"rc", 2, 50, 3}, 0), std::nullopt, 0}, 1);
  const NoisyExpertPolicy noisy(1.0);
  std::mt19937_64 rng(11);
  std::map<ActionMode, int> freq;
  const int draws = 9000;
  for (int i = 0; i < draws; ++i) ++freq[noisy.act(env, SampleMode::stochastic, rng).action->mode];
  const double p = 1.0 / kNumModes, sigma = std::sqrt(draws * p * (1 - p));
  for (int m = 0; m < kNumModes; ++m) CHECK(std::abs(freq[static_cast<ActionMode>(m)] - draws * p) <= 4 * sigma);
  CHECK_THROWS_AS(NoisyExpertPolicy(1.5), Error);
  CHECK_THROWS_AS(NoisyExpertPolicy(-0.1), Error);
}

TEST_CASE("checkpoint round trip") {
  ReferencePolicyParams p = ReferencePolicyParams::init(cat(), 12);
  p.cursor_loss = CursorLoss::bce;
  p.learning_rate = 0.25;
  p.mode_w[3] = 1.0 / 3.0;
  const auto path = std::filesystem::temp_directory_path() / "bricklab_ckpt_test.json";
  save_checkpoint(p, path.string());
  CHECK(load_checkpoint(path.string()) == p);
  const auto loaded = make_policy(path.string());
  CHECK(loaded->name() == "reference");
  CHECK(dynamic_cast<const ReferencePolicy&>(*loaded).params() == p);

  nlohmann::json j = params_to_json(p);
  j["weights"]["mode"].erase(0);
  CHECK_THROWS_AS(params_from_json(j), Error);
  j = params_to_json(p);
  j["format"] = "something-else";
  CHECK_THROWS_AS(params_from_json(j), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path.string()), Error);
}

TEST_CASE("policy specs") {
  CHECK(make_policy("expert")->name() == "expert");
  CHECK(make_policy("noisy:0.25")->name() == "noisy:0.25");
  CHECK_THROWS_AS(make_policy("noisy:2"), Error);
  CHECK_THROWS_AS(make_policy("noisy:abc"), Error);
  CHECK_THROWS_AS(make_policy("/no/such/checkpoint.json"), Error);
}

TEST_CASE("out-of-range actions from a random policy never break the env") {
  BreakMakeEnv env(cat());
  env.reset({generate_item(cat(), {"rc", 2, 50, 3}, 1), std::nullopt, 0}, 1);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    Action a = random_action(cat(), 128, 128, rng);
    if (i % 3 == 0) a.click = {-5, 400};
    if (i % 5 == 0) a.release = {128, 128};
    if (env.done()) env.reset({generate_item(cat(), {"rc", 2, 50, 3}, 1), std::nullopt, 0}, i);
    CHECK_NOTHROW(env.step(a));
  }
}
