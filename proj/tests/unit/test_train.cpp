#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fd_oracle.hpp"
#include "toy_batch.hpp"
#include "step/core/errors.hpp"
#include "step/core/ops.hpp"
#include "step/train/gae.hpp"
#include "step/train/losses.hpp"
#include "step/train/trainer.hpp"

using namespace step;
using core::Shape;
using core::Tensor;
using policy::NLevelPolicy;
using policy::PolicyArch;
using train::Minibatch;
using testing::perturbed_anchors;
using testing::random_action;
using testing::tiny_arch;
using testing::toy_batch;

namespace {

train::TrainConfig small_config(const std::string& env_id, std::size_t n = 2) {
  train::TrainConfig c;
  c.env.id = env_id;
  c.env.num_agents = n;
  c.rollout = 200;
  c.minibatch = 64;
  c.epochs = 2;
  c.total_steps = 400;
  c.eval_interval = 200;
  c.eval_episodes = 5;
  return c;
}

bool same_tensor(const Tensor& a, const Tensor& b) { return a == b; }

}  // namespace

TEST_SUITE("gae") {
  TEST_CASE("matches a direct discounted sum of TD errors") {
    core::Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t T = 5 + rng.index(6);
      std::vector<double> r(T), v(T);
      std::vector<std::uint8_t> d(T, 0);
      for (std::size_t t = 0; t < T; ++t) {
        r[t] = rng.normal();
        v[t] = rng.normal();
        d[t] = rng.uniform() < 0.2 ? 1 : 0;
      }
      const double boot = rng.normal();
      const double gamma = 0.9 + 0.1 * rng.uniform();
      const double lambda = rng.uniform();
      const auto g = train::compute_gae(r, v, d, boot, gamma, lambda);
      for (std::size_t t = 0; t < T; ++t) {
        double expect = 0.0, weight = 1.0;
        for (std::size_t k = t; k < T; ++k) {
          const double next = d[k] ? 0.0 : (k + 1 < T ? v[k + 1] : boot);
          expect += weight * (r[k] + gamma * next - v[k]);
          if (d[k]) break;
          weight *= gamma * lambda;
        }
        CHECK(std::abs(g.raw_advantages[t] - expect) < 1e-10);
        CHECK(g.returns[t] == doctest::Approx(g.raw_advantages[t] + v[t]).epsilon(1e-14));
      }
    }
  }

  TEST_CASE("lambda = gamma = 1 telescopes to reward-to-go minus value") {
    const std::vector<double> r{1.0, -2.0, 0.5, 3.0};
    const std::vector<double> v{0.3, 0.1, -0.4, 2.0};
    const std::vector<std::uint8_t> d{0, 0, 0, 1};
    const auto g = train::compute_gae(r, v, d, 123.0, 1.0, 1.0);
    double to_go = 0.0;
    for (std::size_t t = r.size(); t-- > 0;) {
      to_go += r[t];
      CHECK(g.raw_advantages[t] == doctest::Approx(to_go - v[t]).epsilon(1e-14));
    }
  }

  TEST_CASE("zero rewards and values give zero advantages") {
    const std::vector<double> z(6, 0.0);
    const std::vector<std::uint8_t> d{0, 0, 1, 0, 0, 0};
    const auto g = train::compute_gae(z, z, d, 0.0, 0.99, 0.95);
    for (double a : g.raw_advantages) CHECK(a == 0.0);
    for (double a : g.advantages) CHECK(a == 0.0);
  }

  TEST_CASE("normalized advantages have zero mean and unit spread") {
    core::Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> a(50 + rng.index(200));
      const double shift = 100.0 * rng.normal(), scale = std::exp(3.0 * rng.normal());
      for (double& x : a) x = shift + scale * rng.normal();
      const auto n = train::normalize_advantages(a);
      const double mean = std::accumulate(n.begin(), n.end(), 0.0) / n.size();
      double var = 0.0;
      for (double x : n) var += (x - mean) * (x - mean);
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(std::sqrt(var / n.size()) - 1.0) < 1e-6);
    }
  }
}

TEST_SUITE("losses") {
  TEST_CASE("clipped surrogate hand cases") {
    CHECK(train::clipped_surrogate(1.5, 2.0, 0.2) == doctest::Approx(2.4));
    CHECK(train::clipped_surrogate(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
    CHECK(train::clipped_surrogate(1.1, 2.0, 0.2) == doctest::Approx(2.2));
  }

  TEST_CASE("critic loss hand cases") {
    core::Tape tape;
    const std::vector<double> one{1.0}, zero{0.0}, two{2.0}, near{0.8};
    const auto v = tape.constant(Tensor(Shape{1}, {1.0}));
    CHECK(train::critic_loss(v, zero, two, 0.5).value().item() == doctest::Approx(2.25));
    CHECK(train::critic_loss(v, near, one, 0.5).value().item() == 0.0);
    // V_old = V: clipped and unclipped errors coincide.
    CHECK(train::critic_loss(v, one, two, 0.5).value().item() == doctest::Approx(1.0));
  }

  TEST_CASE("identity parameters: ratio one, no regularizer") {
    for (bool discrete : {true, false}) {
      const NLevelPolicy model(tiny_arch(discrete));
      core::Rng rng(3);
      const auto params = model.init(rng);
      const Minibatch mb = toy_batch(model, params, 2, 6, 0.0, rng);
      const auto anchors = perturbed_anchors(model, params, 2, 0.0, rng);
      core::Tape tape;
      const auto vars = params.bind(tape);
      const auto parts = train::step_actor_loss(model, vars, mb, 2, anchors, 0.2, 0.01, 1.0);
      const double mean_a = std::accumulate(mb.advantages.begin(), mb.advantages.end(), 0.0) / mb.size();
      CHECK(parts.lh.value().item() == 0.0);
      CHECK(parts.loss.value().item() == doctest::Approx(-mean_a - 0.01 * parts.entropy.value().item()));
    }
  }

  TEST_CASE("clip is inert when every ratio is inside the band") {
    for (bool discrete : {true, false}) {
      const NLevelPolicy model(tiny_arch(discrete));
      core::Rng rng(4);
      for (int trial = 0; trial < 10; ++trial) {
        const auto params = model.init(rng);
        const std::size_t agent = rng.index(3);
        // |log r| < 0.15 keeps r inside [0.86, 1.17], within [0.8, 1.2].
        const Minibatch mb = toy_batch(model, params, agent, 8, 0.15, rng);
        core::Tape tape;
        const auto vars = params.bind(tape);
        const auto head = model.forward(vars, tape.constant(mb.actor_inputs), agent);
        const auto parts = train::ppo_actor_loss(head, mb, discrete, 0.2, 0.0);
        const Tensor logp = train::action_log_prob(head, mb, discrete).value();
        double plain = 0.0;
        for (std::size_t k = 0; k < mb.size(); ++k) {
          const double r = std::exp(logp[k] - mb.old_log_probs[k]);
          REQUIRE((r > 0.8 && r < 1.2));
          plain += r * mb.advantages[k];
        }
        CHECK(parts.surrogate.value().item() == doctest::Approx(plain / mb.size()).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("regularizer is zero with zero gradient at its anchor") {
    const NLevelPolicy model(tiny_arch(true));
    core::Rng rng(5);
    const auto params = model.init(rng);
    for (std::size_t agent = 0; agent < 3; ++agent) {
      const auto anchors = perturbed_anchors(model, params, agent, 0.0, rng);
      core::Tape tape;
      const auto vars = params.bind(tape);
      const auto lh = train::hypernet_regularizer(model, vars, agent, anchors, 3.0);
      CHECK(lh.value().item() == 0.0);
      if (agent == 0) continue;
      const auto grads = tape.backward(lh);
      for (const auto& [name, g] : grads) {
        for (double x : g.values()) CHECK(x == 0.0);
      }
    }
  }

  TEST_CASE("regularizer value matches its definition") {
    const NLevelPolicy model(tiny_arch(false));
    core::Rng rng(6);
    const auto params = model.init(rng);
    const auto anchors = perturbed_anchors(model, params, 2, 0.1, rng);
    double expect = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      const Tensor h = model.generate_target_params(params, j);
      for (std::size_t k = 0; k < h.size(); ++k) expect += (h[k] - anchors[j][k]) * (h[k] - anchors[j][k]);
    }
    expect *= 0.7 / 2.0;
    core::Tape tape;
    const auto lh = train::hypernet_regularizer(model, params.bind(tape), 2, anchors, 0.7);
    CHECK(lh.value().item() == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("actor loss with regularizer matches central differences") {
    core::Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
      const bool discrete = trial % 2 == 0;
      const NLevelPolicy model(tiny_arch(discrete));
      const auto params = model.init(rng);
      const std::size_t agent = rng.index(3);
      const Minibatch mb = toy_batch(model, params, agent, 3, 0.5, rng);
      const auto anchors = perturbed_anchors(model, params, agent, 0.05, rng);
      const double beta = rng.uniform(0.1, 2.0);
      auto f = [&](const core::ParamSet& p) {
        core::Tape t;
        return train::step_actor_loss(model, p.bind(t), mb, agent, anchors, 0.2, 0.01, beta).loss.value().item();
      };
      core::Tape tape;
      const auto vars = params.bind(tape);
      const auto grads = tape.backward(train::step_actor_loss(model, vars, mb, agent, anchors, 0.2, 0.01, beta).loss);
      const auto r = testing::check_gradients(f, params, grads, rng);
      CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst);
    }
  }

  TEST_CASE("critic loss matches central differences") {
    core::Rng rng(8);
    const core::Mlp critic("critic", {7, 6, 6, 1});
    for (int trial = 0; trial < 20; ++trial) {
      core::ParamSet params;
      critic.init(params, rng);
      Tensor x(Shape{3, 7});
      for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
      std::vector<double> old(3), ret(3);
      for (std::size_t k = 0; k < 3; ++k) {
        old[k] = rng.normal();
        ret[k] = rng.normal();
      }
      auto loss_of = [&](core::Tape& t, const core::VarMap& vars) {
        return train::critic_loss(core::reshape(critic.forward(vars, t.constant(x)), Shape{3}), old, ret, 0.2);
      };
      auto f = [&](const core::ParamSet& p) {
        core::Tape t;
        return loss_of(t, p.bind(t)).value().item();
      };
      core::Tape tape;
      const auto grads = tape.backward(loss_of(tape, params.bind(tape)));
      const auto r = testing::check_gradients(f, params, grads, rng);
      CHECK_MESSAGE(r.max_rel_error < 1e-4, r.worst);
    }
  }
}

TEST_SUITE("trainer") {
  TEST_CASE("same seed gives identical batches and updates") {
    for (const char* id : {"merge", "particle"}) {
      train::Trainer a(small_config(id)), b(small_config(id));
      auto ba = a.collect_rollouts(150);
      auto bb = b.collect_rollouts(150);
      for (std::size_t i = 0; i < 2; ++i) {
        CHECK(same_tensor(ba.agents[i].actor_inputs, bb.agents[i].actor_inputs));
        CHECK(ba.agents[i].log_probs == bb.agents[i].log_probs);
        CHECK(ba.agents[i].rewards == bb.agents[i].rewards);
        CHECK(ba.agents[i].values == bb.agents[i].values);
      }
      a.compute_advantages(ba);
      b.compute_advantages(bb);
      a.train_step(ba);
      b.train_step(bb);
      for (const auto& [name, t] : a.policy_params()) CHECK(same_tensor(t, b.policy_params().at(name)));

      auto other = small_config(id);
      other.seed = 1;
      train::Trainer c(other);
      CHECK(c.collect_rollouts(150).agents[0].log_probs != a.collect_rollouts(150).agents[0].log_probs);
    }
  }

  TEST_CASE("recorded superior actions are the executed ones") {
    for (const char* id : {"merge", "particle"}) {
      train::Trainer t(small_config(id, id == std::string("merge") ? 2 : 3));
      const auto batch = t.collect_rollouts(120);
      const PolicyArch& arch = t.arch();
      const std::size_t w = arch.slot_width();
      for (std::size_t k = 0; k < batch.steps; ++k) {
        for (std::size_t i = 1; i < arch.num_agents; ++i) {
          const double* row = batch.agents[i].actor_inputs.raw() + k * arch.input_width() + arch.obs_size;
          for (std::size_t j = 0; j < i; ++j) {
            const env::Action& a = batch.joint_actions[k][j];
            for (std::size_t c = 0; c < w; ++c) {
              const double expect = arch.discrete() ? (c == a.index ? 1.0 : 0.0) : a.values[c];
              CHECK(row[j * w + c] == expect);
            }
          }
        }
      }
    }
  }

  TEST_CASE("episode returns equal the sum of logged rewards") {
    train::Trainer t(small_config("merge"));
    const auto batch = t.collect_rollouts(400);
    REQUIRE(batch.episode_returns.size() >= 3);
    std::vector<double> acc(2, 0.0);
    std::size_t episode = 0;
    for (std::size_t k = 0; k < batch.steps; ++k) {
      for (std::size_t i = 0; i < 2; ++i) acc[i] += batch.agents[i].rewards[k];
      if (batch.agents[0].dones[k]) {
        CHECK(acc == batch.episode_returns[episode]);
        ++episode;
        acc.assign(2, 0.0);
      }
    }
    CHECK(episode == batch.episode_returns.size());
  }

  TEST_CASE("with peaked logits, transmitted rollout actions equal symmetric execution") {
    train::Trainer t(small_config("merge"));
    // Stretch the generated output layer so sampling is effectively argmax.
    core::ParamSet p = t.policy_params();
    const policy::TargetLayout l(t.arch());
    const auto& hyper = t.nlevel()->hyper_mlp();
    Tensor& w = p.at(hyper.weight_name(1));
    Tensor& b = p.at(hyper.bias_name(1));
    for (std::size_t c = l.w2; c < l.log_std; ++c) {
      for (std::size_t r = 0; r < w.rows(); ++r) w[r * w.cols() + c] *= 1e6;
      b[c] *= 1e6;
    }
    t.set_policy_params(p);
    const auto greedy = t.greedy_policy();
    std::size_t compared = 0;
    for (int k = 0; k < 300; ++k) {
      const bool fresh = !t.environment().state().done;
      const Tensor obs = t.environment().state().observation;
      const auto batch = t.collect_rollouts(1);
      if (!fresh) continue;
      CHECK(batch.joint_actions[0] == greedy->greedy_joint(obs));
      ++compared;
    }
    CHECK(compared > 250);
  }

  TEST_CASE("large beta holds superior targets closer than beta zero") {
    // Agent 1's own update is the same in both runs; the difference is how
    // far agent 2's turn drags agent 1's generated target.
    auto measure = [](double beta) {
      auto c = small_config("merge");
      c.beta = beta;
      c.epochs = 1;
      train::Trainer t(c);
      auto batch = t.collect_rollouts(200);
      t.compute_advantages(batch);
      const Tensor before = t.nlevel()->generate_target_params(t.policy_params(), 0);
      t.train_step(batch);
      const Tensor after = t.nlevel()->generate_target_params(t.policy_params(), 0);
      double s = 0.0;
      for (std::size_t k = 0; k < before.size(); ++k) s += (after[k] - before[k]) * (after[k] - before[k]);
      return std::sqrt(s);
    };
    CHECK(measure(1e6) < measure(0.0));
  }

  TEST_CASE("one metrics row per epoch and agent") {
    auto c = small_config("particle", 3);
    c.epochs = 3;
    train::Trainer t(c);
    auto batch = t.collect_rollouts(100);
    t.compute_advantages(batch);
    const auto rows = t.train_step(batch);
    REQUIRE(rows.size() == 9);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      CHECK(rows[k].epoch == k / 3);
      CHECK(rows[k].agent == k % 3);
      CHECK(std::isfinite(rows[k].actor_loss));
      CHECK(std::isfinite(rows[k].critic_loss));
    }
    CHECK(rows[0].lh == 0.0);
  }

  TEST_CASE("frozen embeddings stay put") {
    auto c = small_config("merge");
    c.freeze_embeddings = true;
    train::Trainer t(c);
    const Tensor before = t.policy_params().at(NLevelPolicy::kEmbedName);
    const Tensor hyper_before = t.policy_params().at(t.nlevel()->hyper_mlp().bias_name(1));
    auto batch = t.collect_rollouts(200);
    t.compute_advantages(batch);
    t.train_step(batch);
    CHECK(same_tensor(before, t.policy_params().at(NLevelPolicy::kEmbedName)));
    CHECK_FALSE(same_tensor(hyper_before, t.policy_params().at(t.nlevel()->hyper_mlp().bias_name(1))));
  }

  TEST_CASE("run records step zero, each interval and the end") {
    auto c = small_config("matrix");
    c.env.game = "mixing";
    c.total_steps = 450;
    c.eval_interval = 200;
    c.rollout = 100;
    train::Trainer t(c);
    std::size_t seen = 0;
    const auto result = t.run([&](const train::MetricsRow&) { ++seen; });
    std::vector<std::size_t> steps;
    for (const auto& row : result.metrics) steps.push_back(row.step);
    CHECK(steps == std::vector<std::size_t>{0, 200, 400, 450});
    CHECK(seen == 4);
    CHECK(result.updates.size() == 5 * c.epochs * 2);
    const auto& ev = result.final_eval;
    CHECK(ev.modal_joint.has_value());
    CHECK((ev.se_rate >= 0.0 && ev.se_rate <= 1.0));
    CHECK(std::isnan(ev.collision_rate));
    CHECK(result.checkpoint.kind == "step");
  }

  TEST_CASE("baselines train through the same loop") {
    for (auto algo : {train::Algorithm::kIppo, train::Algorithm::kCentralCritic}) {
      auto c = small_config("particle");
      c.algorithm = algo;
      train::Trainer t(c);
      CHECK(t.nlevel() == nullptr);
      const auto result = t.run();
      CHECK(result.metrics.back().step == 400);
      CHECK(std::isfinite(result.final_eval.mean_episode_return[0]));
    }
  }

  TEST_CASE("invalid settings name the field") {
    auto c = small_config("merge");
    c.clip = 1.5;
    CHECK_THROWS_WITH_AS(train::Trainer{c}, doctest::Contains("train.clip"), train::ConfigError);
    c = small_config("merge");
    c.beta = -1.0;
    CHECK_THROWS_WITH_AS(train::Trainer{c}, doctest::Contains("train.beta"), train::ConfigError);
  }
}
