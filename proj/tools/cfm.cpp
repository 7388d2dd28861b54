// Copyright 2026 The cfm-workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line entry point: collect, train, eval, plan, ablate, gradcheck.
// Every command is reproducible from its flags + seed; the effective config
// is printed and its hash lands in default output filenames. Exit codes:
// 0 success, 1 usage, 2 runtime failure.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <set>

#include "cfm/data/dataset.hpp"
#include "cfm/eval/bench.hpp"
#include "cfm/model/checkpoint_io.hpp"
#include "cfm/model/train.hpp"
#include "cfm/model/gradcheck_suite.hpp"
#include "cfm/nn/grad_check.hpp"
#include "cfm/nn/thread_pool.hpp"
#include "cfm/sim/render.hpp"

using nlohmann::json;
using namespace cfm;

namespace {

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_hash(const json& j) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08x",
                static_cast<uint32_t>(fnv1a64(j.dump()) & 0xffffffffu));
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
}

// Values from --config JSON that were not overridden on the command line.
// Unknown keys are rejected.
class ConfigFile {
 public:
  void load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    f >> j_;
    if (!j_.is_object()) throw std::runtime_error("config must be a JSON object");
  }

  template <typename T>
  void apply(const CLI::Option* opt, const std::string& key, T& target) {
    known_.insert(key);
    if (j_.contains(key) && opt->count() == 0) target = j_.at(key).get<T>();
  }

  void reject_unknown() const {
    for (const auto& [k, v] : j_.items()) {
      if (!known_.count(k)) {
        throw CLI::ValidationError("--config", "unknown config key: " + k);
      }
    }
  }

 private:
  json j_ = json::object();
  std::set<std::string> known_;
};

void print_config(const json& j) {
  std::printf("config %s %s\n", config_hash(j).c_str(), j.dump().c_str());
}

int default_image_size(sim::EnvKind env) {
  return env == sim::EnvKind::kPointmass ? 16 : 32;
}

int default_steps(sim::EnvKind env) {
  switch (env) {
    case sim::EnvKind::kPointmass: return 30;
    case sim::EnvKind::kRope: return 20;
    case sim::EnvKind::kCloth: return 40;
  }
  return 20;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// ---- gradcheck ------------------------------------------------------------

int cmd_gradcheck(int seeds, double tol, double h, int coords, uint64_t seed) {
  auto items = model::run_gradcheck_suite(seeds, h, coords, tol, seed);
  bool ok = true;
  for (const auto& item : items) {
    bool pass = item.max_rel_err < tol;
    ok = ok && pass;
    std::printf("%-22s max_rel_err %.3e  coords %lld  skipped %lld  %s\n",
                item.name.c_str(), item.max_rel_err,
                static_cast<long long>(item.coords),
                static_cast<long long>(item.skipped), pass ? "PASS" : "FAIL");
  }
  std::printf("gradcheck: %s (tol %.1e, %d seeds, h %.1e)\n",
              ok ? "PASS" : "FAIL", tol, seeds, h);
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contrastive forward models for deformable-object manipulation"};
  app.require_subcommand(1);
  std::function<int()> action;

  // ---- collect ----
  auto* collect = app.add_subcommand("collect", "collect a random-policy dataset");
  {
    struct Args {
      std::string env;
      int n_traj = 400, len = 25, image_size = 0, threads = 0;
      uint64_t seed = 0;
      bool randomize = false;
      std::string out, config;
    };
    auto a = std::make_shared<Args>();
    auto* env = collect->add_option("--env", a->env, "pointmass | rope | cloth");
    auto* ntraj = collect->add_option("--n-traj", a->n_traj, "trajectory count");
    auto* len = collect->add_option("--len", a->len, "actions per trajectory");
    auto* seed = collect->add_option("--seed", a->seed, "master seed");
    auto* imgs = collect->add_option("--image-size", a->image_size, "16, 32 or 64 (default 16 for pointmass, else 32)");
    auto* rnd = collect->add_flag("--randomize", a->randomize, "domain randomization");
    auto* out = collect->add_option("--out", a->out, "output .cfmd path");
    auto* thr = collect->add_option("--threads", a->threads, "worker cap (env CFM_THREADS as fallback)");
    collect->add_option("--config", a->config, "JSON config file; flags win");
    collect->callback([=, &action] {
      action = [=]() {
        ConfigFile cf;
        if (!a->config.empty()) cf.load(a->config);
        cf.apply(env, "env", a->env);
        cf.apply(ntraj, "n_traj", a->n_traj);
        cf.apply(len, "len", a->len);
        cf.apply(seed, "seed", a->seed);
        cf.apply(imgs, "image_size", a->image_size);
        cf.apply(rnd, "randomize", a->randomize);
        cf.apply(out, "out", a->out);
        cf.apply(thr, "threads", a->threads);
        cf.reject_unknown();
        if (a->env.empty()) throw CLI::ValidationError("collect", "--env is required");
        if (a->out.empty()) throw CLI::ValidationError("collect", "--out is required");
        if (a->threads > 0) nn::set_threads(a->threads);
        auto kind = sim::env_from_string(a->env);
        if (a->image_size == 0) a->image_size = default_image_size(kind);
        json cfg{{"cmd", "collect"},       {"env", a->env},
                 {"n_traj", a->n_traj},    {"len", a->len},
                 {"seed", a->seed},        {"image_size", a->image_size},
                 {"randomize", a->randomize}};
        print_config(cfg);
        data::CollectStats stats;
        auto d = data::collect_random(kind, a->n_traj, a->len, a->seed,
                                      a->randomize, a->image_size, {}, &stats);
        d.save(a->out);
        std::printf("wrote %d trajectories (%lld transitions) to %s\n",
                    d.n_traj(), static_cast<long long>(d.transition_count()),
                    a->out.c_str());
        if (stats.param_resamples > 0) {
          std::printf("render-param resamples due to empty segmentation: %lld\n",
                      static_cast<long long>(stats.param_resamples));
        }
        return 0;
      };
    });
  }

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a model on a dataset");
  {
    struct Args {
      std::string data, objective = "cfm", fm = "mlp_linear", sim = "e2";
      std::string out, losses_out, config;
      int latent = 8, epochs = 30, batch = 128, threads = 0;
      double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
      double lambda_f = 1.0, lambda_inv = 1.0;
      uint64_t seed = 0;
      bool exclude_positive = false, a_only = false;
    };
    auto a = std::make_shared<Args>();
    auto* dta = train->add_option("--data", a->data, ".cfmd dataset");
    auto* obj = train->add_option("--objective", a->objective, "cfm | autoencoder | joint | mse");
    auto* fm = train->add_option("--fm", a->fm, "linear | mlp | mlp_linear");
    auto* simo = train->add_option("--sim", a->sim, "e2 | logbilinear");
    auto* lat = train->add_option("--latent", a->latent, "latent dimension");
    auto* ep = train->add_option("--epochs", a->epochs, "training epochs");
    auto* ba = train->add_option("--batch", a->batch, "batch size");
    auto* lr = train->add_option("--lr", a->lr, "learning rate");
    auto* b1 = train->add_option("--beta1", a->beta1, "Adam beta1");
    auto* b2 = train->add_option("--beta2", a->beta2, "Adam beta2");
    auto* epso = train->add_option("--eps", a->eps, "Adam epsilon");
    auto* lf = train->add_option("--lambda-f", a->lambda_f, "autoencoder forward weight");
    auto* li = train->add_option("--lambda-inv", a->lambda_inv, "joint inverse weight");
    auto* sd = train->add_option("--seed", a->seed, "master seed");
    auto* xp = train->add_flag("--exclude-positive", a->exclude_positive,
                               "drop the positive from the InfoNCE denominator");
    auto* ao = train->add_flag("--a-only", a->a_only, "mlp_linear conditions on the action alone");
    auto* out = train->add_option("--out", a->out, "checkpoint path (default model_<hash>.cfmc)");
    auto* lo = train->add_option("--losses-out", a->losses_out, "loss curve JSON (default losses_<hash>.json)");
    auto* thr = train->add_option("--threads", a->threads, "worker cap");
    train->add_option("--config", a->config, "JSON config file; flags win");
    train->callback([=, &action] {
      action = [=]() {
        ConfigFile cf;
        if (!a->config.empty()) cf.load(a->config);
        cf.apply(dta, "data", a->data);
        cf.apply(obj, "objective", a->objective);
        cf.apply(fm, "fm", a->fm);
        cf.apply(simo, "sim", a->sim);
        cf.apply(lat, "latent", a->latent);
        cf.apply(ep, "epochs", a->epochs);
        cf.apply(ba, "batch", a->batch);
        cf.apply(lr, "lr", a->lr);
        cf.apply(b1, "beta1", a->beta1);
        cf.apply(b2, "beta2", a->beta2);
        cf.apply(epso, "eps", a->eps);
        cf.apply(lf, "lambda_f", a->lambda_f);
        cf.apply(li, "lambda_inv", a->lambda_inv);
        cf.apply(sd, "seed", a->seed);
        cf.apply(xp, "exclude_positive", a->exclude_positive);
        cf.apply(ao, "a_only", a->a_only);
        cf.apply(out, "out", a->out);
        cf.apply(lo, "losses_out", a->losses_out);
        cf.apply(thr, "threads", a->threads);
        cf.reject_unknown();
        if (a->data.empty()) throw CLI::ValidationError("train", "--data is required");
        if (a->threads > 0) nn::set_threads(a->threads);
        json cfg{{"cmd", "train"},           {"data", a->data},
                 {"objective", a->objective}, {"fm", a->fm},
                 {"sim", a->sim},             {"latent", a->latent},
                 {"epochs", a->epochs},       {"batch", a->batch},
                 {"lr", a->lr},               {"beta1", a->beta1},
                 {"beta2", a->beta2},         {"eps", a->eps},
                 {"lambda_f", a->lambda_f},   {"lambda_inv", a->lambda_inv},
                 {"seed", a->seed},           {"exclude_positive", a->exclude_positive},
                 {"a_only", a->a_only}};
        print_config(cfg);
        std::string hash = config_hash(cfg);
        std::string out_path = a->out.empty() ? "model_" + hash + ".cfmc" : a->out;
        std::string losses_path =
            a->losses_out.empty() ? "losses_" + hash + ".json" : a->losses_out;

        auto dataset = data::Dataset::load(a->data);
        data::TransitionView view(dataset);
        model::TrainConfig tc;
        tc.objective = a->objective;
        tc.similarity = nn::similarity_from_string(a->sim);
        tc.include_positive = !a->exclude_positive;
        tc.fm.variant = model::fm_variant_from_string(a->fm);
        tc.fm.action_only = a->a_only;
        tc.latent_dim = a->latent;
        tc.epochs = a->epochs;
        tc.batch_size = a->batch;
        tc.lr = a->lr;
        tc.beta1 = a->beta1;
        tc.beta2 = a->beta2;
        tc.eps = a->eps;
        tc.lambda_f = a->lambda_f;
        tc.lambda_inv = a->lambda_inv;
        tc.seed = a->seed;
        // The checkpoint is written only after training finishes, so a
        // diverged run leaves no partial file behind.
        auto result = model::train(view, tc, [](int epoch, double loss) {
          std::printf("epoch %d mean loss %.6f\n", epoch, loss);
          std::fflush(stdout);
        });
        model::save_checkpoint(result.ckpt, out_path);
        json losses{{"config", cfg}, {"epoch_loss", result.epoch_loss}};
        write_text(losses_path, losses.dump(2) + "\n");
        std::printf("wrote checkpoint %s and loss curve %s\n", out_path.c_str(),
                    losses_path.c_str());
        return 0;
      };
    });
  }

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "benchmark a checkpoint (plus the random policy)");
  {
    struct Args {
      std::string ckpt, policy, env, goals, out_prefix, config;
      int episodes = 50, steps = 0, candidates = 100, image_size = 0, threads = 0;
      uint64_t seed = 0;
      bool randomize = false;
    };
    auto a = std::make_shared<Args>();
    auto* ck = eval_cmd->add_option("--ckpt", a->ckpt, "checkpoint .cfmc");
    auto* po = eval_cmd->add_option("--policy", a->policy, "'random' to run the baseline alone");
    auto* en = eval_cmd->add_option("--env", a->env, "required with --policy random");
    auto* go = eval_cmd->add_option("--goals", a->goals, "comma-separated goal ids");
    auto* ne = eval_cmd->add_option("--episodes", a->episodes, "episodes per cell");
    auto* st = eval_cmd->add_option("--steps", a->steps, "actions per episode (default per env)");
    auto* ca = eval_cmd->add_option("--candidates", a->candidates, "MPC candidates per step");
    auto* sd = eval_cmd->add_option("--seed", a->seed, "master seed");
    auto* rz = eval_cmd->add_flag("--randomize", a->randomize, "domain randomization");
    auto* is = eval_cmd->add_option("--image-size", a->image_size, "render size for --policy random");
    auto* op = eval_cmd->add_option("--out-prefix", a->out_prefix, "output prefix (default results_<hash>)");
    auto* thr = eval_cmd->add_option("--threads", a->threads, "worker cap");
    eval_cmd->add_option("--config", a->config, "JSON config file; flags win");
    eval_cmd->callback([=, &action] {
      action = [=]() {
        ConfigFile cf;
        if (!a->config.empty()) cf.load(a->config);
        cf.apply(ck, "ckpt", a->ckpt);
        cf.apply(po, "policy", a->policy);
        cf.apply(en, "env", a->env);
        cf.apply(go, "goals", a->goals);
        cf.apply(ne, "episodes", a->episodes);
        cf.apply(st, "steps", a->steps);
        cf.apply(ca, "candidates", a->candidates);
        cf.apply(sd, "seed", a->seed);
        cf.apply(rz, "randomize", a->randomize);
        cf.apply(is, "image_size", a->image_size);
        cf.apply(op, "out_prefix", a->out_prefix);
        cf.apply(thr, "threads", a->threads);
        cf.reject_unknown();
        if (a->threads > 0) nn::set_threads(a->threads);
        if (a->ckpt.empty() && a->policy != "random") {
          throw CLI::ValidationError("eval", "need --ckpt or --policy random");
        }

        model::Checkpoint loaded;
        bool has_ckpt = !a->ckpt.empty();
        sim::EnvKind env;
        if (has_ckpt) {
          loaded = model::load_checkpoint(a->ckpt);
          env = loaded.specs.env;
          if (a->image_size == 0) a->image_size = loaded.specs.image_size;
        } else {
          if (a->env.empty()) {
            throw CLI::ValidationError("eval", "--policy random needs --env");
          }
          env = sim::env_from_string(a->env);
          if (a->image_size == 0) a->image_size = default_image_size(env);
        }
        if (a->steps == 0) a->steps = default_steps(env);
        if (a->goals.empty()) {
          switch (env) {
            case sim::EnvKind::kRope: a->goals = "horizontal,vertical,diag45,diag135,random"; break;
            case sim::EnvKind::kCloth: a->goals = "flat,random"; break;
            case sim::EnvKind::kPointmass: a->goals = "center,random"; break;
          }
        }
        json cfg{{"cmd", "eval"},         {"ckpt", a->ckpt},
                 {"policy", a->policy},   {"env", sim::to_string(env)},
                 {"goals", a->goals},     {"episodes", a->episodes},
                 {"steps", a->steps},     {"candidates", a->candidates},
                 {"seed", a->seed},       {"randomize", a->randomize},
                 {"image_size", a->image_size}};
        print_config(cfg);
        std::string prefix =
            a->out_prefix.empty() ? "results_" + config_hash(cfg) : a->out_prefix;

        eval::BenchConfig bc;
        bc.env = env;
        for (const auto& gs : split_csv(a->goals)) {
          bc.goals.push_back({env, eval::goal_from_string(gs), a->seed});
        }
        bc.episodes = a->episodes;
        bc.max_steps = a->steps;
        bc.n_candidates = a->candidates;
        bc.seed = a->seed;
        bc.randomize = a->randomize;
        bc.image_size = a->image_size;

        std::vector<eval::BenchMethod> methods;
        methods.push_back({"random", nullptr});
        if (has_ckpt) methods.push_back({loaded.objective, &loaded});
        auto table = eval::benchmark(bc, methods, [](const std::string& line) {
          std::printf("%s\n", line.c_str());
          std::fflush(stdout);
        });
        std::string tsv = eval::to_tsv(table);
        write_text(prefix + ".tsv", tsv);
        write_text(prefix + ".json", eval::to_json(table).dump(2) + "\n");
        std::printf("%s", tsv.c_str());
        std::printf("wrote %s.tsv and %s.json\n", prefix.c_str(), prefix.c_str());
        return 0;
      };
    });
  }

  // ---- plan ----
  auto* plan_cmd = app.add_subcommand("plan", "run one planned episode with per-step logging");
  {
    struct Args {
      std::string ckpt, goal, out, config;
      int steps = 0, candidates = 100, threads = 0;
      uint64_t seed = 0;
      bool randomize = false;
    };
    auto a = std::make_shared<Args>();
    auto* ck = plan_cmd->add_option("--ckpt", a->ckpt, "checkpoint .cfmc");
    auto* go = plan_cmd->add_option("--goal", a->goal, "goal id");
    auto* st = plan_cmd->add_option("--steps", a->steps, "actions (default per env)");
    auto* ca = plan_cmd->add_option("--candidates", a->candidates, "MPC candidates per step");
    auto* sd = plan_cmd->add_option("--seed", a->seed, "episode seed");
    auto* rz = plan_cmd->add_flag("--randomize", a->randomize, "domain randomization");
    auto* ou = plan_cmd->add_option("--out", a->out, "episode JSON (default episode_<hash>.json)");
    auto* thr = plan_cmd->add_option("--threads", a->threads, "worker cap");
    plan_cmd->add_option("--config", a->config, "JSON config file; flags win");
    plan_cmd->callback([=, &action] {
      action = [=]() {
        ConfigFile cf;
        if (!a->config.empty()) cf.load(a->config);
        cf.apply(ck, "ckpt", a->ckpt);
        cf.apply(go, "goal", a->goal);
        cf.apply(st, "steps", a->steps);
        cf.apply(ca, "candidates", a->candidates);
        cf.apply(sd, "seed", a->seed);
        cf.apply(rz, "randomize", a->randomize);
        cf.apply(ou, "out", a->out);
        cf.apply(thr, "threads", a->threads);
        cf.reject_unknown();
        if (a->ckpt.empty()) throw CLI::ValidationError("plan", "--ckpt is required");
        if (a->goal.empty()) throw CLI::ValidationError("plan", "--goal is required");
        if (a->threads > 0) nn::set_threads(a->threads);
        auto ckpt = model::load_checkpoint(a->ckpt);
        auto env = ckpt.specs.env;
        if (a->steps == 0) a->steps = default_steps(env);
        json cfg{{"cmd", "plan"},     {"ckpt", a->ckpt},
                 {"goal", a->goal},   {"steps", a->steps},
                 {"candidates", a->candidates}, {"seed", a->seed},
                 {"randomize", a->randomize}};
        print_config(cfg);
        std::string out_path =
            a->out.empty() ? "episode_" + config_hash(cfg) + ".json" : a->out;

        eval::EpisodeConfig ec;
        ec.env = env;
        ec.goal = {env, eval::goal_from_string(a->goal), a->seed};
        ec.max_steps = a->steps;
        ec.n_candidates = a->candidates;
        ec.seed = a->seed;
        ec.randomize = a->randomize;
        ec.image_size = ckpt.specs.image_size;
        plan::CheckpointModel policy(ckpt);
        auto rep = eval::run_episode(ec, &policy);

        json steps = json::array();
        for (const auto& s : rep.steps) {
          steps.push_back({{"pick", {s.action.pick_u, s.action.pick_v}},
                           {"delta", {s.action.dx, s.action.dy, s.action.dz}},
                           {"metric", s.metric},
                           {"intersection", s.intersection},
                           {"chosen_latent_distance", s.chosen_distance}});
        }
        json out{{"config", cfg},
                 {"initial_metric", rep.metric_trace[0]},
                 {"steps", steps},
                 {"best_metric", rep.best_metric},
                 {"final_metric", rep.final_metric},
                 {"wall_seconds", rep.wall_seconds}};
        write_text(out_path, out.dump(2) + "\n");
        std::printf("initial %.4f -> best %.4f, final %.4f over %d actions; log in %s\n",
                    rep.metric_trace[0], rep.best_metric, rep.final_metric,
                    rep.actions_executed, out_path.c_str());
        return 0;
      };
    });
  }

  // ---- ablate ----
  auto* ablate = app.add_subcommand("ablate", "forward-model x similarity ablation grid");
  {
    struct Args {
      std::string data, goals = "random", out_prefix, config;
      std::vector<std::string> grid;
      int epochs = 10, batch = 128, latent = 8;
      int episodes = 20, steps = 0, candidates = 100, threads = 0;
      double lr = 1e-3;
      uint64_t seed = 0;
    };
    auto a = std::make_shared<Args>();
    auto* dt = ablate->add_option("--data", a->data, ".cfmd dataset");
    auto* gr = ablate->add_option("--grid", a->grid,
                                  "grid subset, e.g. fm=linear,mlp sim=e2")
                   ->expected(-1);
    auto* go = ablate->add_option("--goals", a->goals, "comma-separated goal ids");
    auto* ep = ablate->add_option("--epochs", a->epochs, "epochs per cell");
    auto* ba = ablate->add_option("--batch", a->batch, "batch size");
    auto* lr = ablate->add_option("--lr", a->lr, "learning rate");
    auto* la = ablate->add_option("--latent", a->latent, "latent dimension");
    auto* ne = ablate->add_option("--episodes", a->episodes, "episodes per cell");
    auto* st = ablate->add_option("--steps", a->steps, "actions per episode");
    auto* ca = ablate->add_option("--candidates", a->candidates, "MPC candidates");
    auto* sd = ablate->add_option("--seed", a->seed, "master seed");
    auto* op = ablate->add_option("--out-prefix", a->out_prefix, "output prefix (default ablation_<hash>)");
    auto* thr = ablate->add_option("--threads", a->threads, "worker cap");
    ablate->add_option("--config", a->config, "JSON config file; flags win");
    ablate->callback([=, &action] {
      action = [=]() {
        ConfigFile cf;
        if (!a->config.empty()) cf.load(a->config);
        cf.apply(dt, "data", a->data);
        cf.apply(go, "goals", a->goals);
        cf.apply(ep, "epochs", a->epochs);
        cf.apply(ba, "batch", a->batch);
        cf.apply(lr, "lr", a->lr);
        cf.apply(la, "latent", a->latent);
        cf.apply(ne, "episodes", a->episodes);
        cf.apply(st, "steps", a->steps);
        cf.apply(ca, "candidates", a->candidates);
        cf.apply(sd, "seed", a->seed);
        cf.apply(op, "out_prefix", a->out_prefix);
        cf.apply(thr, "threads", a->threads);
        cf.apply(gr, "grid", a->grid);
        cf.reject_unknown();
        if (a->data.empty()) throw CLI::ValidationError("ablate", "--data is required");
        std::vector<model::ForwardModelSpec::Variant> fm_grid;
        std::vector<nn::Similarity> sim_grid;
        for (const auto& tok : a->grid) {
          auto eq = tok.find('=');
          if (eq == std::string::npos) {
            throw CLI::ValidationError("ablate", "--grid tokens look like fm=... or sim=...");
          }
          std::string key = tok.substr(0, eq);
          for (const auto& v : split_csv(tok.substr(eq + 1))) {
            if (key == "fm") {
              fm_grid.push_back(model::fm_variant_from_string(v));
            } else if (key == "sim") {
              sim_grid.push_back(nn::similarity_from_string(v));
            } else {
              throw CLI::ValidationError("ablate", "unknown grid axis: " + key);
            }
          }
        }
        if (a->threads > 0) nn::set_threads(a->threads);

        auto dataset = data::Dataset::load(a->data);
        auto env = dataset.kind();
        if (a->steps == 0) a->steps = default_steps(env);
        json cfg{{"cmd", "ablate"},    {"data", a->data},
                 {"goals", a->goals},  {"epochs", a->epochs},
                 {"batch", a->batch},  {"lr", a->lr},
                 {"latent", a->latent}, {"episodes", a->episodes},
                 {"steps", a->steps},  {"candidates", a->candidates},
                 {"seed", a->seed}};
        print_config(cfg);
        std::string prefix =
            a->out_prefix.empty() ? "ablation_" + config_hash(cfg) : a->out_prefix;

        model::TrainConfig tc;
        tc.epochs = a->epochs;
        tc.batch_size = a->batch;
        tc.lr = a->lr;
        tc.latent_dim = a->latent;
        tc.seed = a->seed;

        eval::BenchConfig bc;
        bc.env = env;
        for (const auto& gs : split_csv(a->goals)) {
          bc.goals.push_back({env, eval::goal_from_string(gs), a->seed});
        }
        bc.episodes = a->episodes;
        bc.max_steps = a->steps;
        bc.n_candidates = a->candidates;
        bc.seed = a->seed;
        bc.image_size = dataset.image_size();

        auto table = eval::run_ablation(
            dataset, tc, bc,
            [](const std::string& l) {
              std::printf("%s\n", l.c_str());
              std::fflush(stdout);
            },
            fm_grid, sim_grid);
        std::string tsv = eval::to_tsv(table);
        write_text(prefix + ".tsv", tsv);
        write_text(prefix + ".json", eval::to_json(table).dump(2) + "\n");
        std::printf("%s", tsv.c_str());
        std::printf("wrote %s.tsv and %s.json\n", prefix.c_str(), prefix.c_str());
        return 0;
      };
    });
  }

  // ---- gradcheck ----
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every layer and objective");
  {
    struct Args {
      int seeds = 20, coords = 10, threads = 0;
      double tol = 1e-4, h = 1e-5;
      uint64_t seed = 0;
      std::string config;
    };
    auto a = std::make_shared<Args>();
    auto* se = gc->add_option("--seeds", a->seeds, "random seeds per item");
    auto* to = gc->add_option("--tol", a->tol, "max relative error for exit code 0");
    auto* hh = gc->add_option("--fd-step", a->h, "finite-difference step");
    auto* co = gc->add_option("--coords", a->coords, "coordinates sampled per tensor");
    auto* sd = gc->add_option("--seed", a->seed, "master seed");
    auto* thr = gc->add_option("--threads", a->threads, "worker cap");
    gc->add_option("--config", a->config, "JSON config file; flags win");
    gc->callback([=, &action] {
      action = [=]() {
        ConfigFile cf;
        if (!a->config.empty()) cf.load(a->config);
        cf.apply(se, "seeds", a->seeds);
        cf.apply(to, "tol", a->tol);
        cf.apply(hh, "fd_step", a->h);
        cf.apply(co, "coords", a->coords);
        cf.apply(sd, "seed", a->seed);
        cf.apply(thr, "threads", a->threads);
        cf.reject_unknown();
        if (a->threads > 0) nn::set_threads(a->threads);
        json cfg{{"cmd", "gradcheck"}, {"seeds", a->seeds},   {"tol", a->tol},
                 {"h", a->h},          {"coords", a->coords}, {"seed", a->seed}};
        print_config(cfg);
        return cmd_gradcheck(a->seeds, a->tol, a->h, a->coords, a->seed);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    return action();
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
