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

#include "cfm/eval/bench.hpp"

#include <cmath>
#include <sstream>

namespace cfm::eval {

namespace {

struct Stats {
  double mean = 0.0;
  double stdev = 0.0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

nlohmann::json echo_config(const BenchConfig& cfg) {
  nlohmann::json goals = nlohmann::json::array();
  for (const auto& g : cfg.goals) goals.push_back(to_string(g.id));
  return nlohmann::json{{"env", sim::to_string(cfg.env)},
                        {"goals", goals},
                        {"episodes", cfg.episodes},
                        {"max_steps", cfg.max_steps},
                        {"n_candidates", cfg.n_candidates},
                        {"seed", cfg.seed},
                        {"randomize", cfg.randomize},
                        {"image_size", cfg.image_size}};
}

}  // namespace

BenchTable benchmark(const BenchConfig& cfg,
                     const std::vector<BenchMethod>& methods,
                     const std::function<void(const std::string&)>& log) {
  BenchTable table;
  table.config_echo = echo_config(cfg);
  for (size_t mi = 0; mi < methods.size(); ++mi) {
    const auto& method = methods[mi];
    std::unique_ptr<plan::CheckpointModel> model;
    if (method.ckpt != nullptr) {
      model = std::make_unique<plan::CheckpointModel>(*method.ckpt);
    }
    for (size_t gi = 0; gi < cfg.goals.size(); ++gi) {
      std::vector<double> best, final_;
      for (int ep = 0; ep < cfg.episodes; ++ep) {
        EpisodeConfig ec;
        ec.env = cfg.env;
        ec.goal = cfg.goals[gi];
        ec.max_steps = cfg.max_steps;
        ec.n_candidates = cfg.n_candidates;
        ec.randomize = cfg.randomize;
        ec.image_size = cfg.image_size;
        ec.sim = cfg.sim;
        ec.seed = nn::Rng::mix(nn::Rng::mix(cfg.seed, mi * 1000 + gi), ep);
        if (ec.goal.id == GoalId::kRandom) {
          ec.goal.seed = nn::Rng::mix(ec.seed, 17);
        }
        auto rep = run_episode(ec, model.get());
        best.push_back(rep.best_metric);
        final_.push_back(rep.final_metric);
      }
      Stats sb = stats_of(best);
      Stats sf = stats_of(final_);
      BenchCell cell;
      cell.method = method.name;
      cell.goal = to_string(cfg.goals[gi].id);
      cell.n = cfg.episodes;
      cell.mean_best = sb.mean;
      cell.std_best = sb.stdev;
      cell.mean_final = sf.mean;
      cell.std_final = sf.stdev;
      table.cells.push_back(cell);
      if (log) {
        std::ostringstream os;
        os << method.name << " x " << cell.goal << ": best " << sb.mean << " +/- "
           << sb.stdev << ", final " << sf.mean << " +/- " << sf.stdev;
        log(os.str());
      }
    }
  }
  return table;
}

BenchTable run_ablation(const data::Dataset& dataset,
                        const model::TrainConfig& base_train,
                        const BenchConfig& bench,
                        const std::function<void(const std::string&)>& log,
                        std::vector<model::ForwardModelSpec::Variant> fm_grid,
                        std::vector<nn::Similarity> sim_grid) {
  using Variant = model::ForwardModelSpec::Variant;
  const std::vector<Variant> variants =
      fm_grid.empty() ? std::vector<Variant>{Variant::kLinear, Variant::kMlp,
                                             Variant::kMlpLinear}
                      : fm_grid;
  const std::vector<nn::Similarity> sims =
      sim_grid.empty() ? std::vector<nn::Similarity>{nn::Similarity::kE2,
                                                     nn::Similarity::kLogBilinear}
                       : sim_grid;
  data::TransitionView view(dataset);

  std::vector<model::Checkpoint> ckpts;
  std::vector<std::string> names;
  for (auto v : variants) {
    for (auto s : sims) {
      model::TrainConfig cfg = base_train;
      cfg.objective = "cfm";
      cfg.fm.variant = v;
      cfg.similarity = s;
      std::string name = "cfm_" + model::to_string(v) + "_" + nn::to_string(s);
      if (log) log("training " + name);
      auto result = model::train(view, cfg);
      ckpts.push_back(std::move(result.ckpt));
      names.push_back(name);
    }
  }

  std::vector<BenchMethod> methods;
  methods.push_back({"random", nullptr});
  for (size_t i = 0; i < ckpts.size(); ++i) {
    methods.push_back({names[i], &ckpts[i]});
  }
  return benchmark(bench, methods, log);
}

std::string to_tsv(const BenchTable& table) {
  std::ostringstream os;
  os << "method\tgoal\tn\tmean_best\tstd_best\tmean_final\tstd_final\n";
  os.precision(6);
  os << std::fixed;
  for (const auto& c : table.cells) {
    os << c.method << '\t' << c.goal << '\t' << c.n << '\t' << c.mean_best
       << '\t' << c.std_best << '\t' << c.mean_final << '\t' << c.std_final
       << '\n';
  }
  return os.str();
}

nlohmann::json to_json(const BenchTable& table) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : table.cells) {
    cells.push_back({{"method", c.method},
                     {"goal", c.goal},
                     {"n", c.n},
                     {"mean_best", c.mean_best},
                     {"std_best", c.std_best},
                     {"mean_final", c.mean_final},
                     {"std_final", c.std_final}});
  }
  return nlohmann::json{{"config", table.config_echo}, {"cells", cells}};
}

}  // namespace cfm::eval
