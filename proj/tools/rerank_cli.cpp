// Command-line pipeline: simulate -> train -> rerank -> evaluate -> ablate.
// Data goes to files, tables to stdout, progress to stderr.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rerank/checkpoint.hpp"
#include "rerank/data.hpp"
#include "rerank/metrics.hpp"
#include "rerank/simulator.hpp"
#include "rerank/training.hpp"
#include "rerank/truth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rerank;

namespace {

struct FileConfig {
  SimConfig sim;
  TrainConfig train;
};

template <typename T>
void apply_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::string& section,
                    const std::vector<std::string>& allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      const std::string where = section.empty() ? key : section + "." + key;
      throw UsageError("config: unknown field \"" + where + "\"");
    }
  }
}

void parse_sim_section(const json& j, SimConfig& sim) {
  reject_unknown(j, "sim",
                 {"num_users", "num_items", "num_categories",
                  "records_per_user", "input_size", "exhibit_size",
                  "latent_dim", "position_decay", "context_strength",
                  "price_anchor", "explore_epsilon", "affinity_scale",
                  "affinity_bias", "user_bias_std", "item_bias_std", "category_noise",
                  "candidate_pool_factor"});
  apply_field(j, "num_users", sim.num_users);
  apply_field(j, "num_items", sim.num_items);
  apply_field(j, "num_categories", sim.num_categories);
  apply_field(j, "records_per_user", sim.records_per_user);
  apply_field(j, "input_size", sim.input_size);
  apply_field(j, "exhibit_size", sim.exhibit_size);
  apply_field(j, "latent_dim", sim.latent_dim);
  apply_field(j, "position_decay", sim.position_decay);
  apply_field(j, "context_strength", sim.context_strength);
  apply_field(j, "price_anchor", sim.price_anchor);
  apply_field(j, "explore_epsilon", sim.explore_epsilon);
  apply_field(j, "affinity_scale", sim.affinity_scale);
  apply_field(j, "affinity_bias", sim.affinity_bias);
  apply_field(j, "user_bias_std", sim.user_bias_std);
  apply_field(j, "item_bias_std", sim.item_bias_std);
  apply_field(j, "category_noise", sim.category_noise);
  apply_field(j, "candidate_pool_factor", sim.candidate_pool_factor);
}

void parse_train_section(const json& j, TrainConfig& train) {
  reject_unknown(j, "train",
                 {"lr", "batch_size", "evaluator_epochs", "generator_epochs",
                  "validation_frac", "eval_k", "use_self_reward",
                  "use_diff_reward"});
  apply_field(j, "lr", train.lr);
  apply_field(j, "batch_size", train.batch_size);
  apply_field(j, "evaluator_epochs", train.evaluator_epochs);
  apply_field(j, "generator_epochs", train.generator_epochs);
  apply_field(j, "validation_frac", train.validation_frac);
  apply_field(j, "eval_k", train.eval_k);
  apply_field(j, "use_self_reward", train.use_self_reward);
  apply_field(j, "use_diff_reward", train.use_diff_reward);
}

void parse_evaluator_section(const json& j, EvaluatorConfig& cfg) {
  reject_unknown(j, "evaluator",
                 {"embedding_dim", "lstm_hidden", "mlp_hidden", "use_bilstm",
                  "use_selfattn", "attention_heads", "lstm_cell"});
  apply_field(j, "embedding_dim", cfg.embedding_dim);
  apply_field(j, "lstm_hidden", cfg.lstm_hidden);
  apply_field(j, "mlp_hidden", cfg.mlp_hidden);
  apply_field(j, "use_bilstm", cfg.use_bilstm);
  apply_field(j, "use_selfattn", cfg.use_selfattn);
  apply_field(j, "attention_heads", cfg.attention_heads);
  if (j.contains("lstm_cell")) {
    const std::string cell = j.at("lstm_cell").get<std::string>();
    if (cell == "standard") {
      cfg.lstm_cell = LstmCellKind::standard;
    } else if (cell == "forget_input") {
      cfg.lstm_cell = LstmCellKind::forget_input;
    } else {
      throw UsageError("config: evaluator.lstm_cell must be \"standard\" or "
                       "\"forget_input\"");
    }
  }
}

void parse_generator_section(const json& j, GeneratorConfig& cfg) {
  reject_unknown(j, "generator",
                 {"embedding_dim", "gru_hidden", "mlp_hidden", "use_evolving",
                  "use_activating"});
  apply_field(j, "embedding_dim", cfg.embedding_dim);
  apply_field(j, "gru_hidden", cfg.gru_hidden);
  apply_field(j, "mlp_hidden", cfg.mlp_hidden);
  apply_field(j, "use_evolving", cfg.use_evolving);
  apply_field(j, "use_activating", cfg.use_activating);
}

FileConfig load_config(const std::string& path) {
  FileConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw DataError("config file is not valid JSON: " + path);
  }
  reject_unknown(j, "", {"sim", "train", "evaluator", "generator"});
  try {
    if (j.contains("sim")) parse_sim_section(j.at("sim"), cfg.sim);
    if (j.contains("train")) parse_train_section(j.at("train"), cfg.train);
    if (j.contains("evaluator")) {
      parse_evaluator_section(j.at("evaluator"), cfg.train.evaluator);
    }
    if (j.contains("generator")) {
      parse_generator_section(j.at("generator"), cfg.train.generator);
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return cfg;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path.string());
  return out;
}

std::vector<const ItemProfile*> input_list(const ListRecord& rec) {
  std::vector<const ItemProfile*> c;
  c.reserve(rec.items.size());
  for (const ItemProfile& it : rec.items) c.push_back(&it);
  return c;
}

// ---- simulate ----

struct SimulateArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = 0;
  SimConfig overrides;
  CLI::App* cmd = nullptr;
};

void write_dataset_split(const fs::path& dir, const std::string& name,
                         const std::vector<ListRecord>& records,
                         const std::vector<TruthRecord>& truths) {
  save_records((dir / (name + ".jsonl")).string(), records);
  save_truth((dir / (name + ".truth.jsonl")).string(), truths);
  std::cerr << "wrote " << records.size() << " records to "
            << (dir / (name + ".jsonl")).string() << "\n";
}

int cmd_simulate(const SimulateArgs& args) {
  SimConfig sim = load_config(args.config_path).sim;
  if (args.cmd->count("--users")) sim.num_users = args.overrides.num_users;
  if (args.cmd->count("--items")) sim.num_items = args.overrides.num_items;
  if (args.cmd->count("--categories")) {
    sim.num_categories = args.overrides.num_categories;
  }
  if (args.cmd->count("--records-per-user")) {
    sim.records_per_user = args.overrides.records_per_user;
  }
  if (args.cmd->count("--m")) sim.input_size = args.overrides.input_size;
  if (args.cmd->count("--n")) sim.exhibit_size = args.overrides.exhibit_size;
  if (args.cmd->count("--gamma")) {
    sim.position_decay = args.overrides.position_decay;
  }
  if (args.cmd->count("--beta")) {
    sim.context_strength = args.overrides.context_strength;
  }
  if (args.cmd->count("--alpha")) {
    sim.price_anchor = args.overrides.price_anchor;
  }
  if (args.cmd->count("--epsilon")) {
    sim.explore_epsilon = args.overrides.explore_epsilon;
  }
  sim.seed = static_cast<std::uint64_t>(args.seed);
  sim.validate();

  const SimOutput out = simulate_records(sim);
  const std::size_t total = out.records.size();

  // 90% train+val / 10% test, then 10% of the former held out as val
  const std::vector<std::size_t> perm =
      split_permutation(total, sim.seed ^ 0x5717ULL);
  const auto fit_count = static_cast<std::size_t>(
      std::llround(0.9 * static_cast<double>(total)));
  const auto train_count = static_cast<std::size_t>(
      std::llround(0.9 * static_cast<double>(fit_count)));
  std::vector<ListRecord> train, val, test;
  std::vector<TruthRecord> train_t, val_t, test_t;
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t src = perm[i];
    if (i < train_count) {
      train.push_back(out.records[src]);
      train_t.push_back(out.truth.records[src]);
    } else if (i < fit_count) {
      val.push_back(out.records[src]);
      val_t.push_back(out.truth.records[src]);
    } else {
      test.push_back(out.records[src]);
      test_t.push_back(out.truth.records[src]);
    }
  }

  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  write_dataset_split(dir, "train", train, train_t);
  write_dataset_split(dir, "val", val, val_t);
  write_dataset_split(dir, "test", test, test_t);
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string stage;
  std::string data_path;
  std::string val_path;
  std::string config_path;
  std::string out_dir;
  std::string evaluator_ckpt;
  std::int64_t seed = 0;
  TrainConfig overrides;
  CLI::App* cmd = nullptr;
};

TrainConfig merge_train_flags(const TrainArgs& args, TrainConfig cfg) {
  const auto passed = [&](const std::string& name) {
    const CLI::Option* opt = args.cmd->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (passed("--lr")) cfg.lr = args.overrides.lr;
  if (passed("--batch")) cfg.batch_size = args.overrides.batch_size;
  if (passed("--epochs")) {
    cfg.evaluator_epochs = args.overrides.evaluator_epochs;
    cfg.generator_epochs = args.overrides.evaluator_epochs;
  }
  if (passed("--k")) cfg.eval_k = args.overrides.eval_k;
  if (passed("--heads")) {
    cfg.evaluator.attention_heads = args.overrides.evaluator.attention_heads;
  }
  if (passed("--no-bilstm")) cfg.evaluator.use_bilstm = false;
  if (passed("--no-selfattn")) cfg.evaluator.use_selfattn = false;
  if (passed("--no-evolving")) cfg.generator.use_evolving = false;
  if (passed("--no-activating")) cfg.generator.use_activating = false;
  if (passed("--no-self-reward")) cfg.use_self_reward = false;
  if (passed("--no-diff-reward")) cfg.use_diff_reward = false;
  cfg.seed = static_cast<std::uint64_t>(args.seed);
  return cfg;
}

int cmd_train(const TrainArgs& args) {
  const TrainConfig cfg =
      merge_train_flags(args, load_config(args.config_path).train);
  cfg.validate();
  const std::vector<ListRecord> data = load_records(args.data_path);
  std::vector<ListRecord> val;
  if (!args.val_path.empty()) val = load_records(args.val_path);

  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  const std::string metrics_path =
      (dir / (args.stage + "_metrics.jsonl")).string();
  std::ofstream metrics = open_out(metrics_path);
  const auto log = [&metrics](const json& entry) {
    metrics << entry.dump() << "\n";
    metrics.flush();
  };

  if (args.stage == "evaluator") {
    const EvaluatorModel model =
        args.val_path.empty() ? train_evaluator(data, cfg, log)
                              : train_evaluator(data, val, cfg, log);
    const std::string ckpt = (dir / "evaluator.json").string();
    save_evaluator(ckpt, model);
    std::cerr << "wrote " << ckpt << " and " << metrics_path << "\n";
  } else {
    if (args.evaluator_ckpt.empty()) {
      throw UsageError("train --stage generator requires --evaluator "
                       "CHECKPOINT");
    }
    const EvaluatorModel evaluator = load_evaluator(args.evaluator_ckpt);
    const GeneratorModel model =
        args.val_path.empty()
            ? train_generator(data, evaluator, cfg, log)
            : train_generator(data, val, evaluator, cfg, log);
    const std::string ckpt = (dir / "generator.json").string();
    save_generator(ckpt, model);
    std::cerr << "wrote " << ckpt << " and " << metrics_path << "\n";
  }
  return 0;
}

// ---- rerank ----

struct RerankArgs {
  std::string generator_ckpt;
  std::string data_path;
  std::string out_path;
  std::string mode = "greedy";
  std::int64_t seed = -1;
  std::int64_t length = -1;
  CLI::App* cmd = nullptr;
};

int cmd_rerank(const RerankArgs& args) {
  const GeneratorModel model = load_generator(args.generator_ckpt);
  const std::vector<ListRecord> data = load_records(args.data_path);
  const SelectMode mode =
      args.mode == "sampled" ? SelectMode::sampled : SelectMode::greedy;
  if (mode == SelectMode::sampled && args.cmd->count("--seed") == 0) {
    throw UsageError("rerank --mode sampled requires --seed");
  }
  std::ofstream out = open_out(args.out_path);
  Rng rng(static_cast<std::uint64_t>(args.seed < 0 ? 0 : args.seed));
  bool any_error = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ListRecord& rec = data[i];
    const std::size_t n = args.length > 0
                              ? static_cast<std::size_t>(args.length)
                              : rec.final.size();
    json line;
    line["record"] = i;
    try {
      const GeneratedList gen =
          model.generate(rec.user, input_list(rec), n, mode,
                         mode == SelectMode::sampled ? &rng : nullptr);
      line["order"] = gen.order;
      line["probs"] = gen.chosen_probs;
    } catch (const std::exception& e) {
      line["error"] = e.what();
      any_error = true;
    }
    out << line.dump() << "\n";
  }
  std::cerr << "wrote " << args.out_path << "\n";
  return any_error ? 2 : 0;
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string evaluator_ckpt;
  std::string generator_ckpt;
  std::string data_path;
  std::string sidecar_path;
  std::string out_path;
  std::size_t k = 5;
  CLI::App* cmd = nullptr;
};

struct ListRowMetrics {
  double ndcg = 0.0;
  double lr = 0.0;
  std::optional<double> true_value;
};

ListRowMetrics score_orderings(
    const EvaluatorModel& evaluator, const std::vector<ListRecord>& data,
    const std::vector<std::vector<std::size_t>>& orders,
    const std::vector<TruthRecord>* truths, std::size_t k) {
  ListRowMetrics out;
  double true_sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ListRecord& rec = data[i];
    const std::vector<std::size_t>& order = orders[i];
    const std::size_t kk = std::min(k, order.size());
    std::vector<const ItemProfile*> ordered;
    ordered.reserve(order.size());
    for (std::size_t idx : order) ordered.push_back(&rec.items[idx]);
    out.lr += lr_at_k(evaluator, rec.user, ordered, kk);
    out.ndcg += ndcg_at_k(relevance_gains(rec, order), kk);
    if (truths != nullptr) {
      true_sum += ground_truth_list_value((*truths)[i], order, kk);
    }
  }
  const double count = static_cast<double>(data.size());
  out.ndcg /= count;
  out.lr /= count;
  if (truths != nullptr) out.true_value = true_sum / count;
  return out;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const EvaluatorModel evaluator = load_evaluator(args.evaluator_ckpt);
  std::optional<GeneratorModel> generator;
  if (!args.generator_ckpt.empty()) {
    generator = load_generator(args.generator_ckpt);
  }
  const std::vector<ListRecord> data = load_records(args.data_path);
  if (data.empty()) throw DataError("evaluate: dataset is empty");
  std::vector<TruthRecord> truths;
  const std::vector<TruthRecord>* truth_ptr = nullptr;
  if (!args.sidecar_path.empty()) {
    truths = load_truth(args.sidecar_path);
    if (truths.size() != data.size()) {
      throw DataError("evaluate: sidecar has " +
                      std::to_string(truths.size()) + " records, dataset " +
                      std::to_string(data.size()));
    }
    truth_ptr = &truths;
  }

  const PredictionMetrics pm = evaluate_predictions(evaluator, data);

  std::vector<std::vector<std::size_t>> recorded, greedy, generated;
  for (const ListRecord& rec : data) {
    recorded.push_back(rec.final);
    greedy.push_back(greedy_baseline(evaluator, rec).order);
    if (generator) {
      generated.push_back(generator
                              ->generate(rec.user, input_list(rec),
                                         rec.final.size(), SelectMode::greedy)
                              .order);
    }
  }

  json report;
  report["k"] = args.k;
  report["evaluator"] = {{"loss", pm.loss}, {"auc", pm.auc},
                         {"gauc", pm.gauc}};
  std::printf("model          loss      auc     gauc\n");
  std::printf("evaluator   %7.4f  %7.4f  %7.4f\n\n", pm.loss, pm.auc,
              pm.gauc);

  const bool with_truth = truth_ptr != nullptr;
  std::printf("list         ndcg@%zu     lr@%zu", args.k, args.k);
  if (with_truth) std::printf("   true@%zu", args.k);
  std::printf("\n");
  auto emit_row = [&](const std::string& name,
                      const std::vector<std::vector<std::size_t>>& orders) {
    const ListRowMetrics row =
        score_orderings(evaluator, data, orders, truth_ptr, args.k);
    json entry{{"ndcg_at_k", row.ndcg}, {"lr_at_k", row.lr}};
    std::printf("%-10s  %7.4f  %7.4f", name.c_str(), row.ndcg, row.lr);
    if (row.true_value) {
      entry["true_value_at_k"] = *row.true_value;
      std::printf("  %7.4f", *row.true_value);
    }
    std::printf("\n");
    report["lists"][name] = entry;
  };
  if (generator) emit_row("generator", generated);
  emit_row("greedy", greedy);
  emit_row("recorded", recorded);

  if (!args.out_path.empty()) {
    std::ofstream out = open_out(args.out_path);
    out << report.dump(2) << "\n";
    std::cerr << "wrote " << args.out_path << "\n";
  }
  return 0;
}

// ---- ablate ----

struct AblateArgs {
  std::string data_path;
  std::string test_path;
  std::string sidecar_path;
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = 0;
  TrainConfig overrides;
  CLI::App* cmd = nullptr;
};

int cmd_ablate(const AblateArgs& args) {
  TrainArgs train_like;
  train_like.cmd = args.cmd;
  train_like.seed = args.seed;
  train_like.overrides = args.overrides;
  const TrainConfig base =
      merge_train_flags(train_like, load_config(args.config_path).train);
  base.validate();

  std::vector<ListRecord> train_all = load_records(args.data_path);
  std::vector<ListRecord> test;
  std::vector<TruthRecord> test_truth;
  const std::vector<TruthRecord>* truth_ptr = nullptr;
  if (args.test_path.empty()) {
    auto [fit, held] = split_records(train_all, 0.9, base.seed ^ 0xab1a7eULL);
    train_all = std::move(fit);
    test = std::move(held);
  } else {
    test = load_records(args.test_path);
    if (!args.sidecar_path.empty()) {
      test_truth = load_truth(args.sidecar_path);
      if (test_truth.size() != test.size()) {
        throw DataError("ablate: sidecar does not match the test set");
      }
      truth_ptr = &test_truth;
    }
  }
  if (test.empty()) throw DataError("ablate: empty test set");

  const auto quiet = [](const json&) {};
  json table = json::array();

  std::cerr << "training full evaluator\n";
  const EvaluatorModel full_eval = train_evaluator(train_all, base, quiet);

  const auto eval_row = [&](const std::string& name,
                            const EvaluatorModel& model) {
    const PredictionMetrics pm = evaluate_predictions(model, test);
    table.push_back({{"model", name},
                     {"loss", pm.loss},
                     {"auc", pm.auc},
                     {"gauc", pm.gauc}});
  };
  const auto list_metrics = [&](const std::vector<std::vector<std::size_t>>&
                                    orders) {
    return score_orderings(full_eval, test, orders, truth_ptr, base.eval_k);
  };
  const auto generator_orders = [&](const GeneratorModel& model) {
    std::vector<std::vector<std::size_t>> orders;
    orders.reserve(test.size());
    for (const ListRecord& rec : test) {
      orders.push_back(model
                           .generate(rec.user, input_list(rec),
                                     rec.final.size(), SelectMode::greedy)
                           .order);
    }
    return orders;
  };
  const auto attach_list = [&](json& row,
                               const ListRowMetrics& metrics) {
    row["ndcg_at_k"] = metrics.ndcg;
    row["lr_at_k"] = metrics.lr;
    if (metrics.true_value) row["true_value_at_k"] = *metrics.true_value;
  };

  eval_row("full", full_eval);

  {
    std::cerr << "training evaluator variant -BL\n";
    TrainConfig cfg = base;
    cfg.evaluator.use_bilstm = false;
    eval_row("-BL", train_evaluator(train_all, cfg, quiet));
  }
  {
    std::cerr << "training evaluator variant -SA\n";
    TrainConfig cfg = base;
    cfg.evaluator.use_selfattn = false;
    eval_row("-SA", train_evaluator(train_all, cfg, quiet));
  }

  std::cerr << "training full generator\n";
  const GeneratorModel full_gen =
      train_generator(train_all, full_eval, base, quiet);
  attach_list(table[0], list_metrics(generator_orders(full_gen)));

  const std::vector<std::pair<std::string, TrainConfig>> gen_variants = [&] {
    std::vector<std::pair<std::string, TrainConfig>> v;
    TrainConfig el = base;
    el.generator.use_evolving = false;
    v.emplace_back("-EL", el);
    TrainConfig al = base;
    al.generator.use_activating = false;
    v.emplace_back("-AL", al);
    TrainConfig dr = base;
    dr.use_diff_reward = false;
    v.emplace_back("-DR", dr);
    TrainConfig sr = base;
    sr.use_self_reward = false;
    v.emplace_back("-SR", sr);
    return v;
  }();
  for (const auto& [name, cfg] : gen_variants) {
    std::cerr << "training generator variant " << name << "\n";
    const GeneratorModel model =
        train_generator(train_all, full_eval, cfg, quiet);
    json row{{"model", name}};
    attach_list(row, list_metrics(generator_orders(model)));
    table.push_back(row);
  }

  {
    std::vector<std::vector<std::size_t>> orders;
    orders.reserve(test.size());
    for (const ListRecord& rec : test) {
      orders.push_back(greedy_baseline(full_eval, rec).order);
    }
    json row{{"model", "Greedy"}};
    attach_list(row, list_metrics(orders));
    table.push_back(row);
  }

  std::printf("%-8s %8s %8s %8s %9s %9s\n", "model", "loss", "auc", "gauc",
              "ndcg", "lr");
  for (const json& row : table) {
    auto cell = [&](const char* key) {
      return row.contains(key)
                 ? std::to_string(row.at(key).get<double>()).substr(0, 8)
                 : std::string("-");
    };
    std::printf("%-8s %8s %8s %8s %9s %9s\n",
                row.at("model").get<std::string>().c_str(),
                cell("loss").c_str(), cell("auc").c_str(),
                cell("gauc").c_str(), cell("ndcg_at_k").c_str(),
                cell("lr_at_k").c_str());
  }

  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    const std::string path =
        (fs::path(args.out_dir) / "ablation.json").string();
    std::ofstream out = open_out(path);
    out << table.dump(2) << "\n";
    std::cerr << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"context-wise reranking pipeline"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "generate a synthetic dataset");
  sim_cmd->add_option("--config", sim_args.config_path, "JSON config file");
  sim_cmd->add_option("--out", sim_args.out_dir, "output directory")
      ->required();
  sim_cmd->add_option("--seed", sim_args.seed, "RNG seed")->required();
  sim_cmd->add_option("--users", sim_args.overrides.num_users);
  sim_cmd->add_option("--items", sim_args.overrides.num_items);
  sim_cmd->add_option("--categories", sim_args.overrides.num_categories);
  sim_cmd->add_option("--records-per-user",
                      sim_args.overrides.records_per_user);
  sim_cmd->add_option("--m", sim_args.overrides.input_size);
  sim_cmd->add_option("--n", sim_args.overrides.exhibit_size);
  sim_cmd->add_option("--gamma", sim_args.overrides.position_decay);
  sim_cmd->add_option("--beta", sim_args.overrides.context_strength);
  sim_cmd->add_option("--alpha", sim_args.overrides.price_anchor);
  sim_cmd->add_option("--epsilon", sim_args.overrides.explore_epsilon);
  sim_args.cmd = sim_cmd;

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model stage");
  train_cmd->add_option("--stage", train_args.stage, "evaluator or generator")
      ->required()
      ->check(CLI::IsMember({"evaluator", "generator"}));
  train_cmd->add_option("--data", train_args.data_path, "training records")
      ->required();
  train_cmd->add_option("--val", train_args.val_path, "validation records");
  train_cmd->add_option("--config", train_args.config_path);
  train_cmd->add_option("--out", train_args.out_dir, "output directory")
      ->required();
  train_cmd->add_option("--seed", train_args.seed, "RNG seed")->required();
  train_cmd->add_option("--evaluator", train_args.evaluator_ckpt,
                        "evaluator checkpoint (stage generator)");
  train_cmd->add_option("--lr", train_args.overrides.lr);
  train_cmd->add_option("--batch", train_args.overrides.batch_size);
  train_cmd->add_option("--epochs", train_args.overrides.evaluator_epochs);
  train_cmd->add_option("--k", train_args.overrides.eval_k);
  train_cmd->add_option("--heads",
                        train_args.overrides.evaluator.attention_heads);
  train_cmd->add_flag("--no-bilstm", "disable the sequential encoder");
  train_cmd->add_flag("--no-selfattn", "disable self-attention");
  train_cmd->add_flag("--no-evolving", "disable the evolving layer");
  train_cmd->add_flag("--no-activating", "disable the activating layer");
  train_cmd->add_flag("--no-self-reward", "drop the self reward");
  train_cmd->add_flag("--no-diff-reward", "drop the differential reward");
  train_args.cmd = train_cmd;

  RerankArgs rerank_args;
  CLI::App* rerank_cmd =
      app.add_subcommand("rerank", "generate final lists for a dataset");
  rerank_cmd->add_option("--generator", rerank_args.generator_ckpt)
      ->required();
  rerank_cmd->add_option("--data", rerank_args.data_path)->required();
  rerank_cmd->add_option("--out", rerank_args.out_path)->required();
  rerank_cmd->add_option("--mode", rerank_args.mode)
      ->check(CLI::IsMember({"greedy", "sampled"}));
  rerank_cmd->add_option("--seed", rerank_args.seed);
  rerank_cmd->add_option("--length", rerank_args.length,
                         "override output list length");
  rerank_args.cmd = rerank_cmd;

  EvaluateArgs eval_args;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "metric report for checkpoints");
  eval_cmd->add_option("--evaluator", eval_args.evaluator_ckpt)->required();
  eval_cmd->add_option("--generator", eval_args.generator_ckpt);
  eval_cmd->add_option("--data", eval_args.data_path)->required();
  eval_cmd->add_option("--sidecar", eval_args.sidecar_path,
                       "ground-truth sidecar (adds the true-value column)");
  eval_cmd->add_option("--k", eval_args.k);
  eval_cmd->add_option("--out", eval_args.out_path, "JSON report file");
  eval_args.cmd = eval_cmd;

  AblateArgs ablate_args;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "train and compare ablation variants");
  ablate_cmd->add_option("--data", ablate_args.data_path)->required();
  ablate_cmd->add_option("--test", ablate_args.test_path);
  ablate_cmd->add_option("--sidecar", ablate_args.sidecar_path);
  ablate_cmd->add_option("--config", ablate_args.config_path);
  ablate_cmd->add_option("--out", ablate_args.out_dir);
  ablate_cmd->add_option("--seed", ablate_args.seed, "RNG seed")->required();
  ablate_cmd->add_option("--lr", ablate_args.overrides.lr);
  ablate_cmd->add_option("--batch", ablate_args.overrides.batch_size);
  ablate_cmd->add_option("--epochs", ablate_args.overrides.evaluator_epochs);
  ablate_cmd->add_option("--k", ablate_args.overrides.eval_k);
  ablate_args.cmd = ablate_cmd;

  try {
    app.parse(argc, argv);
    if (sim_cmd->parsed()) return cmd_simulate(sim_args);
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (rerank_cmd->parsed()) return cmd_rerank(rerank_args);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_args);
    return 1;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ShapeError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
