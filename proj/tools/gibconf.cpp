// Command-line driver. Exit codes: 0 success, 2 contract or usage errors, 3 I/O errors.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gibconf/config.hpp"
#include "gibconf/dataset_io.hpp"
#include "gibconf/experiments.hpp"

namespace fs = std::filesystem;
using namespace gibconf;

namespace {

struct Common {
  std::string config;
  std::string dataset;
  std::string model;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool needs_dataset, bool needs_model) {
  cmd->add_option("--config", c.config, "key=value training configuration");
  auto* d = cmd->add_option("--dataset", c.dataset, "dataset file (JSON Lines)");
  auto* m = cmd->add_option("--model", c.model, "trained GCN checkpoint");
  if (needs_dataset) d->required();
  if (needs_model) m->required();
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "run seed");
}

TrainConfig resolve_config(const Common& c) {
  TrainConfig cfg = c.config.empty() ? TrainConfig{} : load_train_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

std::vector<double> parse_grid(const std::string& s, const std::vector<double>& fallback) {
  if (s.empty()) return fallback;
  std::vector<double> out;
  for (auto field : detail::split_fields(s)) out.push_back(parse_real(detail::trim(field), 1));
  return out;
}

std::vector<std::size_t> eval_ids(const Dataset& d, const std::string& split) {
  if (split == "train") return d.train;
  if (split == "test") return d.test;
  if (split != "all") throw ParameterError("--split must be all, train or test");
  std::vector<std::size_t> ids(d.graphs.size());
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "none") return NoiseKind::None;
  if (s == "feature") return NoiseKind::Feature;
  if (s == "embedding") return NoiseKind::Embedding;
  throw ParameterError("unknown noise kind '" + s + "'");
}

void write(const fs::path& path, const std::string& text, Manifest& m) {
  write_file_atomic(path, text);
  m.outputs.push_back(path.filename().string());
}

void write_run(const fs::path& dir, const RunResult& r, Manifest& m) {
  write(dir / "metrics.csv", metric_csv(std::span(&r.record, 1)), m);
  write(dir / "per_graph.csv", graph_csv(r.graphs), m);
  write(dir / "explanations.csv", dump_csv(r.edges), m);
}

void print_record(const MetricRecord& r) {
  std::printf("%s auroc=%.4f nll=%.4f brier=%.4f ece=%.4f pearson=%.4f mean_confidence=%.4f\n",
              r.run_id.c_str(), r.auroc, r.nll, r.brier, r.ece, r.pearson, r.mean_confidence);
}

void finish(const fs::path& dir, Manifest& m) {
  write_file_atomic(dir / ("manifest-" + m.command + ".json"), m.dump());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence-calibrated GNN explanations on synthetic motif graphs"};
  app.require_subcommand(1);

  Common common;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic motif dataset");
  add_common(gen, common, false, false);
  DatasetConfig dcfg;
  std::string features = "degree";
  gen->add_option("--num-graphs", dcfg.num_graphs)->capture_default_str();
  gen->add_option("--base-nodes", dcfg.base_n)->capture_default_str();
  gen->add_option("--base-m", dcfg.base_m)->capture_default_str();
  gen->add_option("--house-nodes", dcfg.house_nodes)->check(CLI::IsMember({5, 6}))->capture_default_str();
  gen->add_option("--features", features, "degree or constant")
      ->check(CLI::IsMember({"degree", "constant"}))
      ->capture_default_str();

  auto* tgnn = app.add_subcommand("train-gnn", "train the GCN classifier");
  add_common(tgnn, common, true, false);
  GnnTrainConfig gcfg;
  tgnn->add_option("--epochs", gcfg.epochs)->capture_default_str();
  tgnn->add_option("--lr", gcfg.lr)->capture_default_str();

  auto* texp = app.add_subcommand("train-explainer", "train explainer and confidence model");
  add_common(texp, common, true, true);
  std::string mode = "full";
  texp->add_option("--mode", mode, "full, no_conf_loss or no_conf_module")->capture_default_str();

  std::string explainer_path, confidence_path, split = "all", noise_kind = "none", baseline;
  double noise_level = 0.0;
  auto* eval = app.add_subcommand("evaluate", "evaluate explanations against ground truth");
  add_common(eval, common, false, false);
  std::string dump_path;
  eval->add_option("--explainer", explainer_path, "explainer checkpoint");
  eval->add_option("--confidence", confidence_path, "confidence checkpoint");
  eval->add_option("--split", split, "all, train or test")->capture_default_str();
  eval->add_option("--noise-kind", noise_kind, "none, feature or embedding")->capture_default_str();
  eval->add_option("--noise", noise_level, "noise level")->capture_default_str();
  eval->add_option("--baseline", baseline, "evaluate a per-instance baseline instead (gnnexplainer)");
  eval->add_option("--dump", dump_path, "score an existing explanation dump instead");

  std::string grid;
  auto* sweep = app.add_subcommand("noise-sweep", "metrics across noise levels");
  add_common(sweep, common, true, true);
  sweep->add_option("--explainer", explainer_path)->required();
  sweep->add_option("--confidence", confidence_path);
  sweep->add_option("--split", split)->capture_default_str();
  std::string sweep_kind = "feature";
  sweep->add_option("--noise-kind", sweep_kind, "feature or embedding")->capture_default_str();
  sweep->add_option("--grid", grid, "comma-separated ascending noise levels");

  auto* lsweep = app.add_subcommand("lambda-sweep", "train and evaluate across confidence-loss weights");
  add_common(lsweep, common, true, true);
  lsweep->add_option("--grid", grid, "comma-separated lambda values");

  std::string modes = "full,no_conf_loss,no_conf_module";
  auto* abl = app.add_subcommand("ablation", "train and evaluate ablation modes");
  add_common(abl, common, true, true);
  abl->add_option("--modes", modes)->capture_default_str();

  std::string kind = "deep";
  std::size_t k = 5;
  auto* ens = app.add_subcommand("ensemble", "deep or bootstrap ensemble of baseline explainers");
  add_common(ens, common, true, true);
  ens->add_option("--kind", kind, "deep or bootstrap")->capture_default_str();
  ens->add_option("--k", k)->capture_default_str();
  ens->add_option("--split", split)->capture_default_str();

  std::string graph_list = "0", levels;
  auto* cs = app.add_subcommand("case-study", "explanations under embedding noise");
  add_common(cs, common, true, true);
  cs->add_option("--explainer", explainer_path)->required();
  cs->add_option("--confidence", confidence_path)->required();
  cs->add_option("--graphs", graph_list, "comma-separated graph ids")->capture_default_str();
  cs->add_option("--levels", levels, "comma-separated embedding noise levels");

  auto* bench = app.add_subcommand("benchmark", "confidence-scoring time against edge count");
  add_common(bench, common, false, true);
  bench->add_option("--confidence", confidence_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const fs::path out = common.out;
    Manifest m;
    m.command = app.get_subcommands().front()->get_name();
    if (!common.dataset.empty()) m.inputs["dataset"] = common.dataset;
    if (!common.model.empty()) m.inputs["model"] = common.model;

    if (*gen) {
      const std::uint64_t seed = common.seed.value_or(0);
      dcfg.node_features = features == "constant" ? NodeFeatures::Constant : NodeFeatures::DegreeOneHot;
      Dataset d = generate_dataset(dcfg, seed);
      write(out / "dataset.jsonl", serialize_dataset(d), m);
      m.seeds["dataset"] = seed;
      m.config = {{"num_graphs", dcfg.num_graphs}, {"base_nodes", dcfg.base_n}, {"base_m", dcfg.base_m},
                  {"house_nodes", dcfg.house_nodes}, {"features", features},
                  {"feature_dim", dcfg.feature_dim}, {"train_fraction", dcfg.train_fraction}};
      std::printf("wrote %zu graphs (%zu train / %zu test)\n", d.graphs.size(), d.train.size(), d.test.size());
    } else if (*tgnn) {
      const std::uint64_t seed = common.seed.value_or(0);
      Dataset d = load_dataset(common.dataset);
      auto res = train_gnn(d, gcfg, seed);
      write(out / "gcn.json", serialize_gcn(res.params), m);
      std::string curve = "epoch,loss\n";
      for (std::size_t i = 0; i < res.loss_history.size(); ++i)
        curve += std::to_string(i) + "," + format_real(res.loss_history[i]) + "\n";
      write(out / "gnn_loss.csv", curve, m);
      const double train_acc = accuracy(res.params, select(d, d.train));
      const double test_acc = accuracy(res.params, select(d, d.test));
      m.seeds["model"] = seed;
      m.config = {{"epochs", gcfg.epochs}, {"lr", gcfg.lr}, {"hidden", gcfg.hidden}};
      m.extra["train_accuracy"] = train_acc;
      m.extra["test_accuracy"] = test_acc;
      std::printf("train accuracy %.4f, test accuracy %.4f\n", train_acc, test_acc);
    } else if (*texp) {
      TrainConfig cfg = resolve_config(common);
      Dataset d = load_dataset(common.dataset);
      GcnParams f = load_gcn(common.model);
      auto run = run_ablation(parse_ablation_mode(mode), d, f, cfg);
      write(out / "explainer.json", serialize_mlp(run.models.explainer, kExplainerSchema), m);
      if (run.models.confidence)
        write(out / "confidence.json", serialize_mlp(*run.models.confidence, kConfidenceSchema), m);
      write(out / "loss_curve.csv", loss_csv(run.models.losses), m);
      write_run(out, run.result, m);
      m.config = to_json(cfg);
      m.config["mode"] = mode;
      m.seeds["train"] = cfg.seed;
      m.extra["train_seconds"] = run.models.seconds;
      m.extra["skipped_steps"] = run.models.skipped_steps;
      print_record(run.result.record);
    } else if (*eval) {
      RunResult r;
      EvalOptions opt;
      TrainConfig cfg = resolve_config(common);
      opt.seed = cfg.seed;
      opt.bins = cfg.bins;
      if (!dump_path.empty()) {
        opt.run_id = "dump";
        r = evaluate_dump(parse_dump_csv(read_file(dump_path)), opt);
        m.inputs["dump"] = dump_path;
      } else {
        if (common.dataset.empty() || common.model.empty())
          throw ContractError("evaluate needs --dataset and --model (or --dump)");
        Dataset d = load_dataset(common.dataset);
        GcnParams f = load_gcn(common.model);
        const auto ids = eval_ids(d, split);
        const auto graphs = select(d, ids);
        opt.noise = {parse_noise_kind(noise_kind), noise_level, cfg.seed};
        if (baseline == "gnnexplainer") {
          opt.run_id = "gnnexplainer";
          std::vector<EdgeMask> masks;
          for (std::size_t i = 0; i < graphs.size(); ++i)
            masks.push_back(gnnexplainer_baseline(f, graphs[i], {}, Rng(cfg.seed).split(ids[i]).seed()));
          r = evaluate_masks(graphs, masks, opt, ids);
        } else if (!baseline.empty()) {
          throw ParameterError("unknown baseline '" + baseline + "'");
        } else {
          if (explainer_path.empty()) throw ContractError("evaluate needs --explainer");
          ExplainerParams e = load_explainer(explainer_path);
          std::optional<ConfidenceParams> c;
          if (!confidence_path.empty()) c = load_confidence(confidence_path);
          opt.run_id = c ? "confexplainer" : "explainer";
          r = evaluate_explainer(e, c ? &*c : nullptr, f, graphs, opt, ids);
          m.inputs["explainer"] = explainer_path;
          if (c) m.inputs["confidence"] = confidence_path;
        }
        m.config = {{"split", split}, {"noise_kind", noise_kind}, {"noise", noise_level}, {"bins", cfg.bins}};
      }
      write_run(out, r, m);
      m.seeds["eval"] = cfg.seed;
      print_record(r.record);
    } else if (*sweep) {
      TrainConfig cfg = resolve_config(common);
      Dataset d = load_dataset(common.dataset);
      GcnParams f = load_gcn(common.model);
      ExplainerParams e = load_explainer(explainer_path);
      std::optional<ConfidenceParams> c;
      if (!confidence_path.empty()) c = load_confidence(confidence_path);
      const auto ids = eval_ids(d, split);
      const auto levels_grid = parse_grid(grid, default_noise_grid());
      EvalOptions opt{"noise_sweep", cfg.seed, cfg.bins, {NoiseKind::None, 0.0, cfg.seed}};
      auto runs = run_noise_sweep(e, c ? &*c : nullptr, f, select(d, ids), levels_grid,
                                  parse_noise_kind(sweep_kind), opt);
      std::vector<MetricRecord> records;
      for (const auto& r : runs) {
        records.push_back(r.record);
        print_record(r.record);
      }
      write(out / "metrics.csv", metric_csv(records), m);
      m.config = {{"noise_kind", sweep_kind}, {"grid", levels_grid}, {"split", split}};
      m.seeds["eval"] = cfg.seed;
    } else if (*lsweep) {
      TrainConfig cfg = resolve_config(common);
      Dataset d = load_dataset(common.dataset);
      GcnParams f = load_gcn(common.model);
      const auto lambdas = parse_grid(grid, default_lambda_grid());
      auto points = run_lambda_sweep(d, f, cfg, lambdas);
      std::vector<double> aucs;
      std::vector<MetricRecord> records;
      for (const auto& p : points) {
        aucs.push_back(p.result.record.auroc);
        records.push_back(p.result.record);
        print_record(p.result.record);
      }
      write(out / "lambda.csv", lambda_csv(lambdas, aucs), m);
      write(out / "metrics.csv", metric_csv(records), m);
      m.config = to_json(cfg);
      m.config["grid"] = lambdas;
      m.seeds["train"] = cfg.seed;
    } else if (*abl) {
      TrainConfig cfg = resolve_config(common);
      Dataset d = load_dataset(common.dataset);
      GcnParams f = load_gcn(common.model);
      std::vector<MetricRecord> records;
      for (auto field : detail::split_fields(modes)) {
        const std::string name(detail::trim(field));
        auto run = run_ablation(parse_ablation_mode(name), d, f, cfg);
        Manifest sub;
        write_run(out / name, run.result, sub);
        write(out / name / "loss_curve.csv", loss_csv(run.models.losses), sub);
        for (const auto& o : sub.outputs) m.outputs.push_back(name + "/" + o.get<std::string>());
        records.push_back(run.result.record);
        print_record(run.result.record);
      }
      write(out / "metrics.csv", metric_csv(records), m);
      m.config = to_json(cfg);
      m.config["modes"] = modes;
      m.seeds["train"] = cfg.seed;
    } else if (*ens) {
      TrainConfig cfg = resolve_config(common);
      Dataset d = load_dataset(common.dataset);
      GcnParams f = load_gcn(common.model);
      auto res = train_ensemble(parse_ensemble_kind(kind), k, d, f, cfg);
      const auto ids = eval_ids(d, split);
      std::vector<EdgeMask> masks;
      for (auto i : ids) masks.push_back(res.masks[i]);
      EvalOptions opt{kind + "_ensemble", cfg.seed, cfg.bins, {}};
      auto r = evaluate_masks(select(d, ids), masks, opt, ids);
      write_run(out, r, m);
      m.config = to_json(cfg);
      m.config["kind"] = kind;
      m.config["k"] = k;
      m.config["split"] = split;
      m.seeds["train"] = cfg.seed;
      print_record(r.record);
    } else if (*cs) {
      TrainConfig cfg = resolve_config(common);
      Dataset d = load_dataset(common.dataset);
      GcnParams f = load_gcn(common.model);
      ExplainerParams e = load_explainer(explainer_path);
      ConfidenceParams c = load_confidence(confidence_path);
      std::vector<std::size_t> ids;
      for (auto field : detail::split_fields(graph_list)) {
        const auto id = parse_unsigned(detail::trim(field), 1);
        if (id >= d.graphs.size()) throw IndexError("graph id " + std::to_string(id) + " out of range");
        ids.push_back(id);
      }
      const auto lv = parse_grid(levels, default_case_study_levels());
      auto runs = run_case_study(e, c, f, d, ids, lv, cfg.seed);
      std::vector<MetricRecord> records;
      std::vector<EdgeRow> all_edges;
      std::string per_graph = "noise_level," + std::string(kGraphHeader) + "\n";
      for (const auto& r : runs) {
        records.push_back(r.record);
        for (const auto& g : r.graphs)
          per_graph += format_real(r.record.noise_level) + "," + std::to_string(g.graph_id) + "," +
                       format_real(g.auc) + "," + format_real(g.graph_confidence) + "\n";
        write(out / ("explanations_eps" + format_real(r.record.noise_level) + ".csv"), dump_csv(r.edges), m);
        std::printf("eps=%s mean_confidence=%.4f auroc=%.4f\n", format_real(r.record.noise_level).c_str(),
                    r.record.mean_confidence, r.record.auroc);
      }
      write(out / "metrics.csv", metric_csv(records), m);
      write(out / "per_graph.csv", per_graph, m);
      m.config = {{"graphs", ids}, {"levels", lv}};
      m.seeds["noise"] = cfg.seed;
    } else if (*bench) {
      GcnParams f = load_gcn(common.model);
      ConfidenceParams c = load_confidence(confidence_path);
      const std::vector<std::size_t> sizes{100, 200, 400, 800};
      auto rep = confidence_timing(f, c, sizes, common.seed.value_or(0));
      std::string csv = std::string(kTimingHeader) + "\n";
      for (const auto& p : rep.points)
        csv += std::to_string(p.edges) + "," + format_real(p.seconds) + "," + format_real(rep.fit.slope) +
               "," + format_real(rep.fit.intercept) + "," + format_real(rep.fit.r2) + "\n";
      write(out / "timing.csv", csv, m);
      m.inputs["confidence"] = confidence_path;
      std::printf("linear fit r2=%.4f slope=%.3e s/edge\n", rep.fit.r2, rep.fit.slope);
    }
    finish(out, m);
    return 0;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed input: " << e.what() << "\n";
    return 3;
  }
}
