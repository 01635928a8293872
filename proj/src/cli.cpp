#include "adamf/cli.hpp"

#include <charconv>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "adamf/checkpoint.hpp"
#include "adamf/errors.hpp"
#include "adamf/evaluation.hpp"
#include "adamf/fixtures.hpp"
#include "adamf/io.hpp"
#include "adamf/training.hpp"

namespace adamf {

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
}

RunConfig resolve_config(const std::filesystem::path& path, const CommandOptions& options) {
  RunConfig config = load_run_config(path);
  apply_env_overrides(config);
  if (options.out_dir) config.output_dir = *options.out_dir;
  if (options.deterministic) config.train.eval_threads = 1;
  return config;
}

FeatureTable load_or_empty(const std::filesystem::path& path, const Vocab& vocab, Modality m,
                           std::size_t dim) {
  if (path.empty()) return empty_features(vocab.num_entities(), m, dim);
  return load_features(path, vocab, m, dim);
}

ParameterStore load_trained(const Experiment& exp, const RunConfig& config,
                            const std::filesystem::path& checkpoint) {
  ParameterStore params = exp.model.init_params(config.train.seed);
  load_checkpoint(checkpoint, params);
  return params;
}

const std::vector<Triple>& pick_split(const TripleDataset& ds, const std::string& split) {
  if (split == "test") return ds.test;
  if (split == "valid") return ds.valid;
  if (split == "train") return ds.train;
  throw ConfigError("unknown split '" + split + "' (expected test, valid or train)");
}

}  // namespace

std::pair<std::uint64_t, std::uint64_t> missing_mask_seeds(const RunConfig& config) {
  const SeededRng root(config.train.seed);
  if (config.shared_missing_mask) {
    const auto seed = root.substream("masks").seed();
    return {seed, seed};
  }
  return {root.substream("masks/visual").seed(), root.substream("masks/textual").seed()};
}

Experiment load_experiment(const RunConfig& config) {
  TripleDataset dataset = load_triples(config.train_path, config.valid_path, config.test_path);
  const auto& m = config.model;
  const bool want_v = m.modalities.contains(Modality::visual);
  const bool want_t = m.modalities.contains(Modality::textual);
  FeatureTable visual = want_v ? load_or_empty(config.visual_path, dataset.vocab, Modality::visual,
                                               m.visual_dim)
                               : empty_features(dataset.num_entities(), Modality::visual,
                                                m.visual_dim);
  FeatureTable textual = want_t ? load_or_empty(config.textual_path, dataset.vocab,
                                                Modality::textual, m.textual_dim)
                                : empty_features(dataset.num_entities(), Modality::textual,
                                                 m.textual_dim);
  if (config.modality_missing_ratio > 0.0) {
    const auto [visual_seed, textual_seed] = missing_mask_seeds(config);
    visual = apply_modality_missing(visual, config.modality_missing_ratio, visual_seed);
    textual = apply_modality_missing(textual, config.modality_missing_ratio, textual_seed);
  }
  const auto ne = dataset.num_entities();
  const auto nr = dataset.num_relations();
  Model model(m, ne, nr, std::move(visual), std::move(textual));
  return Experiment{std::move(dataset), std::move(model)};
}

int cmd_train(const std::filesystem::path& config_path, const CommandOptions& options,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = resolve_config(config_path, options);
    const Experiment exp = load_experiment(config);
    const auto& ds = exp.dataset;
    out << "dataset: " << ds.num_entities() << " entities, " << ds.num_relations()
        << " relations, " << ds.train.size() << "/" << ds.valid.size() << "/" << ds.test.size()
        << " train/valid/test\n";

    std::string log_lines;
    TrainResult result = train(exp.model, ds, config.train, [&](const EpochLog& log) {
      const auto line = epoch_log_json(log);
      log_lines += line + "\n";
      if (log.val_mrr) out << line << '\n';
    });
    if (result.selected_epoch) {
      auto selected = result.log.at(*result.selected_epoch - 1);
      auto j = nlohmann::ordered_json::parse(epoch_log_json(selected));
      j["selected"] = true;
      log_lines += j.dump() + "\n";
    }

    std::optional<RankReport> report;
    if (!ds.test.empty()) {
      const Ranker ranker(exp.model, result.params, ds, config.train.tie_break);
      report = evaluate(ranker, ds.test, kDefaultKs, config.train.eval_threads);
    }

    // Everything is computed; only now touch the output directory.
    std::filesystem::create_directories(config.output_dir);
    const auto& dir = config.output_dir;
    write_file_atomic(dir / "config.resolved", format_run_config(config));
    save_checkpoint(result.params, dir / "checkpoint.amf");
    write_file_atomic(dir / "train_log.jsonl", log_lines);
    if (report) {
      write_file_atomic(dir / "report.json", report_json(*report, ds.vocab));
      write_file_atomic(dir / "ranks.tsv", ranks_tsv(*report, ds.vocab));
      out << "test: mrr " << report->overall.mrr << " hit@1 " << report->overall.hits.at(1)
          << " hit@3 " << report->overall.hits.at(3) << " hit@10 " << report->overall.hits.at(10)
          << '\n';
    } else {
      log_warning("test split is empty; no report written");
    }
    out << "wrote " << dir.string() << '\n';
    return kExitOk;
  });
}

int cmd_eval(const std::filesystem::path& checkpoint_path,
             const std::filesystem::path& config_path, const EvalOptions& eval,
             const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = resolve_config(config_path, options);
    const Experiment exp = load_experiment(config);
    const ParameterStore params = load_trained(exp, config, checkpoint_path);
    const auto& split = pick_split(exp.dataset, eval.split);
    const Ranker ranker(exp.model, params, exp.dataset, config.train.tie_break);
    const RankReport report = evaluate(ranker, split, eval.ks, config.train.eval_threads);
    const std::string json = report_json(report, exp.dataset.vocab);
    std::filesystem::create_directories(config.output_dir);
    write_file_atomic(config.output_dir / ("eval_" + eval.split + "_report.json"), json);
    write_file_atomic(config.output_dir / ("eval_" + eval.split + "_ranks.tsv"),
                      ranks_tsv(report, exp.dataset.vocab));
    out << json;
    return kExitOk;
  });
}

int cmd_gradcheck(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    GradcheckSettings settings;
    if (!config_path.empty()) {
      RunConfig config = load_run_config(config_path, /*require_data=*/false);
      apply_env_overrides(config);
      settings.seed = config.train.seed;
      settings.gamma = config.model.gamma;
      settings.beta = config.model.beta;
      settings.adv_lambda = config.train.adv_lambda;
      settings.leaky_slope = config.model.leaky_slope;
      settings.fusion_mode = config.model.fusion_mode;
      settings.selfadv_sign = config.model.selfadv_sign;
      if (!config.train.adversarial_patterns.empty()) {
        settings.adversarial_patterns = config.train.adversarial_patterns;
      }
    } else if (const char* seed = std::getenv("AMF_SEED"); seed != nullptr && *seed != '\0') {
      RunConfig probe;
      probe.train.seed = 0;
      apply_env_overrides(probe);
      settings.seed = probe.train.seed;
    }
    const GradcheckReport report = run_gradcheck_fixture(settings);
    auto line = [&](std::string_view label, const GradCheckResult& r) {
      out << label << ": max relative error " << r.max_relative_error << " over " << r.probes
          << " components (worst " << r.worst_parameter << "[" << r.worst_index << "])\n";
    };
    line("L_kgc (discriminator)", report.kgc);
    line("lambda L_adv (discriminator)", report.adv_discriminator);
    if (report.generator) {
      line("-lambda L_adv (generator)", *report.generator);
    } else {
      out << "-lambda L_adv (generator): skipped, lambda = 0\n";
    }
    if (!report.passed()) {
      const GradCheckResult* worst = &report.kgc;
      if (report.adv_discriminator.max_relative_error > worst->max_relative_error) {
        worst = &report.adv_discriminator;
      }
      if (report.generator && report.generator->max_relative_error > worst->max_relative_error) {
        worst = &*report.generator;
      }
      err << "gradient check failed: " << worst->worst_parameter << "[" << worst->worst_index
          << "] analytic " << worst->analytic << " vs numeric " << worst->numeric << '\n';
      return static_cast<int>(kExitGradcheck);
    }
    out << "gradient check passed (tolerance " << report.tolerance << ")\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_dump_weights(const std::filesystem::path& checkpoint_path,
                     const std::filesystem::path& config_path, const CommandOptions& options,
                     std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = resolve_config(config_path, options);
    if (config.model.fusion_mode != FusionMode::adaptive) {
      throw InvalidInput("dump-weights needs an adaptive-fusion model");
    }
    const Experiment exp = load_experiment(config);
    const ParameterStore params = load_trained(exp, config, checkpoint_path);
    const Ranker ranker(exp.model, params, exp.dataset, config.train.tie_break);
    const std::string csv =
        weight_report_csv(relation_weight_report(ranker, exp.dataset.test), exp.dataset.vocab);
    std::filesystem::create_directories(config.output_dir);
    write_file_atomic(config.output_dir / "weights.csv", csv);
    out << csv;
    return kExitOk;
  });
}

int cmd_mask_modality(const std::filesystem::path& config_path, Modality modality, double ratio,
                      std::optional<std::uint64_t> seed, const std::filesystem::path& output,
                      std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = load_run_config(config_path);
    apply_env_overrides(config);
    if (modality == Modality::structural) {
      throw ConfigError("mask-modality applies to visual or textual features");
    }
    const auto& source = modality == Modality::visual ? config.visual_path : config.textual_path;
    if (source.empty()) {
      throw ConfigError(std::string(to_string(modality)) + "_path is not set in the config");
    }
    const std::size_t dim =
        modality == Modality::visual ? config.model.visual_dim : config.model.textual_dim;
    const TripleDataset ds = load_triples(config.train_path, config.valid_path, config.test_path);
    const FeatureTable table = load_features(source, ds.vocab, modality, dim);
    const auto [visual_seed, textual_seed] = missing_mask_seeds(config);
    const std::uint64_t mask_seed =
        seed.value_or(modality == Modality::visual ? visual_seed : textual_seed);
    const FeatureTable masked = apply_modality_missing(table, ratio, mask_seed);
    write_features(output, masked, ds.vocab);
    out << "masked " << (table.num_present() - masked.num_present()) << " of "
        << table.num_present() << " present entities; " << masked.num_present() << " remain -> "
        << output.string() << '\n';
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive multi-modal fusion with modality adversarial training for KG completion"};
  app.require_subcommand(1);

  CommandOptions options;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_flag("--deterministic", options.deterministic, "Force serial execution");
  };

  std::string config_path;
  std::string checkpoint_path;

  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint, log and report");
  train_cmd->add_option("config", config_path, "Run configuration")->required();
  add_common(train_cmd);

  EvalOptions eval;
  std::string ks_text = "1,3,10";
  auto* eval_cmd = app.add_subcommand("eval", "Filtered link-prediction evaluation of a checkpoint");
  eval_cmd->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required();
  eval_cmd->add_option("config", config_path, "Run configuration")->required();
  eval_cmd->add_option("--ks", ks_text, "Comma-separated Hit@K cutoffs");
  eval_cmd->add_option("--split", eval.split, "Split to rank: test, valid or train");
  add_common(eval_cmd);

  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of all loss gradients");
  grad_cmd->add_option("config", config_path, "Run configuration (optional)");

  auto* dump_cmd = app.add_subcommand("dump-weights", "Per-relation mean modality weights as CSV");
  dump_cmd->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required();
  dump_cmd->add_option("config", config_path, "Run configuration")->required();
  add_common(dump_cmd);

  std::string modality_text = "visual";
  double ratio = 0.0;
  std::optional<std::uint64_t> mask_seed;
  std::string output;
  auto* mask_cmd = app.add_subcommand("mask-modality", "Write a feature file with entities dropped");
  mask_cmd->add_option("config", config_path, "Run configuration")->required();
  mask_cmd->add_option("--modality", modality_text, "visual or textual");
  mask_cmd->add_option("--ratio", ratio, "Fraction of entities to drop")->required();
  mask_cmd->add_option("--seed", mask_seed, "Mask seed (default derived from the config seed)");
  mask_cmd->add_option("--output", output, "Masked feature file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (!out_dir.empty()) options.out_dir = out_dir;

  if (train_cmd->parsed()) return cmd_train(config_path, options, out, err);
  if (eval_cmd->parsed()) {
    eval.ks.clear();
    std::string_view rest = ks_text;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto token = rest.substr(0, comma);
      std::size_t k = 0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), k);
      if (ec != std::errc() || ptr != token.data() + token.size() || k == 0) {
        err << "config error: --ks expects positive integers, got '" << ks_text << "'\n";
        return kExitConfig;
      }
      eval.ks.push_back(k);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    return cmd_eval(checkpoint_path, config_path, eval, options, out, err);
  }
  if (grad_cmd->parsed()) return cmd_gradcheck(config_path, out, err);
  if (dump_cmd->parsed()) return cmd_dump_weights(checkpoint_path, config_path, options, out, err);
  if (mask_cmd->parsed()) {
    return guarded(err, [&] {
      return cmd_mask_modality(config_path, parse_modality(modality_text), ratio, mask_seed,
                               output, out, err);
    });
  }
  return kExitConfig;
}

}  // namespace adamf
