// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

#include "adamf/checkpoint.hpp"
#include "adamf/cli.hpp"
#include "adamf/config.hpp"
#include "adamf/errors.hpp"
#include "adamf/evaluation.hpp"
#include "adamf/fixtures.hpp"
#include "adamf/io.hpp"
#include "adamf/training.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace adamf;
namespace names = adamf::param_names;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// Toy KG written to a temp dir; configs are the toy config plus overrides.
class ToyWorkspace {
 public:
  ToyWorkspace() { write_toy_kg(make_toy_kg(50, 0), dir_.path()); }

  RunConfig config(const std::string& extra_lines) const {
    std::string text;
    std::istringstream in(toy_config_text());
    std::set<std::string> overridden;
    std::istringstream ex(extra_lines);
    for (std::string l; std::getline(ex, l);) overridden.insert(l.substr(0, l.find(" = ")));
    for (std::string l; std::getline(in, l);) {
      if (!overridden.count(l.substr(0, l.find(" = ")))) text += l + "\n";
    }
    return parse_run_config(text + extra_lines, dir_.path());
  }

  const std::filesystem::path& path() const { return dir_.path(); }

 private:
  testing::TempDir dir_;
};

struct RunOutcome {
  TrainResult result;
  RankReport report;
  bool losses_finite = true;
};

RunOutcome run_toy(const RunConfig& config) {
  const Experiment exp = load_experiment(config);
  RunOutcome out{train(exp.model, exp.dataset, config.train), {}, true};
  for (const auto& e : out.result.log) {
    if (!std::isfinite(e.loss_kgc)) out.losses_finite = false;
    if (e.loss_adv && !std::isfinite(*e.loss_adv)) out.losses_finite = false;
  }
  const Ranker ranker(exp.model, out.result.params, exp.dataset, config.train.tie_break);
  out.report = evaluate(ranker, exp.dataset.test);
  return out;
}

struct RandomFixture {
  TripleDataset dataset;
  Model model;
  ParameterStore params;

  RandomFixture(TripleDataset ds, ModelConfig cfg, SeededRng& rng)
      : dataset(std::move(ds)),
        model(cfg, dataset.num_entities(), dataset.num_relations(),
              testing::random_features(rng, dataset.num_entities(), Modality::visual,
                                       cfg.visual_dim),
              testing::random_features(rng, dataset.num_entities(), Modality::textual,
                                       cfg.textual_dim)),
        params(model.init_params(rng.next_u64())) {}
};

bool same_group(const ParameterStore& a, const ParameterStore& b, Group g) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.at(i).group == g && !(a.at(i) == b.at(i))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Outcome gradient_exactness() {
  const auto start = Clock::now();
  const GradcheckReport r = run_gradcheck_fixture(GradcheckSettings{});
  const double elapsed = seconds_since(start);
  const bool has_generator = r.generator.has_value();
  const double gen = has_generator ? r.generator->max_relative_error : INFINITY;
  const bool pass = r.kgc.max_relative_error < 1e-5 && r.adv_discriminator.max_relative_error < 1e-5 &&
                    gen < 1e-5 && elapsed < 60.0;
  return {pass, fmt("kgc %.2e, adv(D) %.2e, adv(G) %.2e, %.2fs", r.kgc.max_relative_error,
                    r.adv_discriminator.max_relative_error, gen, elapsed)};
}

Outcome fusion_invariants() {
  SeededRng rng(2024);
  const auto cfg = testing::small_config(4, 5);
  const std::size_t ne = 12;
  // A third of the entities lack visual or textual features.
  auto visual = testing::random_features(rng, ne, Modality::visual, 5);
  auto textual = testing::random_features(rng, ne, Modality::textual, 5);
  for (std::size_t e = 0; e < ne; e += 3) visual.present[e] = 0;
  for (std::size_t e = 1; e < ne; e += 3) textual.present[e] = 0;
  const Model model(cfg, ne, 2, visual, textual);

  double worst_sum = 0.0;
  bool positive = true;
  for (int trial = 0; trial < 1000; ++trial) {
    auto params = model.init_params(static_cast<std::uint64_t>(trial));
    testing::randomize(params, rng, 1.0 + 4.0 * rng.uniform());
    Tape tape(params);
    const auto e = static_cast<EntityId>(rng.below(ne));
    std::vector<NodeId> in;
    for (auto m : model.fused_modalities()) in.push_back(model.modal_embedding(tape, e, m));
    const auto alpha = tape.value(model.fuse(tape, in).alpha);
    double total = 0.0;
    for (double a : alpha) {
      positive = positive && a > 0.0;
      total += a;
    }
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }

  // All modal embeddings and fusion weights equal: exactly uniform.
  bool uniform = true;
  for (int trial = 0; trial < 20; ++trial) {
    auto params = model.init_params(0);
    std::vector<double> w(2 * cfg.dim), e(2 * cfg.dim);
    for (auto& x : w) x = rng.uniform(-2.0, 2.0);
    for (auto& x : e) x = rng.uniform(-2.0, 2.0);
    for (auto m : model.fused_modalities()) params[names::fusion(m)].value.data = w;
    Tape tape(params);
    const std::vector<NodeId> in = {tape.constant(e), tape.constant(e), tape.constant(e)};
    for (double a : tape.value(model.fuse(tape, in).alpha)) uniform = uniform && a == 1.0 / 3.0;
  }
  return {positive && worst_sum <= 1e-12 && uniform,
          fmt("1000 cases, all positive: %s, max |sum - 1| %.1e, uniform symmetry case: %s",
              positive ? "yes" : "no", worst_sum, uniform ? "exact" : "not exact")};
}

Outcome ranking_oracle() {
  const auto start = Clock::now();
  SeededRng rng(77);
  std::size_t queries = 0, mismatches = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t ne = 2 + rng.below(49);
    const std::size_t nr = 1 + rng.below(5);
    RandomFixture f(testing::random_dataset(rng, ne, nr, 2 * ne, ne / 4, 1 + ne / 4),
                    testing::small_config(2, 3), rng);
    testing::randomize(f.params, rng);
    const auto ties = trial % 2 == 0 ? TieBreak::optimistic : TieBreak::pessimistic;
    const Ranker ranker(f.model, f.params, f.dataset, ties);
    for (const auto& t : f.dataset.test) {
      for (auto side : {QuerySide::head, QuerySide::tail}) {
        ++queries;
        if (ranker.rank(t, side) != testing::oracle_rank(f.model, f.params, f.dataset, t, side, ties))
          ++mismatches;
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {mismatches == 0 && queries > 0 && elapsed < 30.0,
          fmt("200 fixtures, %zu queries, %zu mismatches, %.2fs", queries, mismatches, elapsed)};
}

Outcome metric_formulas() {
  const std::vector<std::size_t> ks = {1, 3, 10};
  double worst = 0.0;
  auto check = [&](const std::vector<RankedTriple>& ranks) {
    const Metrics m = aggregate_metrics(ranks, ks);
    const double n2 = 2.0 * static_cast<double>(ranks.size());
    double mrr = 0.0;
    for (const auto& r : ranks) mrr += 1.0 / r.head_rank + 1.0 / r.tail_rank;
    worst = std::max(worst, std::abs(m.mrr - mrr / n2));
    for (auto k : ks) {
      double hits = 0.0;
      for (const auto& r : ranks) hits += (r.head_rank <= k) + (r.tail_rank <= k);
      worst = std::max(worst, std::abs(m.hits.at(k) - hits / n2));
    }
    return m;
  };
  const Metrics hand = check({{{}, 1, 2}});
  const bool hand_ok = hand.mrr == 0.75 && hand.hits.at(1) == 0.5 && hand.hits.at(3) == 1.0;
  check({{{}, 1, 1}, {{}, 4, 11}, {{}, 2, 3}});
  SeededRng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RankedTriple> ranks(1 + rng.below(50));
    for (auto& r : ranks) {
      r.head_rank = 1 + rng.below(40);
      r.tail_rank = 1 + rng.below(40);
    }
    check(ranks);
  }
  return {hand_ok && worst <= 1e-12,
          fmt("ranks (1,2) -> MRR %.2f; max deviation over 102 lists %.1e", hand.mrr, worst)};
}

Outcome toy_learning(const ToyWorkspace& toy) {
  const auto start = Clock::now();
  const auto run = run_toy(toy.config(""));
  const double elapsed = seconds_since(start);
  double harmonic = 0.0;
  for (int i = 1; i <= 50; ++i) harmonic += 1.0 / i;
  const double mrr = run.report.overall.mrr;
  return {mrr >= 0.45 && elapsed < 300.0,
          fmt("test MRR %.4f (threshold 0.45, random baseline %.4f), %.1fs", mrr, harmonic / 50,
              elapsed)};
}

Outcome mat_under_missing(const ToyWorkspace& toy) {
  double with = 0.0, without = 0.0;
  bool finite = true;
  for (int seed = 0; seed < 5; ++seed) {
    const std::string base = "modality_missing_ratio = 0.8\nseed = " + std::to_string(seed) + "\n";
    const auto on = run_toy(toy.config(base + "mat_enabled = true\n"));
    const auto off = run_toy(toy.config(base + "mat_enabled = false\n"));
    finite = finite && on.losses_finite && off.losses_finite;
    with += on.report.overall.mrr / 5.0;
    without += off.report.overall.mrr / 5.0;
  }
  return {finite && with >= without - 0.02,
          fmt("mean MRR with MAT %.4f, without %.4f, losses finite: %s", with, without,
              finite ? "yes" : "no")};
}

Outcome ablation_rows(const ToyWorkspace& toy) {
  const std::vector<std::pair<std::string, std::string>> rows = {
      {"mean fusion", "fusion_mode = mean\n"},
      {"S+V", "modalities = s,v\n"},
      {"S+T", "modalities = s,t\n"},
      {"V+T", "modalities = v,t\n"},
      {"no hrt*", "adversarial_patterns = h*rt,h*rt*\n"},
      {"no h*rt", "adversarial_patterns = hrt*,h*rt*\n"},
      {"no h*rt*", "adversarial_patterns = hrt*,h*rt\n"},
  };
  std::string detail;
  bool pass = true;
  std::size_t done = 0;
  for (const auto& [name, lines] : rows) {
    try {
      const auto config = toy.config("mat_enabled = true\n" + lines);
      const auto run = run_toy(config);
      const auto& rep = run.report;
      const bool complete = rep.ranks.size() == rep.overall.count && rep.overall.count > 0 &&
                            rep.overall.hits.size() == 3 && !rep.per_relation.empty() &&
                            std::isfinite(rep.overall.mrr) && run.losses_finite;
      pass = pass && complete;
      done += complete;
      detail += fmt("%s%s %.3f", detail.empty() ? "" : ", ", name.c_str(), rep.overall.mrr);
    } catch (const std::exception& e) {
      pass = false;
      detail += fmt("%s%s failed (%s)", detail.empty() ? "" : ", ", name.c_str(), e.what());
    }
  }
  return {pass, fmt("%zu/%zu complete reports: ", done, rows.size()) + detail};
}

Outcome determinism(const ToyWorkspace& toy) {
  const auto conf = toy.path() / "det.conf";
  std::string text = toy_config_text();
  text.replace(text.find("mat_enabled = false"), 19, "mat_enabled = true");
  write_file_atomic(conf, text);
  for (const char* run : {"det_a", "det_b"}) {
    const std::string cmd = std::string("\"") + ADAMF_CLI_PATH + "\" train \"" + conf.string() +
                            "\" --deterministic --out \"" + (toy.path() / run).string() +
                            "\" > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, std::string("run ") + run + " failed"};
  }
  std::string differing;
  for (const char* file : {"checkpoint.amf", "report.json", "ranks.tsv", "train_log.jsonl"}) {
    if (read_file(toy.path() / "det_a" / file) != read_file(toy.path() / "det_b" / file)) {
      differing += std::string(" ") + file;
    }
  }
  return {differing.empty(), differing.empty()
                                 ? "checkpoint, report, ranks and log byte-identical (MAT on)"
                                 : "differ:" + differing};
}

Outcome group_isolation() {
  SeededRng rng(31);
  RandomFixture f(testing::random_dataset(rng, 12, 3, 20, 2, 2), testing::small_config(3, 4), rng);
  TrainConfig cfg;
  cfg.num_negatives = 4;
  cfg.adv_lambda = 0.5;
  cfg.lr_g = 1e-2;
  Trainer trainer(f.model, f.dataset, f.params, cfg);
  std::size_t violations = 0, own_changes = 0;
  for (int step = 0; step < 100; ++step) {
    const auto batch = std::span<const Triple>(f.dataset.train).subspan((step % 4) * 5, 5);
    const auto before = f.params;
    trainer.train_step_discriminator(batch);
    violations += !same_group(before, f.params, Group::generator);
    own_changes += !same_group(before, f.params, Group::discriminator);
    const auto mid = f.params;
    trainer.train_step_generator(batch);
    violations += !same_group(mid, f.params, Group::discriminator);
    own_changes += !same_group(mid, f.params, Group::generator);
  }
  return {violations == 0,
          fmt("100 D + 100 G steps, %zu cross-group writes, %zu/200 steps moved their own group",
              violations, own_changes)};
}

Outcome generator_pressure() {
  SeededRng rng(41);
  RandomFixture f(testing::random_dataset(rng, 10, 2, 12, 2, 2), testing::small_config(3, 4), rng);
  TrainConfig cfg;
  cfg.adv_lambda = 1.0;
  cfg.lr_g = 1e-3;
  Trainer trainer(f.model, f.dataset, f.params, cfg);
  auto mean_synthetic = [&] {
    Tape tape(f.params);
    EntityEmbedder embedder(f.model, tape);
    SeededRng noise(1234);
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& t : f.dataset.train) {
      for (const auto& s : synthetic_triple_set(embedder, t, 4, PatternSet{}, noise)) {
        total += tape.scalar(f.model.score(tape, s.head.joint, s.relation, s.tail.joint));
        ++n;
      }
    }
    return total / static_cast<double>(n);
  };
  const auto frozen = f.params;
  const double initial = mean_synthetic();
  for (int step = 0; step < 50; ++step) trainer.train_step_generator(f.dataset.train);
  const double final_f = mean_synthetic();
  const bool d_frozen = same_group(frozen, f.params, Group::discriminator);
  return {final_f < initial && d_frozen,
          fmt("mean synthetic F %.5f -> %.5f after 50 G steps, discriminator untouched: %s",
              initial, final_f, d_frozen ? "yes" : "no")};
}

}  // namespace

int main() {
  std::unique_ptr<ToyWorkspace> toy;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient exactness", gradient_exactness},
      {"fusion invariants", fusion_invariants},
      {"ranking oracle equivalence", ranking_oracle},
      {"metric formulas", metric_formulas},
      {"toy KG learning", [&] { return toy_learning(*toy); }},
      {"MAT under modality-missing", [&] { return mat_under_missing(*toy); }},
      {"ablation machinery", [&] { return ablation_rows(*toy); }},
      {"determinism", [&] { return determinism(*toy); }},
      {"group isolation", group_isolation},
      {"generator pressure", generator_pressure},
  };
  toy = std::make_unique<ToyWorkspace>();
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
