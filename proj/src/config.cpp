#include "adamf/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>

#include "adamf/errors.hpp"
#include "adamf/io.hpp"

namespace adamf {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string key_error(std::string_view key, std::string_view value, std::string_view expected) {
  return "config key '" + std::string(key) + "': '" + std::string(value) + "' is not " +
         std::string(expected);
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key_error(key, v, "a non-negative integer"));
  }
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key_error(key, v, "a finite number"));
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key_error(key, v, "a boolean"));
}

std::string real_text(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

bool on_grid(double v, std::initializer_list<double> grid) {
  return std::any_of(grid.begin(), grid.end(),
                     [&](double g) { return std::abs(v - g) <= 1e-12 * std::abs(g); });
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value,
                                  const std::filesystem::path& base)>;

std::filesystem::path resolve(std::string_view v, const std::filesystem::path& base) {
  if (v.empty()) return {};
  std::filesystem::path p{std::string(v)};
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

const std::vector<std::pair<std::string_view, Setter>>& setters() {
  using P = std::filesystem::path;
  static const std::vector<std::pair<std::string_view, Setter>> table = {
      {"train_path", [](RunConfig& c, auto, auto v, const P& b) { c.train_path = resolve(v, b); }},
      {"valid_path", [](RunConfig& c, auto, auto v, const P& b) { c.valid_path = resolve(v, b); }},
      {"test_path", [](RunConfig& c, auto, auto v, const P& b) { c.test_path = resolve(v, b); }},
      {"visual_path", [](RunConfig& c, auto, auto v, const P& b) { c.visual_path = resolve(v, b); }},
      {"textual_path",
       [](RunConfig& c, auto, auto v, const P& b) { c.textual_path = resolve(v, b); }},
      {"output_dir", [](RunConfig& c, auto, auto v, const P& b) { c.output_dir = resolve(v, b); }},
      {"dim", [](RunConfig& c, auto k, auto v, const P&) { c.model.dim = parse_u64(k, v); }},
      {"visual_dim",
       [](RunConfig& c, auto k, auto v, const P&) { c.model.visual_dim = parse_u64(k, v); }},
      {"textual_dim",
       [](RunConfig& c, auto k, auto v, const P&) { c.model.textual_dim = parse_u64(k, v); }},
      {"noise_dim",
       [](RunConfig& c, auto k, auto v, const P&) { c.model.noise_dim = parse_u64(k, v); }},
      {"generator_hidden",
       [](RunConfig& c, auto k, auto v, const P&) { c.model.generator_hidden = parse_u64(k, v); }},
      {"fusion_mode",
       [](RunConfig& c, auto, auto v, const P&) { c.model.fusion_mode = parse_fusion_mode(v); }},
      {"modalities",
       [](RunConfig& c, auto, auto v, const P&) { c.model.modalities = ModalitySet::parse(v); }},
      {"leaky_slope",
       [](RunConfig& c, auto k, auto v, const P&) { c.model.leaky_slope = parse_real(k, v); }},
      {"gamma", [](RunConfig& c, auto k, auto v, const P&) { c.model.gamma = parse_real(k, v); }},
      {"beta", [](RunConfig& c, auto k, auto v, const P&) { c.model.beta = parse_real(k, v); }},
      {"selfadv_sign",
       [](RunConfig& c, auto, auto v, const P&) { c.model.selfadv_sign = parse_selfadv_sign(v); }},
      {"num_negatives",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.num_negatives = parse_u64(k, v); }},
      {"num_groups",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.num_groups = parse_u64(k, v); }},
      {"adv_lambda",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.adv_lambda = parse_real(k, v); }},
      {"lr_d", [](RunConfig& c, auto k, auto v, const P&) { c.train.lr_d = parse_real(k, v); }},
      {"lr_g", [](RunConfig& c, auto k, auto v, const P&) { c.train.lr_g = parse_real(k, v); }},
      {"adam_beta1",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.adam_beta1 = parse_real(k, v); }},
      {"adam_beta2",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.adam_beta2 = parse_real(k, v); }},
      {"adam_eps",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.adam_eps = parse_real(k, v); }},
      {"batch_size",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.batch_size = parse_u64(k, v); }},
      {"epochs", [](RunConfig& c, auto k, auto v, const P&) { c.train.epochs = parse_u64(k, v); }},
      {"mat_enabled",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.mat_enabled = parse_bool(k, v); }},
      {"adversarial_patterns",
       [](RunConfig& c, auto, auto v, const P&) {
         c.train.adversarial_patterns = PatternSet::parse(v);
       }},
      {"filter_negatives",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.filter_negatives = parse_bool(k, v); }},
      {"seed", [](RunConfig& c, auto k, auto v, const P&) { c.train.seed = parse_u64(k, v); }},
      {"validate_every",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.validate_every = parse_u64(k, v); }},
      {"keep_best",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.keep_best = parse_bool(k, v); }},
      {"eval_threads",
       [](RunConfig& c, auto k, auto v, const P&) { c.train.eval_threads = parse_u64(k, v); }},
      {"modality_missing_ratio",
       [](RunConfig& c, auto k, auto v, const P&) { c.modality_missing_ratio = parse_real(k, v); }},
      {"shared_missing_mask",
       [](RunConfig& c, auto k, auto v, const P&) { c.shared_missing_mask = parse_bool(k, v); }},
      {"tie_break",
       [](RunConfig& c, auto, auto v, const P&) { c.train.tie_break = parse_tie_break(v); }},
  };
  return table;
}

void grid_warnings(const RunConfig& c, std::vector<std::string>& out) {
  auto note = [&](std::string_view key, const std::string& value, std::string_view grid) {
    out.push_back(std::string(key) + " = " + value + " is outside the usual grid " +
                  std::string(grid));
  };
  const auto k = c.train.num_negatives;
  if (k != 32 && k != 64 && k != 128) note("num_negatives", std::to_string(k), "{32, 64, 128}");
  if (!on_grid(c.model.gamma, {1, 2, 4, 8, 12}))
    note("gamma", real_text(c.model.gamma), "{1, 2, 4, 8, 12}");
  if (!on_grid(c.model.beta, {0.5, 1.0, 2.0}))
    note("beta", real_text(c.model.beta), "{0.5, 1.0, 2.0}");
  if (!on_grid(c.train.lr_d, {1e-3, 1e-4, 1e-5}))
    note("lr_d", real_text(c.train.lr_d), "{1e-3, 1e-4, 1e-5}");
  if (!on_grid(c.train.lr_g, {1e-3, 1e-4, 1e-5}))
    note("lr_g", real_text(c.train.lr_g), "{1e-3, 1e-4, 1e-5}");
  if (!on_grid(c.train.adv_lambda, {0.1, 0.01, 0.001}))
    note("adv_lambda", real_text(c.train.adv_lambda), "{0.1, 0.01, 0.001}");
}

}  // namespace

const std::vector<std::string_view>& run_config_keys() {
  static const std::vector<std::string_view> keys = [] {
    std::vector<std::string_view> out;
    for (const auto& [k, _] : setters()) out.push_back(k);
    return out;
  }();
  return keys;
}

void RunConfig::validate(bool require_data) const {
  model.validate();
  train.validate();
  if (require_data) {
    if (train_path.empty()) throw ConfigError("train_path is required");
    if (valid_path.empty()) throw ConfigError("valid_path is required");
    if (test_path.empty()) throw ConfigError("test_path is required");
  }
  if (!(modality_missing_ratio >= 0.0 && modality_missing_ratio <= 1.0)) {
    throw ConfigError("modality_missing_ratio must lie in [0, 1]");
  }
  if (train.mat_enabled && model.modalities.list() == std::vector{Modality::structural}) {
    throw ConfigError("mat_enabled needs the visual or textual modality");
  }
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           std::vector<std::string>* warnings, bool require_data) {
  RunConfig config;
  config.output_dir = resolve(config.output_dir.string(), base_dir);
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto& table = setters();
    auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
    if (it == table.end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                        std::string(key) + "'");
    }
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": key '" + std::string(key) +
                        "' given twice");
    }
    it->second(config, key, value, base_dir);
    if (end == text.size()) break;
  }
  config.validate(require_data);
  if (warnings) grid_warnings(config, *warnings);
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path, bool require_data) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  std::vector<std::string> warnings;
  auto config = parse_run_config(text, path.parent_path(), &warnings, require_data);
  for (const auto& w : warnings) log_warning(w);
  return config;
}

std::string format_run_config(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  const std::map<std::string_view, std::string> values = {
      {"train_path", c.train_path.string()},
      {"valid_path", c.valid_path.string()},
      {"test_path", c.test_path.string()},
      {"visual_path", c.visual_path.string()},
      {"textual_path", c.textual_path.string()},
      {"output_dir", c.output_dir.string()},
      {"dim", std::to_string(m.dim)},
      {"visual_dim", std::to_string(m.visual_dim)},
      {"textual_dim", std::to_string(m.textual_dim)},
      {"noise_dim", std::to_string(m.noise_dim)},
      {"generator_hidden", std::to_string(m.generator_hidden)},
      {"fusion_mode", std::string(to_string(m.fusion_mode))},
      {"modalities", m.modalities.to_string()},
      {"leaky_slope", real_text(m.leaky_slope)},
      {"gamma", real_text(m.gamma)},
      {"beta", real_text(m.beta)},
      {"selfadv_sign", std::string(to_string(m.selfadv_sign))},
      {"num_negatives", std::to_string(t.num_negatives)},
      {"num_groups", std::to_string(t.num_groups)},
      {"adv_lambda", real_text(t.adv_lambda)},
      {"lr_d", real_text(t.lr_d)},
      {"lr_g", real_text(t.lr_g)},
      {"adam_beta1", real_text(t.adam_beta1)},
      {"adam_beta2", real_text(t.adam_beta2)},
      {"adam_eps", real_text(t.adam_eps)},
      {"batch_size", std::to_string(t.batch_size)},
      {"epochs", std::to_string(t.epochs)},
      {"mat_enabled", b(t.mat_enabled)},
      {"adversarial_patterns", t.adversarial_patterns.to_string()},
      {"filter_negatives", b(t.filter_negatives)},
      {"seed", std::to_string(t.seed)},
      {"validate_every", std::to_string(t.validate_every)},
      {"keep_best", b(t.keep_best)},
      {"eval_threads", std::to_string(t.eval_threads)},
      {"modality_missing_ratio", real_text(c.modality_missing_ratio)},
      {"shared_missing_mask", b(c.shared_missing_mask)},
      {"tie_break", std::string(to_string(c.train.tie_break))},
  };
  std::string out = "# resolved configuration\n";
  for (auto key : run_config_keys()) {
    out += std::string(key) + " = " + values.at(key) + "\n";
  }
  return out;
}

void apply_env_overrides(RunConfig& config) {
  if (const char* seed = std::getenv("AMF_SEED"); seed != nullptr && *seed != '\0') {
    config.train.seed = parse_u64("AMF_SEED", seed);
  }
}

}  // namespace adamf
