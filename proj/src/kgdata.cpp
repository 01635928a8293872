#include "adamf/kgdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "adamf/errors.hpp"
#include "adamf/io.hpp"
#include "adamf/rng.hpp"

namespace adamf {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

/// Calls fn(line_number, line) for every non-empty line; strips a trailing CR.
template <typename Fn>
void for_each_line(std::string_view content, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(start, end - start);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) fn(line_no, line);
    start = end + 1;
  }
}

struct RawTriple {
  std::string_view head, relation, tail;
};

std::vector<RawTriple> parse_triples(const std::string& path, std::string_view content) {
  std::vector<RawTriple> out;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(path, line_no,
                       "expected 3 tab-separated fields, found " + std::to_string(fields.size()));
    }
    for (auto f : fields) {
      if (f.empty()) throw ParseError(path, line_no, "empty field");
    }
    out.push_back({fields[0], fields[1], fields[2]});
  });
  return out;
}

}  // namespace

EntityId Vocab::add_entity(std::string_view name) {
  auto [it, inserted] =
      entity_index_.try_emplace(std::string(name), static_cast<EntityId>(entity_names_.size()));
  if (inserted) entity_names_.emplace_back(name);
  return it->second;
}

RelationId Vocab::add_relation(std::string_view name) {
  auto [it, inserted] = relation_index_.try_emplace(
      std::string(name), static_cast<RelationId>(relation_names_.size()));
  if (inserted) relation_names_.emplace_back(name);
  return it->second;
}

std::optional<EntityId> Vocab::find_entity(std::string_view name) const {
  auto it = entity_index_.find(std::string(name));
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> Vocab::find_relation(std::string_view name) const {
  auto it = relation_index_.find(std::string(name));
  if (it == relation_index_.end()) return std::nullopt;
  return it->second;
}

FilterIndex::FilterIndex(std::size_t num_relations,
                         std::span<const std::vector<Triple>* const> splits)
    : num_relations_(num_relations) {
  for (const auto* split : splits) {
    for (const auto& t : *split) {
      tails_[key(t.head, t.relation)].push_back(t.tail);
      heads_[key(t.tail, t.relation)].push_back(t.head);
    }
  }
  for (auto* index : {&tails_, &heads_}) {
    for (auto& [_, v] : *index) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }
}

std::span<const EntityId> FilterIndex::tails(EntityId head, RelationId relation) const {
  auto it = tails_.find(key(head, relation));
  if (it == tails_.end()) return {};
  return it->second;
}

std::span<const EntityId> FilterIndex::heads(RelationId relation, EntityId tail) const {
  auto it = heads_.find(key(tail, relation));
  if (it == heads_.end()) return {};
  return it->second;
}

bool FilterIndex::contains(const Triple& t) const {
  auto tails_of = tails(t.head, t.relation);
  return std::binary_search(tails_of.begin(), tails_of.end(), t.tail);
}

TripleDataset make_dataset(Vocab vocab, std::vector<Triple> train, std::vector<Triple> valid,
                           std::vector<Triple> test) {
  if (train.empty()) throw InvalidInput("invalid dataset: train split is empty");
  const auto ne = vocab.num_entities();
  const auto nr = vocab.num_relations();
  std::set<Triple> seen;
  const std::pair<const char*, const std::vector<Triple>*> splits[] = {
      {"train", &train}, {"valid", &valid}, {"test", &test}};
  for (const auto& [split_name, split] : splits) {
    std::set<Triple> local;
    for (const auto& t : *split) {
      if (t.head >= ne || t.tail >= ne || t.relation >= nr) {
        throw InvalidInput(std::string("invalid dataset: ") + split_name +
                           " triple index out of vocabulary bounds");
      }
      local.insert(t);
    }
    for (const auto& t : local) {
      if (!seen.insert(t).second) {
        throw InvalidInput(std::string("invalid dataset: splits not disjoint, triple (") +
                           vocab.entity_name(t.head) + ", " + vocab.relation_name(t.relation) +
                           ", " + vocab.entity_name(t.tail) + ") repeats in " + split_name);
      }
    }
  }

  TripleDataset ds;
  ds.vocab = std::move(vocab);
  ds.train = std::move(train);
  ds.valid = std::move(valid);
  ds.test = std::move(test);
  const std::vector<Triple>* all[] = {&ds.train, &ds.valid, &ds.test};
  ds.filter = FilterIndex(nr, all);
  return ds;
}

TripleDataset load_triples(const std::filesystem::path& train_path,
                           const std::filesystem::path& valid_path,
                           const std::filesystem::path& test_path) {
  const std::filesystem::path paths[] = {train_path, valid_path, test_path};
  std::string contents[3];
  std::vector<RawTriple> raw[3];
  for (int i = 0; i < 3; ++i) {
    contents[i] = read_file(paths[i]);
    raw[i] = parse_triples(paths[i].string(), contents[i]);
  }

  Vocab vocab;
  std::vector<Triple> splits[3];
  std::vector<std::string> warnings;
  for (int i = 0; i < 3; ++i) {
    std::set<Triple> seen;
    std::size_t duplicates = 0;
    for (const auto& r : raw[i]) {
      Triple t;
      t.head = vocab.add_entity(r.head);
      t.relation = vocab.add_relation(r.relation);
      t.tail = vocab.add_entity(r.tail);
      if (seen.insert(t).second) {
        splits[i].push_back(t);
      } else {
        ++duplicates;
      }
    }
    if (duplicates > 0) {
      warnings.push_back(paths[i].string() + ": dropped " + std::to_string(duplicates) +
                         " duplicate triple(s)");
      log_warning(warnings.back());
    }
  }
  if (splits[0].empty()) {
    throw InvalidInput("invalid dataset: train split " + train_path.string() + " is empty");
  }
  auto ds = make_dataset(std::move(vocab), std::move(splits[0]), std::move(splits[1]),
                         std::move(splits[2]));
  ds.warnings = std::move(warnings);
  return ds;
}

std::string format_triples(std::span<const Triple> triples, const Vocab& vocab) {
  std::string out;
  for (const auto& t : triples) {
    out += vocab.entity_name(t.head);
    out += '\t';
    out += vocab.relation_name(t.relation);
    out += '\t';
    out += vocab.entity_name(t.tail);
    out += '\n';
  }
  return out;
}

void write_triples(const std::filesystem::path& path, std::span<const Triple> triples,
                   const Vocab& vocab) {
  write_file_atomic(path, format_triples(triples, vocab));
}

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::structural: return "structural";
    case Modality::visual: return "visual";
    case Modality::textual: return "textual";
  }
  return "unknown";
}

Modality parse_modality(std::string_view text) {
  if (text == "s" || text == "structural") return Modality::structural;
  if (text == "v" || text == "visual") return Modality::visual;
  if (text == "t" || text == "textual") return Modality::textual;
  throw ConfigError("unknown modality '" + std::string(text) + "'");
}

std::size_t FeatureTable::num_present() const {
  return static_cast<std::size_t>(std::count(present.begin(), present.end(), std::uint8_t{1}));
}

FeatureTable empty_features(std::size_t num_entities, Modality modality, std::size_t dim) {
  FeatureTable table;
  table.modality = modality;
  table.dim = dim;
  table.matrix = Tensor({num_entities, dim});
  table.present.assign(num_entities, 0);
  return table;
}

FeatureTable load_features(const std::filesystem::path& path, const Vocab& vocab,
                           Modality modality, std::size_t dim) {
  if (dim == 0) throw ContractViolation("load_features: dim must be positive");
  const std::string content = read_file(path);
  auto table = empty_features(vocab.num_entities(), modality, dim);
  std::size_t unknown = 0;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(path.string(), line_no, "expected entity<TAB>values");
    }
    const auto entity = vocab.find_entity(line.substr(0, tab));
    auto values = split(line.substr(tab + 1), ',');
    if (values.size() != dim) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(dim) + " components, found " +
                           std::to_string(values.size()));
    }
    std::vector<double> parsed(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      auto field = values[j];
      while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
      while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
      if (!field.empty() && field.front() == '+') field.remove_prefix(1);
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), parsed[j]);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(path.string(), line_no,
                         "component " + std::to_string(j + 1) + " is not a number");
      }
      if (!std::isfinite(parsed[j])) {
        throw ParseError(path.string(), line_no,
                         "component " + std::to_string(j + 1) + " is not finite");
      }
    }
    if (!entity) {
      ++unknown;
      return;
    }
    std::copy(parsed.begin(), parsed.end(), table.matrix.row(*entity).begin());
    table.present[*entity] = 1;
  });
  if (unknown > 0) {
    log_warning(path.string() + ": skipped " + std::to_string(unknown) +
                " line(s) for entities outside the vocabulary");
  }
  return table;
}

std::string format_features(const FeatureTable& table, const Vocab& vocab) {
  std::string out;
  char buf[32];
  for (EntityId e = 0; e < table.num_entities(); ++e) {
    if (!table.present[e]) continue;
    out += vocab.entity_name(e);
    out += '\t';
    auto row = table.row(e);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out += ',';
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, row[j]);
      out.append(buf, ptr);
    }
    out += '\n';
  }
  return out;
}

void write_features(const std::filesystem::path& path, const FeatureTable& table,
                    const Vocab& vocab) {
  write_file_atomic(path, format_features(table, vocab));
}

std::vector<EntityId> choose_missing_entities(std::size_t num_entities, double ratio,
                                              std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw ContractViolation("modality-missing ratio must lie in [0, 1], got " +
                            std::to_string(ratio));
  }
  // The tolerance keeps products such as 0.29 * 100 from flooring one short.
  const auto count = std::min<std::size_t>(
      num_entities,
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(num_entities) + 1e-9)));
  std::vector<EntityId> order(num_entities);
  for (EntityId e = 0; e < num_entities; ++e) order[e] = e;
  SeededRng rng(seed);
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + rng.below(num_entities - i);
    std::swap(order[i], order[j]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  return order;
}

FeatureTable apply_modality_missing(const FeatureTable& table, double ratio, std::uint64_t seed) {
  FeatureTable out = table;
  for (EntityId e : choose_missing_entities(table.num_entities(), ratio, seed)) {
    out.present[e] = 0;
  }
  return out;
}

}  // namespace adamf
