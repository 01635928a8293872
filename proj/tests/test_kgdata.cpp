#include <cmath>
#include <fstream>

#include "doctest.h"
#include "support.hpp"

#include "adamf/errors.hpp"
#include "adamf/io.hpp"
#include "adamf/kgdata.hpp"

using namespace adamf;
using adamf::testing::TempDir;

namespace {

void write(const std::filesystem::path& path, std::string_view text) {
  std::ofstream(path, std::ios::binary) << text;
}

struct Files {
  TempDir dir;
  std::filesystem::path train = dir / "train.tsv";
  std::filesystem::path valid = dir / "valid.tsv";
  std::filesystem::path test = dir / "test.tsv";
};

}  // namespace

TEST_SUITE("load_triples") {
  TEST_CASE("minimal dataset with empty valid and test") {
    Files f;
    write(f.train, "a\tr\tb\n");
    write(f.valid, "");
    write(f.test, "");
    const auto ds = load_triples(f.train, f.valid, f.test);
    CHECK(ds.num_entities() == 2);
    CHECK(ds.num_relations() == 1);
    REQUIRE(ds.train.size() == 1);
    CHECK(ds.train[0] == Triple{0, 0, 1});
    CHECK(ds.valid.empty());
    CHECK(ds.test.empty());
  }

  TEST_CASE("vocabulary follows first appearance across splits") {
    Files f;
    write(f.train, "b\tr1\tc\n");
    write(f.valid, "a\tr2\tb\n");
    write(f.test, "d\tr1\ta\n");
    const auto ds = load_triples(f.train, f.valid, f.test);
    CHECK(ds.vocab.entity_names() == std::vector<std::string>{"b", "c", "a", "d"});
    CHECK(ds.vocab.relation_names() == std::vector<std::string>{"r1", "r2"});
    CHECK(ds.vocab.find_entity("d") == 3u);
    CHECK_FALSE(ds.vocab.find_entity("zz").has_value());
  }

  TEST_CASE("malformed line reports its line number") {
    Files f;
    write(f.train, "a\tr\tb\n\nc\tr\n");
    write(f.valid, "");
    write(f.test, "");
    try {
      load_triples(f.train, f.valid, f.test);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    write(f.train, "a\tr\tb\tx\n");
    CHECK_THROWS_AS(load_triples(f.train, f.valid, f.test), ParseError);
  }

  TEST_CASE("empty train split is invalid") {
    Files f;
    write(f.train, "\n");
    write(f.valid, "a\tr\tb\n");
    write(f.test, "");
    CHECK_THROWS_AS(load_triples(f.train, f.valid, f.test), InvalidInput);
  }

  TEST_CASE("a triple in train and test violates disjointness") {
    Files f;
    write(f.train, "a\tr\tb\n");
    write(f.valid, "");
    write(f.test, "a\tr\tb\n");
    CHECK_THROWS_AS(load_triples(f.train, f.valid, f.test), InvalidInput);
  }

  TEST_CASE("duplicates within a split are dropped with a warning") {
    Files f;
    write(f.train, "a\tr\tb\na\tr\tb\nb\tr\ta\n");
    write(f.valid, "");
    write(f.test, "");
    const auto ds = load_triples(f.train, f.valid, f.test);
    CHECK(ds.train.size() == 2);
    CHECK(ds.warnings.size() == 1);
  }

  TEST_CASE("missing file is an I/O error") {
    Files f;
    write(f.valid, "");
    write(f.test, "");
    CHECK_THROWS_AS(load_triples(f.train, f.valid, f.test), IoError);
  }

  TEST_CASE("CRLF line endings are tolerated") {
    Files f;
    write(f.train, "a\tr\tb\r\nb\tr\tc\r\n");
    write(f.valid, "");
    write(f.test, "");
    const auto ds = load_triples(f.train, f.valid, f.test);
    CHECK(ds.vocab.entity_names() == std::vector<std::string>{"a", "b", "c"});
  }

  TEST_CASE("write and reload reproduces index arrays") {
    SeededRng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      const auto ds = testing::random_dataset(rng, 20, 4, 40, 8, 8);
      Files f;
      write_triples(f.train, ds.train, ds.vocab);
      write_triples(f.valid, ds.valid, ds.vocab);
      write_triples(f.test, ds.test, ds.vocab);
      const auto back = load_triples(f.train, f.valid, f.test);
      // Vocab order may differ (first appearance), so compare by name.
      auto named = [](const TripleDataset& d, const std::vector<Triple>& split) {
        std::vector<std::array<std::string, 3>> out;
        for (const auto& t : split)
          out.push_back({d.vocab.entity_name(t.head), d.vocab.relation_name(t.relation),
                         d.vocab.entity_name(t.tail)});
        return out;
      };
      CHECK(named(back, back.train) == named(ds, ds.train));
      CHECK(named(back, back.valid) == named(ds, ds.valid));
      CHECK(named(back, back.test) == named(ds, ds.test));
      // A second round trip from the reloaded dataset is index-exact.
      Files g;
      write_triples(g.train, back.train, back.vocab);
      write_triples(g.valid, back.valid, back.vocab);
      write_triples(g.test, back.test, back.vocab);
      const auto again = load_triples(g.train, g.valid, g.test);
      CHECK(again.train == back.train);
      CHECK(again.valid == back.valid);
      CHECK(again.test == back.test);
      CHECK(again.vocab.entity_names() == back.vocab.entity_names());
    }
  }
}

TEST_SUITE("filter index") {
  TEST_CASE("contains exactly the completions of the three splits") {
    SeededRng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t ne = 2 + rng.below(10);
      const std::size_t nr = 1 + rng.below(3);
      const auto ds = testing::random_dataset(rng, ne, nr, 1 + rng.below(20), rng.below(6),
                                              rng.below(6));
      std::set<Triple> all;
      for (const auto* split : {&ds.train, &ds.valid, &ds.test}) all.insert(split->begin(), split->end());
      for (EntityId h = 0; h < ne; ++h) {
        for (RelationId r = 0; r < nr; ++r) {
          for (EntityId t = 0; t < ne; ++t) {
            const bool known = all.count({h, r, t}) > 0;
            REQUIRE(ds.filter.contains({h, r, t}) == known);
            const auto tails = ds.filter.tails(h, r);
            const auto heads = ds.filter.heads(r, t);
            REQUIRE(std::binary_search(tails.begin(), tails.end(), t) == known);
            REQUIRE(std::binary_search(heads.begin(), heads.end(), h) == known);
          }
        }
      }
    }
  }
}

TEST_SUITE("load_features") {
  TEST_CASE("partial coverage in vocab order") {
    Files f;
    write(f.train, "x\tr\ty\ny\tr\tz\n");
    write(f.valid, "");
    write(f.test, "");
    const auto ds = load_triples(f.train, f.valid, f.test);
    const auto path = f.dir / "visual.tsv";
    write(path, "y\t5,6,7,8\nx\t1,2,3,4\n");
    const auto table = load_features(path, ds.vocab, Modality::visual, 4);
    CHECK(table.matrix.shape == std::vector<std::size_t>{3, 4});
    CHECK(table.present == std::vector<std::uint8_t>{1, 1, 0});
    CHECK(table.row(0)[0] == 1.0);
    CHECK(table.row(1)[3] == 8.0);
  }

  TEST_CASE("full and empty coverage") {
    Files f;
    write(f.train, "x\tr\ty\n");
    write(f.valid, "");
    write(f.test, "");
    const auto ds = load_triples(f.train, f.valid, f.test);
    const auto path = f.dir / "t.tsv";
    write(path, "x\t1,2\ny\t3,4\n");
    CHECK(load_features(path, ds.vocab, Modality::textual, 2).num_present() == 2);
    write(path, "");
    const auto none = load_features(path, ds.vocab, Modality::textual, 2);
    CHECK(none.num_present() == 0);
    CHECK(none.num_entities() == 2);
  }

  TEST_CASE("wrong width and non-finite values are parse errors") {
    Files f;
    write(f.train, "x\tr\ty\n");
    write(f.valid, "");
    write(f.test, "");
    const auto ds = load_triples(f.train, f.valid, f.test);
    const auto path = f.dir / "v.tsv";
    write(path, "x\t1,2\ny\t1,2,3\n");
    try {
      load_features(path, ds.vocab, Modality::visual, 2);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    write(path, "x\t1,nan\n");
    CHECK_THROWS_AS(load_features(path, ds.vocab, Modality::visual, 2), ParseError);
    write(path, "x\t1,inf\n");
    CHECK_THROWS_AS(load_features(path, ds.vocab, Modality::visual, 2), ParseError);
    write(path, "x\t1,abc\n");
    CHECK_THROWS_AS(load_features(path, ds.vocab, Modality::visual, 2), ParseError);
  }

  TEST_CASE("unknown entities are skipped") {
    Files f;
    write(f.train, "x\tr\ty\n");
    write(f.valid, "");
    write(f.test, "");
    const auto ds = load_triples(f.train, f.valid, f.test);
    const auto path = f.dir / "v.tsv";
    write(path, "ghost\t1,2\ny\t3,4\n");
    const auto table = load_features(path, ds.vocab, Modality::visual, 2);
    CHECK(table.present == std::vector<std::uint8_t>{0, 1});
  }

  TEST_CASE("format and reload round trip") {
    SeededRng rng(4);
    const auto ds = testing::random_dataset(rng, 8, 2, 10, 0, 0);
    auto table = testing::random_features(rng, ds.num_entities(), Modality::visual, 3);
    table.present[2] = 0;
    TempDir dir;
    write_features(dir / "v.tsv", table, ds.vocab);
    const auto back = load_features(dir / "v.tsv", ds.vocab, Modality::visual, 3);
    CHECK(back.present == table.present);
    for (EntityId e = 0; e < ds.num_entities(); ++e) {
      if (!table.present[e]) continue;
      for (std::size_t j = 0; j < 3; ++j) CHECK(back.row(e)[j] == table.row(e)[j]);
    }
  }
}

TEST_SUITE("modality missing") {
  TEST_CASE("ratio 0 is the identity and ratio 1 masks everything") {
    SeededRng rng(1);
    const auto table = testing::random_features(rng, 10, Modality::visual, 2);
    CHECK(apply_modality_missing(table, 0.0, 3).present == table.present);
    CHECK(apply_modality_missing(table, 1.0, 3).num_present() == 0);
  }

  TEST_CASE("exact count and reproducible mask") {
    SeededRng rng(1);
    const auto table = testing::random_features(rng, 10, Modality::textual, 2);
    const auto a = apply_modality_missing(table, 0.3, 7);
    const auto b = apply_modality_missing(table, 0.3, 7);
    CHECK(a.num_present() == 7);
    CHECK(a.present == b.present);
    // The input is left untouched.
    CHECK(table.num_present() == 10);
  }

  TEST_CASE("count is floor(ratio * N) for every seed") {
    for (std::size_t n : {1u, 7u, 10u, 50u, 123u}) {
      for (double ratio : {0.1, 0.25, 0.5, 0.8, 0.99}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
          const auto chosen = choose_missing_entities(n, ratio, seed);
          REQUIRE(chosen.size() == static_cast<std::size_t>(std::floor(ratio * n + 1e-9)));
          REQUIRE(std::is_sorted(chosen.begin(), chosen.end()));
          REQUIRE(std::adjacent_find(chosen.begin(), chosen.end()) == chosen.end());
        }
      }
    }
  }

  TEST_CASE("different seeds give different masks") {
    CHECK(choose_missing_entities(100, 0.5, 1) != choose_missing_entities(100, 0.5, 2));
  }

  TEST_CASE("ratio outside [0, 1] is rejected") {
    SeededRng rng(1);
    const auto table = testing::random_features(rng, 4, Modality::visual, 2);
    CHECK_THROWS_AS(apply_modality_missing(table, 1.5, 0), ContractViolation);
    CHECK_THROWS_AS(apply_modality_missing(table, -0.1, 0), ContractViolation);
  }
}

TEST_SUITE("modality names") {
  TEST_CASE("parse accepts letters and names") {
    CHECK(parse_modality("v") == Modality::visual);
    CHECK(parse_modality("textual") == Modality::textual);
    CHECK(parse_modality("s") == Modality::structural);
    CHECK_THROWS_AS(parse_modality("audio"), ConfigError);
  }
}
