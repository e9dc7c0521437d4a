// Copyright 2026 The Morphocircuit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include "doctest.h"
#include "mc/error.hpp"
#include "mc/harness/pipeline.hpp"
#include "mc/harness/reports.hpp"
#include "mc/harness/table.hpp"
#include "mc/hash.hpp"
#include "support/fixtures.hpp"

using namespace mc;
using namespace mc::harness;
namespace fs = std::filesystem;

namespace {

Manifest small_manifest() {
  Manifest m = Manifest::reference();
  m.train_size = 400;
  m.heldout_size = 120;
  m.model.n_layers = 2;
  m.model.n_heads = 2;
  m.model.d_model = 16;
  m.model.d_ff = 32;
  m.training.mlm_epochs = 1;
  m.training.cls_epochs = 3;
  m.training.cls_learning_rate = 0.03;
  m.attack.test_size = 12;
  m.eap.ig_steps = 2;
  m.circuit_sizes = {5, 10, 15, 20, 25, 30};
  m.diff_size = 8;
  return m;
}

std::map<std::string, std::string> hashes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).string();
    if (rel == "run_log.json") continue;
    out[rel] = sha256_file(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("table CSV and JSON carry the same content") {
  Table t({"name", "n", "score", "note"});
  t.add_row({"a,b \"q\"", 3, 0.1234567891, nullptr});
  t.add_row({"x", -1, -0.0000001, "ok"});
  t.add_row({"y", 0, std::numeric_limits<double>::quiet_NaN(), "nan"});
  CHECK(t.rows()[0][2] == 0.123457);
  CHECK(t.rows()[1][2] == 0.0);
  CHECK_FALSE(std::signbit(t.rows()[1][2].get<double>()));
  CHECK(t.rows()[2][2].is_null());
  const auto csv = t.to_csv();
  CHECK(csv.rfind("name,n,score,note\n", 0) == 0);
  CHECK(csv.find("\"a,b \"\"q\"\"\"") != std::string::npos);
  CHECK(Table::from_csv(csv) == t);
  CHECK(Table::from_json(t.to_json()) == t);
  CHECK(Table::from_csv(csv) == Table::from_json(t.to_json()));
  const auto j = nlohmann::ordered_json::parse(t.to_json());
  CHECK(j["columns"] == nlohmann::json({"name", "n", "score", "note"}));
  CHECK(j["rows"][0].begin().key() == "name");
}

TEST_CASE("table edge cases") {
  Table empty({"a", "b"});
  CHECK(empty.to_csv() == "a,b\n");
  CHECK(Table::from_csv(empty.to_csv()) == empty);
  CHECK(Table::from_json(empty.to_json()) == empty);
  CHECK_THROWS_AS(empty.add_row({1}), InputError);
  CHECK_THROWS_AS(format_from_string("xlsx"), UnknownFormat);
  CHECK(format_from_string("csv") == Format::Csv);
  CHECK_THROWS_AS(Table::from_csv("a,b\n\"x,1\n"), ParseError);
  CHECK_THROWS_AS(Table::from_json("{}"), ParseError);
  const auto dir = testing::scratch_dir("table");
  empty.emit(dir / "t.csv", Format::Csv);
  CHECK(read_file(dir / "t.csv") == "a,b\n");
}

TEST_CASE("manifest JSON round trip and validation") {
  const auto m = small_manifest();
  const auto back = Manifest::from_json(m.to_json(), ".");
  CHECK(back.to_json() == m.to_json());
  auto j = m.to_json();
  j["attack"]["methods"] = {"tf", "nope"};
  CHECK_THROWS_AS(Manifest::from_json(j, "."), InputError);
  j = m.to_json();
  j["attack"]["test_size"] = 1000;
  CHECK_THROWS_AS(Manifest::from_json(j, "."), ParseError);
  j = m.to_json();
  j["train_size"] = "many";
  CHECK_THROWS_AS(Manifest::from_json(j, "."), ParseError);
  const auto dir = testing::scratch_dir("manifest");
  write_file(dir / "m.json", "{ not json");
  CHECK_THROWS_AS(Manifest::load(dir / "m.json"), ParseError);
  CHECK(stage_names().size() == 9);
}

TEST_CASE("pipeline caching, dependency reruns and report shapes") {
  const auto dir = testing::scratch_dir("pipeline");
  PipelineOptions opts;
  opts.out_dir = dir / "out";
  opts.jobs = 4;
  const auto first = run_pipeline(small_manifest(), opts);
  REQUIRE(first.stages.size() == 9);
  for (const auto& s : first.stages) CHECK_FALSE(s.skipped);
  const auto h1 = hashes(opts.out_dir);
  for (const auto& [rel, sha] : first.artifacts) CHECK(h1.at(rel) == sha);

  SUBCASE("rerun skips every stage and leaves bytes unchanged") {
    const auto second = run_pipeline(small_manifest(), opts);
    for (const auto& s : second.stages) CHECK(s.skipped);
    CHECK(hashes(opts.out_dir) == h1);
    CHECK(second.artifacts == first.artifacts);
  }
  SUBCASE("removing an intermediate reruns only its stage") {
    fs::remove(opts.out_dir / "scores/plain.json");
    const auto again = run_pipeline(small_manifest(), opts);
    for (const auto& s : again.stages) CHECK(s.skipped == (s.name != "eap"));
    CHECK(hashes(opts.out_dir) == h1);
  }
  SUBCASE("changed parameters rerun the stage and its dependents") {
    auto m = small_manifest();
    m.diff_size = 12;
    const auto again = run_pipeline(m, opts);
    for (const auto& s : again.stages) CHECK(s.skipped == (s.name != "diff"));
    m.eap.ig_steps = 3;
    const auto third = run_pipeline(m, opts);
    for (const auto& s : third.stages) {
      const bool downstream = s.name == "eap" || s.name == "extract" || s.name == "eval" || s.name == "diff";
      CHECK(s.skipped != downstream);
    }
  }
  SUBCASE("same seed, fresh directory, different jobs: identical artifacts") {
    PipelineOptions other = opts;
    other.out_dir = dir / "again";
    other.jobs = 1;
    run_pipeline(small_manifest(), other);
    CHECK(hashes(other.out_dir) == h1);
  }
  SUBCASE("report shapes") {
    const auto t2 = Table::from_json(read_file(opts.out_dir / "reports/table2_attacks.json"));
    CHECK(t2.rows().size() == 4);
    CHECK(t2.columns().front() == "dataset");
    const auto t3 = Table::from_csv(read_file(opts.out_dir / "reports/table3_similarity.csv"));
    CHECK(t3 == Table::from_json(read_file(opts.out_dir / "reports/table3_similarity.json")));
    const auto t4 = Table::from_csv(read_file(opts.out_dir / "reports/table4_circuits.csv"));
    REQUIRE(t4.rows().size() == 7);
    CHECK(t4.rows()[0][0] == "baseline");
    CHECK(t4.rows()[6][0] == "30");
    CHECK(t4.columns() == std::vector<std::string>{"size", "syncretic", "inflectional", "plain",
                                                   "syncretic_accuracy", "inflectional_accuracy",
                                                   "plain_accuracy"});
    const auto t5 = Table::from_csv(read_file(opts.out_dir / "reports/table5_robustness.csv"));
    CHECK(t5.rows().size() == 28);
    for (std::size_t r = 0; r < t5.rows().size(); ++r) {
      CHECK(t5.rows()[r][1] == (r % 7 == 6 ? std::string("mean") : std::to_string(small_manifest().circuit_sizes[r % 7])));
    }
    const auto diff = nlohmann::json::parse(read_file(opts.out_dir / "reports/fig4_diff.json"));
    CHECK(diff.contains("shared_edges"));
    CHECK(read_file(opts.out_dir / "reports/fig4_diff.dot").rfind("digraph", 0) == 0);
  }
}

TEST_CASE("pins and stage failures") {
  const auto dir = testing::scratch_dir("pins");
  nlohmann::json cfg = corpora::MinilangConfig::defaults();
  write_file(dir / "gen.json", cfg.dump());
  auto m = small_manifest();
  m.base_dir = dir;
  m.generator_config = dir / "gen.json";
  m.pins["gen.json"] = std::string(64, '0');
  PipelineOptions opts;
  opts.out_dir = dir / "out";
  CHECK_THROWS_AS(run_pipeline(m, opts), HashMismatch);
  m.pins["gen.json"] = sha256_file(dir / "gen.json");
  m.pins["missing.json"] = std::string(64, '0');
  CHECK_THROWS_AS(run_pipeline(m, opts), HashMismatch);
  m.pins.erase("missing.json");

  cfg["n_synsets"] = 0;
  write_file(dir / "bad.json", cfg.dump());
  m.pins.clear();
  m.generator_config = dir / "bad.json";
  try {
    run_pipeline(m, opts);
    FAIL("expected StageFailed");
  } catch (const StageFailed& e) {
    CHECK(e.stage() == "generate");
  }
  m.generator_config = dir / "absent.json";
  CHECK_THROWS_AS(run_pipeline(m, opts), StageFailed);
}
