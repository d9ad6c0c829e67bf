// Copyright 2026 The PSI Authors.
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

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <string>

#include "psi/dataset_io.hpp"
#include "psi/digest.hpp"
#include "psi/manifest.hpp"

using namespace psi;

namespace {

const std::string kFixtures = PSI_FIXTURES_DIR;

bool throws_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

}  // namespace

TEST_CASE("noinput sentinel normalizes to empty input") {
  Dataset d = parse_instances_file(
      R"({"instruction":"Name the highest peak.","input":"<noinput>","output":"Mount Everest."})",
      DatasetLabel::Seed);
  REQUIRE(d.size() == 1);
  CHECK(d.items[0].input == "");
  CHECK(d.items[0].instruction == "Name the highest peak.");
}

TEST_CASE("missing input key normalizes to empty input") {
  Dataset d = parse_instances_file(
      R"({"instruction":"Say hi.","output":"Hi."})", DatasetLabel::Seed);
  CHECK(d.items[0].input == "");
}

TEST_CASE("empty array is an empty-dataset error") {
  CHECK(throws_kind(ErrorKind::EmptyDataset, [] {
    parse_instances_file("[]", DatasetLabel::Seed);
  }));
  CHECK(throws_kind(ErrorKind::EmptyDataset, [] {
    parse_instances_file("   \n  ", DatasetLabel::Seed);
  }));
}

TEST_CASE("jsonl order is preserved") {
  std::string jsonl =
      R"({"instruction":"One.","input":"","output":"1"})" "\n"
      R"({"instruction":"Two.","input":"","output":"2"})" "\n"
      R"({"instruction":"Three.","input":"","output":"3"})" "\n";
  Dataset d = parse_instances_file(jsonl, DatasetLabel::Seed);
  REQUIRE(d.size() == 3);
  CHECK(d.items[0].instruction == "One.");
  CHECK(d.items[1].instruction == "Two.");
  CHECK(d.items[2].instruction == "Three.");
}

TEST_CASE("json array input also parses") {
  Dataset d = parse_instances_file(
      R"([{"instruction":"A.","input":"x","output":"y"},
          {"instruction":"B.","input":"<noinput>","output":"z"}])",
      DatasetLabel::Seed);
  REQUIRE(d.size() == 2);
  CHECK(d.items[1].input == "");
}

TEST_CASE("malformed json reports the line number") {
  std::string jsonl =
      R"({"instruction":"Ok.","input":"","output":"y"})" "\n"
      "{not json}\n";
  try {
    parse_instances_file(jsonl, DatasetLabel::Seed);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("missing instruction key is a schema error") {
  CHECK(throws_kind(ErrorKind::Schema, [] {
    parse_instances_file(R"({"input":"x","output":"y"})", DatasetLabel::Seed);
  }));
  CHECK(throws_kind(ErrorKind::Schema, [] {
    parse_instances_file(R"({"instruction":"  ","output":"y"})",
                         DatasetLabel::Seed);
  }));
}

TEST_CASE("serialize emits exactly one line per instance, no sentinel") {
  Dataset d = parse_instances_file(
      R"({"instruction":"A.","input":"<noinput>","output":"y"})" "\n"
      R"({"instruction":"B.","input":"ctx","output":"z"})" "\n",
      DatasetLabel::Seed);
  std::string out = serialize_dataset(d);
  CHECK(std::count(out.begin(), out.end(), '\n') == 2);
  CHECK(out.find("<noinput>") == std::string::npos);
  CHECK(out.find("\"input\":\"\"") != std::string::npos);
}

TEST_CASE("parse-serialize round trip is the identity on normalized data") {
  const std::string fixtures[] = {
      read_file(kFixtures + "/seed8.jsonl"),
      R"({"instruction":"Single.","input":"<NoInput>","output":"ok"})",
      R"([{"instruction":"Array style.","input":"in","output":"out"}])",
  };
  for (const auto& fixture : fixtures) {
    Dataset first = parse_instances_file(fixture, DatasetLabel::Seed);
    std::string serialized = serialize_dataset(first);
    Dataset second = parse_instances_file(serialized, DatasetLabel::Seed);
    REQUIRE(second.size() == first.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
      CHECK(second.items[i].instruction == first.items[i].instruction);
      CHECK(second.items[i].input == first.items[i].input);
      CHECK(second.items[i].output == first.items[i].output);
    }
    CHECK(serialize_dataset(second) == serialized);
  }
}

TEST_CASE("input normalization is idempotent") {
  const std::string cases[] = {"<noinput>", "  <noinput> ", "plain text",
                               "mixed <noinput> tail", "", "<NOINPUT>"};
  for (const auto& raw : cases) {
    std::string once = normalize_input(raw);
    CHECK(normalize_input(once) == once);
    CHECK(once.find("<noinput>") == std::string::npos);
  }
}

TEST_CASE("seed dataset label rejects non-seed origins") {
  Dataset d;
  d.label = DatasetLabel::Seed;
  TaskInstance t;
  t.instruction = "x";
  t.origin = Origin::Generated;
  t.source_request_id = "gen-1";
  d.items.push_back(t);
  CHECK(throws_kind(ErrorKind::Schema, [&] { d.validate(); }));
}

TEST_CASE("generated origin requires a source request id") {
  TaskInstance t;
  t.instruction = "x";
  t.origin = Origin::Generated;
  CHECK(throws_kind(ErrorKind::Schema, [&] { t.validate(); }));
  t.source_request_id = "gen-0";
  CHECK_NOTHROW(t.validate());
}

TEST_CASE("manual pool of nine principles loads with N=9") {
  PrinciplePool pool = load_pool(read_file(kFixtures + "/pool_zephyr.json"));
  CHECK(pool.n == 9);
  CHECK(pool.low_level.empty());
  CHECK(pool.clusters.empty());
  CHECK(pool.high_level.size() == 9);
  CHECK(pool.high_level[0].text.rfind("Ensure clear and concise communication",
                                      0) == 0);
}

TEST_CASE("pool save-load round trip") {
  PrinciplePool pool;
  for (int i = 0; i < 4; ++i) {
    LowLevelPrinciple low;
    low.text = "low " + std::to_string(i);
    low.reasoning_excerpt = "because " + std::to_string(i);
    low.subset_index = i / 2;
    low.embedding = {0.5 * i, -1.0, 2.5};
    pool.low_level.push_back(low);
  }
  pool.clusters.push_back({{0, 1}, {0.1, 0.2}});
  pool.clusters.push_back({{2, 3}, {-0.3, 0.4}});
  pool.high_level.push_back({"first guideline", 0});
  pool.high_level.push_back({"second guideline", 1});
  pool.n = 2;

  PrinciplePool loaded = load_pool(save_pool(pool));
  CHECK(loaded.n == pool.n);
  REQUIRE(loaded.low_level.size() == pool.low_level.size());
  CHECK(loaded.low_level[2].embedding == pool.low_level[2].embedding);
  CHECK(loaded.low_level[1].subset_index == 0);
  REQUIRE(loaded.clusters.size() == 2);
  CHECK(loaded.clusters[1].member_indices == pool.clusters[1].member_indices);
  CHECK(loaded.high_level[1].text == "second guideline");
  CHECK(save_pool(loaded) == save_pool(pool));
}

TEST_CASE("pool N mismatch is an integrity error") {
  CHECK(throws_kind(ErrorKind::Integrity, [] {
    load_pool(R"({"high_level": ["a", "b"], "N": 3})");
  }));
}

TEST_CASE("leave-one-out pool drops the principle and re-packs") {
  PrinciplePool pool = load_pool(read_file(kFixtures + "/pool_zephyr.json"));
  PrinciplePool reduced = pool.without_principle(0);
  CHECK(reduced.n == 8);
  CHECK(reduced.high_level[0].text == pool.high_level[1].text);
  CHECK(throws_kind(ErrorKind::Precondition,
                    [&] { (void)pool.without_principle(99); }));
}

TEST_CASE("dataset metadata sidecar restores provenance") {
  Dataset d;
  d.label = DatasetLabel::Final;
  TaskInstance t;
  t.instruction = "Say hi.";
  t.output = "Hi.";
  t.origin = Origin::Generated;
  t.source_request_id = "gen-7";
  d.items.push_back(t);

  Dataset reparsed = parse_instances_file(serialize_dataset(d),
                                          DatasetLabel::Final);
  apply_dataset_metadata(reparsed, serialize_dataset_metadata(d));
  CHECK(reparsed.items[0].origin == Origin::Generated);
  CHECK(reparsed.items[0].source_request_id == "gen-7");
}

TEST_CASE("manifest digests are stable across identical runs") {
  RunManifest a;
  a.rng_seed = 42;
  a.config_hash = sha256_hex("config");
  a.record_stage("initial", sha256_hex("same bytes"));
  RunManifest b;
  b.rng_seed = 42;
  b.config_hash = sha256_hex("config");
  b.record_stage("initial", sha256_hex("same bytes"));
  CHECK(a.stage_outputs == b.stage_outputs);

  RunManifest reparsed = RunManifest::from_json(a.to_json());
  CHECK(reparsed.stage_outputs == a.stage_outputs);
  CHECK(reparsed.rng_seed == a.rng_seed);
  CHECK(reparsed.config_hash == a.config_hash);
}

TEST_CASE("sha256 of known vector") {
  // FIPS 180-2 test vector for "abc".
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
