// Copyright 2026 The speechforge Authors
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

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "../support/synthetic.hpp"
#include "doctest.h"
#include "speechforge/dataset/manifest.hpp"
#include "speechforge/dataset/operations.hpp"

using namespace speechforge::dataset;

namespace {

template <typename Fn>
DatasetErrc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const DatasetError& e) {
    return e.code();
  }
  FAIL("expected a DatasetError");
  return DatasetErrc::kIo;
}

ManifestEntry with(double duration, std::string text, std::initializer_list<std::pair<const char*, Record>> extra = {}) {
  ManifestEntry e("a.wav", duration, std::move(text));
  for (const auto& [k, v] : extra) e.set(k, v);
  return e;
}

std::vector<ManifestEntry> random_entries(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> dur(0.3, 25.0), metric(0.0, 0.6);
  std::uniform_int_distribution<int> words(1, 12), book(0, 9);
  std::vector<ManifestEntry> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    const int w = words(rng);
    for (int k = 0; k < w; ++k) text += (k ? " w" : "w") + std::to_string(book(rng));
    ManifestEntry e("clips/" + std::to_string(i) + ".wav", dur(rng), text);
    e.set("cer", metric(rng));
    e.set("book", "b" + std::to_string(book(rng)));
    e.set("custom", Record::array({1, "two", nullptr}));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

TEST_CASE("manifest lines parse") {
  std::istringstream in(R"({"audio_filepath":"a.wav","duration":1.5,"text":"hi"})" "\n");
  const auto entries = read_manifest(in);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].audio_filepath() == "a.wav");
  CHECK(entries[0].duration() == 1.5);
  CHECK(entries[0].text() == "hi");
  CHECK_FALSE(entries[0].pred_text().has_value());
}

TEST_CASE("manifest errors carry line numbers") {
  std::istringstream missing(R"({"audio_filepath":"a.wav","duration":1,"text":"a"})" "\n"
                             R"({"audio_filepath":"b.wav","text":"b"})" "\n");
  try {
    read_manifest(missing);
    FAIL("expected MissingRequiredField");
  } catch (const DatasetError& e) {
    CHECK(e.code() == DatasetErrc::kMissingRequiredField);
    CHECK(e.line() == 2);
  }
  std::istringstream malformed(R"({"audio_filepath":"a.wav","duration":1,"text":"a"})" "\n{nope\n");
  try {
    read_manifest(malformed);
    FAIL("expected MalformedLine");
  } catch (const DatasetError& e) {
    CHECK(e.code() == DatasetErrc::kMalformedLine);
    CHECK(e.line() == 2);
  }
  std::istringstream zero(R"({"audio_filepath":"a.wav","duration":0,"text":"a"})" "\n");
  CHECK(code_of([&] { read_manifest(zero); }) == DatasetErrc::kInvalidField);
  std::istringstream empty_text(R"({"audio_filepath":"a.wav","duration":1,"text":""})" "\n");
  CHECK(code_of([&] { read_manifest(empty_text); }) == DatasetErrc::kInvalidField);
  std::istringstream allowed(R"({"audio_filepath":"a.wav","duration":1,"text":""})" "\n");
  CHECK(read_manifest(allowed, ReadOptions{true}).size() == 1);
}

TEST_CASE("manifest round trip keeps unknown fields and bytes") {
  std::mt19937_64 rng(3);
  const auto entries = random_entries(rng, 100);
  const auto dir = sftest::fresh_dir("manifest");
  write_manifest(dir / "a.jsonl", entries);
  const auto back = read_manifest(dir / "a.jsonl");
  CHECK(back == entries);
  write_manifest(dir / "b.jsonl", back);
  std::ifstream a(dir / "a.jsonl"), b(dir / "b.jsonl");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());

  std::istringstream ordered(R"({"zeta":1,"audio_filepath":"x.wav","text":"t","duration":2.0,"alpha":[1,2]})" "\n");
  const auto e = read_manifest(ordered);
  CHECK(serialize_entry(e[0]) == R"({"zeta":1,"audio_filepath":"x.wav","text":"t","duration":2.0,"alpha":[1,2]})");
}

TEST_CASE("stats examples") {
  const std::vector<ManifestEntry> two{with(1.5, "ab"), with(2.5, "bc")};
  const auto s = compute_stats(two);
  CHECK(s.entry_count == 2);
  CHECK(s.total_hours == doctest::Approx(4.0 / 3600.0));
  CHECK(s.alphabet == U"abc");
  CHECK(s.vocabulary_size == 2);
  CHECK(s.duration_histogram.edges == std::vector<double>{0.0, 1.0, 2.0, 3.0});
  CHECK(s.duration_histogram.counts == std::vector<std::size_t>{0, 1, 1});
  CHECK(code_of([] { compute_stats(std::vector<ManifestEntry>{}); }) == DatasetErrc::kEmptyDataset);
}

TEST_CASE("a 20 s ceiling shows up as the last duration bin") {
  std::vector<ManifestEntry> entries;
  for (int i = 1; i <= 20; ++i) entries.push_back(with(static_cast<double>(i) - 0.5, "x"));
  const auto s = compute_stats(entries);
  CHECK(s.max_duration <= 20.0);
  CHECK(s.duration_histogram.edges.back() == 20.0);
}

TEST_CASE("stats invariants") {
  std::mt19937_64 rng(8);
  const auto entries = random_entries(rng, 300);
  const auto s = compute_stats(entries);
  double seconds = 0.0;
  for (const auto& e : entries) seconds += e.duration();
  CHECK(s.total_hours == doctest::Approx(seconds / 3600.0));
  for (const auto* h : {&s.duration_histogram, &s.char_rate_histogram, &s.word_rate_histogram}) {
    std::size_t total = 0;
    for (auto c : h->counts) total += c;
    CHECK(total == entries.size());
    CHECK(h->edges.size() == h->counts.size() + 1);
  }
  std::set<char32_t> alpha(s.alphabet.begin(), s.alphabet.end());
  for (char c : std::string("w0123456789 ")) CHECK(alpha.count(static_cast<char32_t>(c)) <= 1);

  // recomputing over a filtered partition reproduces the totals
  const auto rules = std::vector<FilterRule>{FilterRule::parse("cer:>:0.3")};
  const auto split = apply_filters(entries, rules);
  auto joined = split.kept;
  joined.insert(joined.end(), split.dropped.begin(), split.dropped.end());
  const auto again = compute_stats(joined);
  CHECK(again.entry_count == s.entry_count);
  CHECK(again.total_hours == doctest::Approx(s.total_hours));
  CHECK(again.alphabet == s.alphabet);
  CHECK(again.vocabulary_size == s.vocabulary_size);
}

TEST_CASE("filter examples") {
  const std::vector<ManifestEntry> entries{with(1.0, "a", {{"cer", 0.05}}), with(2.0, "b", {{"cer", 0.2}})};
  const std::vector<FilterRule> cer{FilterRule::parse("cer:>:0.10")};
  const auto r = apply_filters(entries, cer);
  CHECK(r.kept.size() == 1);
  CHECK(r.dropped.size() == 1);
  CHECK(r.kept[0].number("cer") == 0.05);
  CHECK(r.report.rules[0].fired == 1);
  CHECK(r.report.kept_hours == doctest::Approx(1.0 / 3600.0));

  const std::vector<ManifestEntry> scored{with(1.0, "a", {{"score", -2.5}}), with(1.0, "b", {{"score", -0.5}}),
                                          with(1.0, "c", {{"score", -2.0}})};
  const std::vector<FilterRule> gate{FilterRule::parse("score:<:-2.0")};
  const auto g = apply_filters(scored, gate);
  CHECK(g.kept.size() == 2);
  CHECK(g.dropped.size() == 1);
  CHECK(g.dropped[0].text() == "a");

  const auto none = apply_filters(entries, std::vector<FilterRule>{});
  CHECK(none.kept == entries);
  CHECK(none.dropped.empty());
}

TEST_CASE("filter rule semantics") {
  const std::vector<ManifestEntry> entries{
      with(1.0, "the cat", {{"cer", 0.3}, {"norm_flags", Record::array({"HAD_DIGITS"})}}),
      with(1.0, "a dog", {{"norm_flags", Record::array()}}),
  };
  const std::vector<FilterRule> rules{FilterRule::parse("cer:>=:0.3"), FilterRule::parse("norm_flags:contains:HAD_DIGITS"),
                                      FilterRule::parse("text:matches:^a "), FilterRule::parse("text:=:x", FilterAction::kFlag)};
  const auto r = apply_filters(entries, rules);
  CHECK(r.report.rules[0].fired == 1);
  CHECK(r.report.rules[0].skipped == 1);  // second entry has no cer
  CHECK(r.report.rules[1].fired == 1);
  CHECK(r.report.rules[2].fired == 1);
  CHECK(r.kept.empty());

  const std::vector<FilterRule> flag{FilterRule::parse("text:!=:x", FilterAction::kFlag)};
  const auto f = apply_filters(entries, flag);
  CHECK(f.kept.size() == 2);
  CHECK(f.report.flagged == 2);
  CHECK(f.kept[0].find("filter_flags")->size() == 1);

  CHECK(code_of([] { FilterRule::parse("cer:>:abc"); }) == DatasetErrc::kIncompatibleRule);
  CHECK(code_of([] { FilterRule::parse("text:matches:("); }) == DatasetErrc::kIncompatibleRule);
  CHECK(code_of([] { FilterRule::parse("nonsense"); }) == DatasetErrc::kBadRule);
  CHECK(code_of([] { FilterRule::parse("cer:~~:1"); }) == DatasetErrc::kBadRule);
  const std::vector<FilterRule> mismatch{FilterRule::parse("text:>:1")};
  CHECK(code_of([&] { apply_filters(entries, mismatch); }) == DatasetErrc::kIncompatibleRule);
}

TEST_CASE("rules load from JSON") {
  const auto rules = load_rules(SPEECHFORGE_SOURCE_DIR "/configs/rules_default.json");
  REQUIRE(rules.size() >= 1);
  CHECK(rules[0].field == "cer");
  CHECK(rules[0].op == FilterOp::kGreater);
  CHECK(std::get<double>(rules[0].value) == 0.10);
  for (const auto& r : rules) CHECK(FilterRule::from_json(r.to_json()).describe() == r.describe());
  CHECK(code_of([] { rules_from_json(nlohmann::ordered_json::object()); }) == DatasetErrc::kBadRule);
  CHECK(code_of([] {
          rules_from_json(nlohmann::ordered_json::parse(R"([{"field":"cer","op":">","value":0.1,"action":"explode"}])"));
        }) == DatasetErrc::kBadRule);
}

TEST_CASE("filter partition and monotonicity") {
  std::mt19937_64 rng(19);
  const auto entries = random_entries(rng, 200);
  std::size_t previous = entries.size() + 1;
  for (double threshold = 0.6; threshold >= 0.0; threshold -= 0.05) {
    FilterRule rule;
    rule.field = "cer";
    rule.op = FilterOp::kGreater;
    rule.value = threshold;
    const std::vector<FilterRule> rules{rule};
    const auto r = apply_filters(entries, rules);
    CHECK(r.kept.size() + r.dropped.size() == entries.size());
    std::multiset<std::string> seen;
    for (const auto& e : r.kept) seen.insert(serialize_entry(e));
    for (const auto& e : r.dropped) seen.insert(serialize_entry(e));
    std::multiset<std::string> original;
    for (const auto& e : entries) original.insert(serialize_entry(e));
    CHECK(seen == original);
    CHECK(r.kept.size() <= previous);
    previous = r.kept.size();
  }
}

TEST_CASE("char rate screen") {
  const std::vector<ManifestEntry> entries{with(1.0, std::string(15, 'a')), with(1.0, std::string(31, 'a')),
                                           with(1.0, "")};
  const auto s = char_rate_screen(entries);
  CHECK(s[0].char_rate == 15.0);
  CHECK_FALSE(s[0].flag.has_value());
  CHECK(s[1].flag == CharRateFlag::kSuspectExtraWords);
  CHECK(s[2].char_rate == 0.0);
  CHECK(s[2].flag == CharRateFlag::kSuspectMissingWords);

  auto e = entries[1];
  annotate_char_rate(e, s[1]);
  annotate_char_rate(e, s[1]);
  CHECK(e.number("char_rate") == 31.0);
  CHECK(*e.find("qa_flags") == Record::array({"SUSPECT_EXTRA_WORDS"}));

  const std::vector<ManifestEntry> boundary{with(1.0, std::string(30, 'a')), with(1.0, std::string(5, 'a'))};
  const auto b = char_rate_screen(boundary);
  CHECK(b[0].flag == CharRateFlag::kSuspectExtraWords);
  CHECK(b[1].flag == CharRateFlag::kSuspectMissingWords);
}

TEST_CASE("kfold examples") {
  std::vector<ManifestEntry> entries;
  for (int book = 0; book < 6; ++book) {
    for (int i = 0; i < 3; ++i) entries.push_back(with(1.0 + book, "t", {{"book", "book" + std::to_string(book)}}));
  }
  const auto folds = kfold_split(entries, 3, "book");
  REQUIRE(folds.size() == 3);
  std::map<std::string, std::size_t> owner;
  std::size_t total = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    total += folds[f].size();
    for (const auto& e : folds[f]) {
      const auto book = *e.string_field("book");
      CHECK((owner.count(book) == 0 || owner[book] == f));
      owner[book] = f;
    }
  }
  CHECK(total == entries.size());

  const auto single = kfold_split(entries, 1, "book");
  REQUIRE(single.size() == 1);
  CHECK(single[0] == entries);

  CHECK(code_of([&] { kfold_split(entries, 7, "book"); }) == DatasetErrc::kKExceedsGroups);
  CHECK(code_of([&] { kfold_split(entries, 2, "speaker"); }) == DatasetErrc::kMissingGroupKey);
  CHECK(code_of([&] { kfold_split(entries, 0, "book"); }) == DatasetErrc::kInvalidArgument);
}

TEST_CASE("kfold greedy packing of {5,4,3,2,1} hours") {
  std::vector<ManifestEntry> entries;
  for (int h = 1; h <= 5; ++h) entries.push_back(with(3600.0 * h, "t", {{"book", "g" + std::to_string(h)}}));
  const auto folds = kfold_split(entries, 2, "book");
  std::vector<double> hours;
  std::vector<std::set<double>> members;
  for (const auto& f : folds) {
    double sum = 0.0;
    std::set<double> m;
    for (const auto& e : f) {
      sum += e.duration() / 3600.0;
      m.insert(e.duration() / 3600.0);
    }
    hours.push_back(sum);
    members.push_back(m);
  }
  // longest first into the lightest fold: 5 | 4 | 3 -> fold 1 (4 < 5) | 2 -> fold 0 (5 < 7) | 1 -> fold 0 (7 = 7, lowest index)
  CHECK(members[0] == std::set<double>{5, 2, 1});
  CHECK(members[1] == std::set<double>{4, 3});
  CHECK(hours[0] == 8.0);
  CHECK(hours[1] == 7.0);
}

TEST_CASE("kfold partitions and obeys the greedy bound") {
  std::mt19937_64 rng(23);
  for (int iter = 0; iter < 100; ++iter) {
    std::uniform_int_distribution<int> groups_dist(4, 30), per_group(1, 5), k_dist(2, 4);
    std::uniform_real_distribution<double> dur(1.0, 20.0);
    const int groups = groups_dist(rng);
    std::vector<ManifestEntry> entries;
    for (int g = 0; g < groups; ++g) {
      const int n = per_group(rng);
      for (int i = 0; i < n; ++i) entries.push_back(with(dur(rng), "t", {{"group", g}}));
    }
    const auto k = static_cast<std::size_t>(std::min(k_dist(rng), groups));
    const auto folds = kfold_split(entries, k, "group");
    std::size_t total = 0;
    std::map<std::string, std::size_t> owner;
    std::map<std::string, double> group_seconds;
    std::vector<double> load;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      double sum = 0.0;
      for (const auto& e : folds[f]) {
        const auto key = e.find("group")->dump();
        CHECK((owner.count(key) == 0 || owner[key] == f));
        owner[key] = f;
        group_seconds[key] += e.duration();
        sum += e.duration();
      }
      total += folds[f].size();
      load.push_back(sum);
    }
    CHECK(total == entries.size());
    double all = 0.0, biggest = 0.0;
    for (const auto& [key, s] : group_seconds) {
      all += s;
      biggest = std::max(biggest, s);
    }
    if (biggest <= all / static_cast<double>(k)) {
      CHECK(*std::max_element(load.begin(), load.end()) <= 2.0 * *std::min_element(load.begin(), load.end()) + 1e-9);
    }
  }
}
