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

#include "speechforge/dataset/operations.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "speechforge/metrics/metrics.hpp"
#include "speechforge/utf8.hpp"

namespace speechforge::dataset {

Histogram make_histogram(std::span<const double> values, double bin_width, std::size_t max_bins) {
  if (!(bin_width > 0.0) || max_bins == 0) {
    throw DatasetError(DatasetErrc::kInvalidArgument, "histogram needs a positive bin width");
  }
  double top = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) top = std::max(top, v);
  }
  auto bins = static_cast<std::size_t>(std::ceil(top / bin_width));
  if (bins == 0) bins = 1;
  if (bins > max_bins) {
    bin_width = std::ceil(top / bin_width / static_cast<double>(max_bins)) * bin_width;
    bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(top / bin_width)));
  }
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i) * bin_width;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    auto idx = v <= 0.0 ? std::size_t{0} : static_cast<std::size_t>(std::floor(v / bin_width));
    h.counts[std::min(idx, bins - 1)] += 1;
  }
  return h;
}

DatasetStats compute_stats(std::span<const ManifestEntry> entries) {
  if (entries.empty()) throw DatasetError(DatasetErrc::kEmptyDataset, "dataset has no entries");
  DatasetStats s;
  s.entry_count = entries.size();
  s.min_duration = entries.front().duration();
  std::set<char32_t> alphabet;
  std::set<std::string> vocab;
  std::vector<double> durations, char_rates, word_rates;
  double total_seconds = 0.0;
  for (const auto& e : entries) {
    const double d = e.duration();
    const std::string text = e.text();
    total_seconds += d;
    s.min_duration = std::min(s.min_duration, d);
    s.max_duration = std::max(s.max_duration, d);
    for (char32_t c : utf8::decode(text)) alphabet.insert(c);
    const auto words = utf8::split_words(text);
    s.word_count += words.size();
    vocab.insert(words.begin(), words.end());
    durations.push_back(d);
    char_rates.push_back(metrics::char_rate(text, d));
    word_rates.push_back(static_cast<double>(words.size()) / d);
  }
  s.total_hours = total_seconds / 3600.0;
  s.alphabet.assign(alphabet.begin(), alphabet.end());
  s.vocabulary_size = vocab.size();
  s.duration_histogram = make_histogram(durations, 1.0);
  s.char_rate_histogram = make_histogram(char_rates, 1.0);
  s.word_rate_histogram = make_histogram(word_rates, 0.25);
  return s;
}

namespace {

nlohmann::ordered_json histogram_json(const Histogram& h) {
  return {{"edges", h.edges}, {"counts", h.counts}};
}

}  // namespace

nlohmann::ordered_json stats_to_json(const DatasetStats& s) {
  nlohmann::ordered_json alphabet = nlohmann::ordered_json::array();
  for (char32_t c : s.alphabet) alphabet.push_back(utf8::encode(c));
  return {
      {"entry_count", s.entry_count},
      {"total_hours", s.total_hours},
      {"min_duration", s.min_duration},
      {"max_duration", s.max_duration},
      {"alphabet", alphabet},
      {"vocabulary_size", s.vocabulary_size},
      {"word_count", s.word_count},
      {"duration_histogram", histogram_json(s.duration_histogram)},
      {"char_rate_histogram", histogram_json(s.char_rate_histogram)},
      {"word_rate_histogram", histogram_json(s.word_rate_histogram)},
  };
}

std::string_view to_string(FilterOp op) {
  switch (op) {
    case FilterOp::kLess: return "<";
    case FilterOp::kLessEqual: return "<=";
    case FilterOp::kGreater: return ">";
    case FilterOp::kGreaterEqual: return ">=";
    case FilterOp::kEqual: return "=";
    case FilterOp::kNotEqual: return "!=";
    case FilterOp::kMatches: return "matches";
    case FilterOp::kContains: return "contains";
  }
  return "?";
}

std::optional<FilterOp> parse_filter_op(std::string_view t) {
  if (t == "<" || t == "lt") return FilterOp::kLess;
  if (t == "<=" || t == "le") return FilterOp::kLessEqual;
  if (t == ">" || t == "gt") return FilterOp::kGreater;
  if (t == ">=" || t == "ge") return FilterOp::kGreaterEqual;
  if (t == "=" || t == "==" || t == "eq") return FilterOp::kEqual;
  if (t == "!=" || t == "ne") return FilterOp::kNotEqual;
  if (t == "~" || t == "matches") return FilterOp::kMatches;
  if (t == "contains") return FilterOp::kContains;
  return std::nullopt;
}

namespace {

bool is_ordering(FilterOp op) {
  return op == FilterOp::kLess || op == FilterOp::kLessEqual || op == FilterOp::kGreater ||
         op == FilterOp::kGreaterEqual;
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

std::string format_value(const std::variant<double, std::string>& v) {
  if (const auto* d = std::get_if<double>(&v)) return nlohmann::json(*d).dump();
  return std::get<std::string>(v);
}

}  // namespace

FilterRule FilterRule::parse(std::string_view rule_text, FilterAction action) {
  const auto a = rule_text.find(':');
  const auto b = a == std::string_view::npos ? a : rule_text.find(':', a + 1);
  if (b == std::string_view::npos) {
    throw DatasetError(DatasetErrc::kBadRule, "filter must look like field:op:value, got '" + std::string(rule_text) + "'");
  }
  FilterRule rule;
  rule.field = std::string(rule_text.substr(0, a));
  const auto op = parse_filter_op(rule_text.substr(a + 1, b - a - 1));
  if (rule.field.empty() || !op) {
    throw DatasetError(DatasetErrc::kBadRule, "bad filter '" + std::string(rule_text) + "'");
  }
  rule.op = *op;
  const auto value = rule_text.substr(b + 1);
  const auto number = parse_number(value);
  if (number && *op != FilterOp::kMatches && *op != FilterOp::kContains) {
    rule.value = *number;
  } else {
    rule.value = std::string(value);
  }
  rule.action = action;
  rule.validate();
  return rule;
}

FilterRule FilterRule::from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_object() || !doc.contains("field") || !doc.contains("op") || !doc.contains("value")) {
    throw DatasetError(DatasetErrc::kBadRule, "rule needs field, op and value");
  }
  if (!doc["field"].is_string() || !doc["op"].is_string()) {
    throw DatasetError(DatasetErrc::kBadRule, "rule field and op must be strings");
  }
  FilterRule rule;
  rule.field = doc["field"].get<std::string>();
  const auto op = parse_filter_op(doc["op"].get<std::string>());
  if (!op || rule.field.empty()) throw DatasetError(DatasetErrc::kBadRule, "bad rule " + doc.dump());
  rule.op = *op;
  const auto& value = doc["value"];
  if (value.is_number() && !value.is_boolean()) {
    rule.value = value.get<double>();
  } else if (value.is_string()) {
    rule.value = value.get<std::string>();
  } else {
    throw DatasetError(DatasetErrc::kBadRule, "rule value must be a number or string: " + doc.dump());
  }
  if (doc.contains("action")) {
    const auto& act = doc["action"];
    if (act == "drop") {
      rule.action = FilterAction::kDrop;
    } else if (act == "flag") {
      rule.action = FilterAction::kFlag;
    } else {
      throw DatasetError(DatasetErrc::kBadRule, "rule action must be drop or flag: " + doc.dump());
    }
  }
  rule.validate();
  return rule;
}

nlohmann::ordered_json FilterRule::to_json() const {
  nlohmann::ordered_json doc;
  doc["field"] = field;
  doc["op"] = std::string(to_string(op));
  if (const auto* d = std::get_if<double>(&value)) {
    doc["value"] = *d;
  } else {
    doc["value"] = std::get<std::string>(value);
  }
  doc["action"] = action == FilterAction::kDrop ? "drop" : "flag";
  return doc;
}

std::string FilterRule::describe() const {
  return field + " " + std::string(to_string(op)) + " " + format_value(value);
}

void FilterRule::validate() const {
  const bool numeric = std::holds_alternative<double>(value);
  if (is_ordering(op) && !numeric) {
    throw DatasetError(DatasetErrc::kIncompatibleRule, "ordering comparison needs a numeric value: " + describe());
  }
  if ((op == FilterOp::kMatches || op == FilterOp::kContains) && numeric) {
    throw DatasetError(DatasetErrc::kIncompatibleRule, "text operator needs a string value: " + describe());
  }
  if (op == FilterOp::kMatches && !regex_) {
    try {
      regex_ = std::make_shared<const std::regex>(std::get<std::string>(value), std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw DatasetError(DatasetErrc::kIncompatibleRule, "bad regular expression in " + describe() + ": " + e.what());
    }
  }
}

std::optional<bool> FilterRule::evaluate(const Record& record) const {
  const auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  const Record& v = *it;
  const auto incompatible = [&]() {
    return DatasetError(DatasetErrc::kIncompatibleRule,
                        "field '" + field + "' has type " + v.type_name() + ", incompatible with " + describe());
  };
  const bool v_number = v.is_number() && !v.is_boolean();

  if (is_ordering(op)) {
    if (!v_number) throw incompatible();
    const double x = v.get<double>();
    const double y = std::get<double>(value);
    switch (op) {
      case FilterOp::kLess: return x < y;
      case FilterOp::kLessEqual: return x <= y;
      case FilterOp::kGreater: return x > y;
      default: return x >= y;
    }
  }
  if (op == FilterOp::kEqual || op == FilterOp::kNotEqual) {
    bool equal = false;
    if (const auto* d = std::get_if<double>(&value)) {
      if (!v_number) throw incompatible();
      equal = v.get<double>() == *d;
    } else {
      if (!v.is_string()) throw incompatible();
      equal = v.get_ref<const std::string&>() == std::get<std::string>(value);
    }
    return op == FilterOp::kEqual ? equal : !equal;
  }
  const auto& needle = std::get<std::string>(value);
  if (op == FilterOp::kMatches) {
    if (!v.is_string()) throw incompatible();
    validate();
    return std::regex_search(v.get_ref<const std::string&>(), *regex_);
  }
  // contains
  if (v.is_string()) return v.get_ref<const std::string&>().find(needle) != std::string::npos;
  if (v.is_array()) {
    return std::any_of(v.begin(), v.end(), [&](const Record& x) { return x.is_string() && x == needle; });
  }
  throw incompatible();
}

std::vector<FilterRule> rules_from_json(const nlohmann::ordered_json& doc) {
  if (!doc.is_array()) throw DatasetError(DatasetErrc::kBadRule, "rules document must be a JSON array");
  std::vector<FilterRule> rules;
  for (const auto& r : doc) rules.push_back(FilterRule::from_json(r));
  return rules;
}

std::vector<FilterRule> load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError(DatasetErrc::kIo, "cannot open rules file " + path.string());
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(DatasetErrc::kBadRule, "rules file " + path.string() + ": " + e.what());
  }
  return rules_from_json(doc);
}

nlohmann::ordered_json report_to_json(const FilterReport& report) {
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  for (const auto& r : report.rules) {
    rules.push_back({{"rule", r.rule}, {"fired", r.fired}, {"skipped", r.skipped}});
  }
  return {
      {"kept", report.kept},
      {"dropped", report.dropped},
      {"flagged", report.flagged},
      {"kept_hours", report.kept_hours},
      {"dropped_hours", report.dropped_hours},
      {"rules", rules},
  };
}

FilterResult apply_filters(std::span<const ManifestEntry> entries, std::span<const FilterRule> rules) {
  for (const auto& r : rules) r.validate();
  FilterResult result;
  result.report.rules.resize(rules.size());
  for (std::size_t i = 0; i < rules.size(); ++i) {
    result.report.rules[i].rule = (rules[i].action == FilterAction::kFlag ? "flag " : "drop ") + rules[i].describe();
  }
  for (std::size_t n = 0; n < entries.size(); ++n) {
    ManifestEntry entry = entries[n];
    bool drop = false;
    std::vector<std::string> flags;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      std::optional<bool> fired;
      try {
        fired = rules[i].evaluate(entry.record());
      } catch (const DatasetError& e) {
        throw DatasetError(e.code(), std::string(e.what()) + " (entry " + std::to_string(n + 1) + ")", n + 1);
      }
      if (!fired) {
        result.report.rules[i].skipped += 1;
        continue;
      }
      if (!*fired) continue;
      result.report.rules[i].fired += 1;
      if (rules[i].action == FilterAction::kDrop) {
        drop = true;
      } else {
        flags.push_back(rules[i].describe());
      }
    }
    if (!flags.empty()) {
      Record existing = entry.has("filter_flags") ? *entry.find("filter_flags") : Record::array();
      if (!existing.is_array()) existing = Record::array();
      for (auto& f : flags) existing.push_back(std::move(f));
      entry.set("filter_flags", std::move(existing));
      result.report.flagged += 1;
    }
    const double hours = entry.duration() / 3600.0;
    if (drop) {
      result.report.dropped += 1;
      result.report.dropped_hours += hours;
      result.dropped.push_back(std::move(entry));
    } else {
      result.report.kept += 1;
      result.report.kept_hours += hours;
      result.kept.push_back(std::move(entry));
    }
  }
  return result;
}

std::string_view to_string(CharRateFlag flag) {
  return flag == CharRateFlag::kSuspectExtraWords ? "SUSPECT_EXTRA_WORDS" : "SUSPECT_MISSING_WORDS";
}

std::vector<CharRateAnnotation> char_rate_screen(std::span<const ManifestEntry> entries, const CharRateBounds& bounds) {
  if (!(bounds.low < bounds.high)) {
    throw DatasetError(DatasetErrc::kInvalidArgument, "char-rate low bound must be below the high bound");
  }
  std::vector<CharRateAnnotation> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    CharRateAnnotation a;
    a.char_rate = metrics::char_rate(e.text(), e.duration());
    if (a.char_rate >= bounds.high) {
      a.flag = CharRateFlag::kSuspectExtraWords;
    } else if (a.char_rate <= bounds.low) {
      a.flag = CharRateFlag::kSuspectMissingWords;
    }
    out.push_back(a);
  }
  return out;
}

void annotate_char_rate(ManifestEntry& entry, const CharRateAnnotation& annotation) {
  entry.set("char_rate", annotation.char_rate);
  if (!annotation.flag) return;
  Record flags = entry.has("qa_flags") ? *entry.find("qa_flags") : Record::array();
  if (!flags.is_array()) flags = Record::array();
  const std::string name(to_string(*annotation.flag));
  if (std::find(flags.begin(), flags.end(), name) == flags.end()) flags.push_back(name);
  entry.set("qa_flags", std::move(flags));
}

std::vector<std::vector<ManifestEntry>> kfold_split(std::span<const ManifestEntry> entries, std::size_t k,
                                                    std::string_view group_field) {
  if (k == 0) throw DatasetError(DatasetErrc::kInvalidArgument, "k must be at least 1");
  struct Group {
    std::string key;
    double seconds = 0.0;
    std::vector<std::size_t> members;
  };
  std::map<std::string, Group> groups;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Record* v = entries[i].find(group_field);
    if (v == nullptr || v->is_null()) {
      throw DatasetError(DatasetErrc::kMissingGroupKey,
                         "entry " + std::to_string(i + 1) + " has no '" + std::string(group_field) + "'", i + 1);
    }
    std::string key = v->is_string() ? v->get<std::string>() : v->dump();
    auto& g = groups[key];
    g.key = key;
    g.seconds += entries[i].duration();
    g.members.push_back(i);
  }
  if (k > groups.size()) {
    throw DatasetError(DatasetErrc::kKExceedsGroups,
                       "k=" + std::to_string(k) + " exceeds the " + std::to_string(groups.size()) + " groups");
  }
  std::vector<const Group*> order;
  for (const auto& [key, g] : groups) order.push_back(&g);
  std::stable_sort(order.begin(), order.end(), [](const Group* a, const Group* b) { return a->seconds > b->seconds; });

  std::vector<double> load(k, 0.0);
  std::vector<std::size_t> fold_of(entries.size(), 0);
  for (const Group* g : order) {
    const auto fold = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    load[fold] += g->seconds;
    for (std::size_t m : g->members) fold_of[m] = fold;
  }
  std::vector<std::vector<ManifestEntry>> folds(k);
  for (std::size_t i = 0; i < entries.size(); ++i) folds[fold_of[i]].push_back(entries[i]);
  return folds;
}

}  // namespace speechforge::dataset
