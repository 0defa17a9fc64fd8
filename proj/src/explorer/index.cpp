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

#include "speechforge/explorer/index.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iterator>
#include <set>

#include "speechforge/audio/clip.hpp"
#include "speechforge/log.hpp"
#include "speechforge/utf8.hpp"

namespace speechforge::explorer {

namespace {

// Lists show this subset of the row; details show all of it.
constexpr const char* kListFields[] = {"audio_filepath", "duration", "text", "pred_text",
                                       "wer", "cer", "wmr", "score", "char_rate"};

int type_rank(const Json* v) {
  if (v == nullptr || v->is_null()) return 4;
  if (v->is_number()) return 0;
  if (v->is_string()) return 1;
  if (v->is_boolean()) return 2;
  return 3;
}

const Json* field_of(const Json& row, const std::string& field) {
  const auto it = row.find(field);
  return it == row.end() ? nullptr : &*it;
}

// -1, 0, 1 on values of equal rank.
int compare_values(const Json& a, const Json& b, int rank) {
  switch (rank) {
    case 0: {
      const double x = a.get<double>(), y = b.get<double>();
      return x < y ? -1 : (y < x ? 1 : 0);
    }
    case 1: return a.get_ref<const std::string&>().compare(b.get_ref<const std::string&>()) < 0
                       ? -1
                       : (a == b ? 0 : 1);
    case 2: return static_cast<int>(a.get<bool>()) - static_cast<int>(b.get<bool>());
    case 3: {
      const auto x = a.dump(), y = b.dump();
      return x < y ? -1 : (y < x ? 1 : 0);
    }
    default: return 0;
  }
}

std::vector<std::size_t> sort_order(const std::vector<IndexedEntry>& entries, const std::string& field,
                                    bool descending) {
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Json* x = field_of(entries[a].row, field);
    const Json* y = field_of(entries[b].row, field);
    const int rx = type_rank(x), ry = type_rank(y);
    if (rx != ry) return rx < ry;
    if (rx != 4) {
      const int c = compare_values(*x, *y, rx);
      if (c != 0) return descending ? c > 0 : c < 0;
    }
    return a < b;
  });
  return order;
}

}  // namespace

Json report_json(const metrics::ErrorReport& r) {
  return {
      {"substitutions", r.substitutions}, {"deletions", r.deletions}, {"insertions", r.insertions},
      {"matches", r.matches},             {"ref_len", r.ref_len},     {"hyp_len", r.hyp_len},
      {"char_errors", r.char_errors},     {"char_ref_len", r.char_ref_len},
      {"wer", r.wer},                     {"cer", r.cer},             {"wmr", r.wmr},
      {"accuracy", r.accuracy},
  };
}

Json views_json(const audio::RenderedViews& views) {
  std::vector<float> lo, hi;
  lo.reserve(views.envelope.size());
  hi.reserve(views.envelope.size());
  for (const auto& [a, b] : views.envelope) {
    lo.push_back(a);
    hi.push_back(b);
  }
  const auto& s = views.spectrogram;
  return {
      {"envelope", {{"min", lo}, {"max", hi}}},
      {"spectrogram",
       {{"columns", s.columns}, {"rows", s.rows}, {"time_axis", s.time_axis}, {"freq_axis", s.freq_axis}, {"db", s.db}}},
  };
}

DatasetIndex DatasetIndex::build(const std::filesystem::path& manifest, const std::filesystem::path& audio_root) {
  auto entries = dataset::read_manifest(manifest);
  const auto root = audio_root.empty() ? manifest.parent_path() : audio_root;
  return from_entries(std::move(entries), root);
}

DatasetIndex DatasetIndex::from_entries(std::vector<dataset::ManifestEntry> entries,
                                        const std::filesystem::path& audio_root) {
  const auto started = std::chrono::steady_clock::now();
  DatasetIndex index;
  index.audio_root_ = audio_root;
  index.stats_ = dataset::compute_stats(entries);

  std::vector<metrics::TextPair> pairs;
  std::vector<std::size_t> pair_owner;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (auto hyp = entries[i].pred_text(); hyp && !utf8::split_words(entries[i].text()).empty()) {
      pairs.push_back({entries[i].text(), *hyp});
      pair_owner.push_back(i);
    }
  }
  const auto reports = metrics::corpus_metrics(pairs);

  index.entries_.resize(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = index.entries_[i];
    e.id = i;
    e.entry = std::move(entries[i]);
    e.row = Json::object();
    e.row["id"] = i;
    for (const auto& [key, value] : e.entry.record().items()) {
      if (key != "id") e.row[key] = value;
    }
    e.row["char_rate"] = metrics::char_rate(e.entry.text(), e.entry.duration());
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    auto& e = index.entries_[pair_owner[p]];
    e.report = reports[p];
    e.row["wer"] = reports[p].wer;
    e.row["cer"] = reports[p].cer;
    e.row["wmr"] = reports[p].wmr;
    e.row["accuracy"] = reports[p].accuracy;
  }
  if (!reports.empty()) index.corpus_ = metrics::aggregate_metrics(reports);

  for (const auto& [word, acc] : metrics::word_accuracy_table(pairs)) index.words_.push_back({word, acc});

  std::set<std::string> fields;
  for (const auto& e : index.entries_) {
    for (const auto& item : e.row.items()) fields.insert(item.key());
  }
  index.fields_.assign(fields.begin(), fields.end());
  for (const auto& f : index.fields_) {
    index.ascending_[f] = sort_order(index.entries_, f, false);
    index.descending_[f] = sort_order(index.entries_, f, true);
  }
  index.load_seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  spdlog::info("indexed {} entries in {:.3f} s", index.size(), index.load_seconds_);
  return index;
}

const IndexedEntry& DatasetIndex::at(std::size_t id) const {
  if (id >= entries_.size()) throw ExplorerError(ExplorerErrc::kNotFound, "no sample with id " + std::to_string(id));
  return entries_[id];
}

std::filesystem::path DatasetIndex::audio_path(std::size_t id) const {
  std::filesystem::path p = at(id).entry.audio_filepath();
  return p.is_absolute() ? p : audio_root_ / p;
}

bool DatasetIndex::known_field(const std::string& field) const {
  return std::binary_search(fields_.begin(), fields_.end(), field);
}

const std::vector<std::size_t>& DatasetIndex::sorted(const std::string& field, bool descending) const {
  const auto& table = descending ? descending_ : ascending_;
  const auto it = table.find(field);
  if (it == table.end()) throw ExplorerError(ExplorerErrc::kUnknownField, "unknown field '" + field + "'");
  return it->second;
}

SamplePage DatasetIndex::query(const SampleQuery& q) const {
  if (q.page_size == 0 || q.page_size > kMaxPageSize) {
    throw ExplorerError(ExplorerErrc::kBadPage, "page_size must be in [1, " + std::to_string(kMaxPageSize) + "]");
  }
  for (const auto& f : q.filters) {
    if (!known_field(f.field)) throw ExplorerError(ExplorerErrc::kUnknownField, "unknown field '" + f.field + "'");
  }
  const auto& order = sorted(q.sort, q.descending);
  SamplePage page;
  const std::size_t first = q.page * q.page_size;
  if (q.page != 0 && first / q.page != q.page_size) {
    throw ExplorerError(ExplorerErrc::kBadPage, "page out of range");
  }
  for (std::size_t id : order) {
    bool keep = true;
    for (const auto& f : q.filters) {
      std::optional<bool> hit;
      try {
        hit = f.evaluate(entries_[id].row);
      } catch (const dataset::DatasetError& e) {
        throw ExplorerError(ExplorerErrc::kBadRequest, e.what());
      }
      if (!hit.value_or(false)) {
        keep = false;
        break;
      }
    }
    if (!keep) continue;
    if (page.total >= first && page.ids.size() < q.page_size) page.ids.push_back(id);
    page.total += 1;
  }
  return page;
}

Json DatasetIndex::stats_json() const {
  Json doc = dataset::stats_to_json(stats_);
  doc["corpus_metrics"] = corpus_ ? report_json(*corpus_) : Json(nullptr);
  doc["load_seconds"] = load_seconds_;
  return doc;
}

Json DatasetIndex::list_item(std::size_t id) const {
  const auto& row = at(id).row;
  Json item = Json::object();
  item["id"] = id;
  for (const char* key : kListFields) {
    const auto it = row.find(key);
    if (it != row.end()) item[key] = *it;
  }
  return item;
}

Json DatasetIndex::detail(std::size_t id) const {
  const auto& e = at(id);
  Json doc = e.row;
  if (e.report) {
    doc["errors"] = report_json(*e.report);
    Json diff = Json::array();
    for (const auto& op : metrics::word_diff(e.entry.text(), *e.entry.pred_text())) {
      Json step = {{"kind", std::string(metrics::to_string(op.kind))}};
      if (op.ref) step["ref"] = *op.ref;
      if (op.hyp) step["hyp"] = *op.hyp;
      diff.push_back(std::move(step));
    }
    doc["diff"] = std::move(diff);
  } else {
    doc["errors"] = nullptr;
    doc["diff"] = nullptr;
  }
  try {
    const auto stats = audio::analyze_signal(audio::read_wav(audio_path(id)));
    doc["signal"] = {{"sample_rate", stats.sample_rate},
                     {"duration", stats.duration},
                     {"peak_level", stats.peak_level},
                     {"bandwidth", stats.bandwidth},
                     {"tail_ma_ratio", stats.tail_ma_ratio}};
  } catch (const Error& err) {
    doc["signal"] = nullptr;
    doc["audio_error"] = err.what();
  }
  return doc;
}

std::string DatasetIndex::audio_bytes(std::size_t id) const {
  const auto path = audio_path(id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExplorerError(ExplorerErrc::kAudioMissing, "audio for sample " + std::to_string(id) + " not found");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

audio::RenderedViews DatasetIndex::views(std::size_t id, const audio::ViewOptions& options) const {
  const auto path = audio_path(id);
  if (!std::filesystem::exists(path)) {
    throw ExplorerError(ExplorerErrc::kAudioMissing, "audio for sample " + std::to_string(id) + " not found");
  }
  return audio::render_views(audio::read_wav(path), options);
}

Json DatasetIndex::words_json(const WordQuery& q) const {
  if (q.page_size == 0 || q.page_size > kMaxPageSize) {
    throw ExplorerError(ExplorerErrc::kBadPage, "page_size must be in [1, " + std::to_string(kMaxPageSize) + "]");
  }
  std::vector<const WordRow*> rows;
  for (const auto& w : words_) rows.push_back(&w);
  const auto key = [&](const WordRow& w) -> double {
    if (q.sort == "occurrences") return static_cast<double>(w.accuracy.occurrences);
    if (q.sort == "matched") return static_cast<double>(w.accuracy.matched);
    return w.accuracy.accuracy;
  };
  if (q.sort == "word") {
    if (q.descending) std::reverse(rows.begin(), rows.end());
  } else if (q.sort == "occurrences" || q.sort == "matched" || q.sort == "accuracy") {
    std::stable_sort(rows.begin(), rows.end(), [&](const WordRow* a, const WordRow* b) {
      return q.descending ? key(*a) > key(*b) : key(*a) < key(*b);
    });
  } else {
    throw ExplorerError(ExplorerErrc::kUnknownField, "unknown word sort '" + q.sort + "'");
  }
  Json items = Json::array();
  const std::size_t first = q.page * q.page_size;
  for (std::size_t i = first; i < rows.size() && i < first + q.page_size; ++i) {
    const auto& w = *rows[i];
    items.push_back({{"word", w.word},
                     {"occurrences", w.accuracy.occurrences},
                     {"matched", w.accuracy.matched},
                     {"accuracy", w.accuracy.accuracy}});
  }
  return {{"total", rows.size()}, {"items", std::move(items)}};
}

}  // namespace speechforge::explorer
