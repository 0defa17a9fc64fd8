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

// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "httplib.h"
#include "oracles.hpp"
#include "speechforge/audio/clip.hpp"
#include "speechforge/audio/signal.hpp"
#include "speechforge/ctcseg/align.hpp"
#include "speechforge/dataset/manifest.hpp"
#include "speechforge/explorer/index.hpp"
#include "speechforge/explorer/service.hpp"
#include "speechforge/log.hpp"
#include "speechforge/metrics/metrics.hpp"
#include "speechforge/pipeline/commands.hpp"
#include "speechforge/pipeline/config.hpp"
#include "speechforge/textnorm/normalizer.hpp"
#include "synthetic.hpp"

namespace fs = std::filesystem;
using namespace speechforge;
using Json = nlohmann::ordered_json;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && outcome_.pass) {
      outcome_.pass = false;
      outcome_.detail = what;
    }
  }
  void note(const std::string& detail) {
    if (outcome_.pass) outcome_.detail = detail;
  }
  Outcome result() const { return outcome_; }

 private:
  Outcome outcome_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ctcseg::LogProbMatrix log_softmax_matrix(std::mt19937_64& rng, std::size_t frames, std::size_t vocab) {
  std::normal_distribution<double> logit(0.0, 2.0);
  std::vector<float> values(frames * vocab);
  for (std::size_t t = 0; t < frames; ++t) {
    std::vector<double> row(vocab);
    double mx = -1e300;
    for (auto& x : row) mx = std::max(mx, x = logit(rng));
    double z = 0.0;
    for (double x : row) z += std::exp(x - mx);
    for (std::size_t v = 0; v < vocab; ++v) values[t * vocab + v] = static_cast<float>(row[v] - mx - std::log(z));
  }
  return ctcseg::LogProbMatrix(frames, vocab, 0.02, std::move(values), true);
}

std::vector<ctcseg::TokenSequence> planted_tokens(const sftest::SyntheticRecording& rec) {
  const auto vocab = sftest::letter_vocabulary();
  std::vector<ctcseg::TokenSequence> out;
  for (const auto& p : rec.planted) out.push_back(ctcseg::tokenize(p.text, vocab).ids);
  return out;
}

bool within(std::size_t a, std::size_t b, std::size_t tol) { return (a > b ? a - b : b - a) <= tol; }

Outcome alignment_oracle() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(500);
  std::uniform_int_distribution<std::size_t> frames(1, 10), vocab(2, 4), chars(1, 4);
  double worst = 0.0;
  for (int iter = 0; iter < 500; ++iter) {
    const std::size_t T = frames(rng), V = vocab(rng), M = std::min(chars(rng), T);
    const auto m = log_softmax_matrix(rng, T, V);
    std::uniform_int_distribution<int> tok(1, static_cast<int>(V) - 1);
    std::vector<int> text(M);
    for (auto& t : text) t = tok(rng);
    const auto brute = sftest::brute_force_alignment(m, text, 0);
    const auto path = ctcseg::trellis_path(m, text, std::max<std::size_t>(T, 2) + static_cast<std::size_t>(iter % 3));
    const double diff = std::abs(path.log_prob - brute.log_prob);
    worst = std::max(worst, diff);
    c.expect(brute.feasible && path.feasible, "case " + std::to_string(iter) + " infeasible");
    c.expect(diff <= 1e-9, "case " + std::to_string(iter) + " log-prob differs by " + fmt("%.3g", diff));
    c.expect(path.char_frames == brute.char_frames, "case " + std::to_string(iter) + " character frames differ");
  }
  const double elapsed = seconds_since(start);
  c.expect(elapsed < 10.0, "took " + fmt("%.2f", elapsed) + " s");
  c.note("500 cases, max |dlogp| " + fmt("%.2g", worst) + ", " + fmt("%.2f", elapsed) + " s");
  return c.result();
}

// One recording with the generator defaults (K = 50, T = 20000) run through
// the segment command.
Outcome synthetic_recovery() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  const auto rec = sftest::make_recording(sftest::SyntheticOptions{}, 2024);
  const auto corpus = sftest::write_corpus(sftest::fresh_dir("accept_recovery"), {rec});
  auto config = pipeline::PipelineConfig::load(corpus.config);
  c.expect(config.align.window_set == std::vector<std::size_t>{8000, 10000, 12000}, "window set is not the default");
  c.expect(config.align.score_threshold == -2.0, "threshold is not -2");
  const auto summary = pipeline::run_segment(config);
  const auto manifest = dataset::read_manifest(config.output_dir / "manifest.jsonl");

  std::size_t recovered = 0;
  std::vector<std::pair<double, double>> spans;
  for (const auto& e : manifest) {
    const auto u = static_cast<std::size_t>(*e.number("utterance_index"));
    const auto& plant = rec.planted.at(u);
    const auto s = static_cast<std::size_t>(std::llround(*e.number("start_time") / 0.01));
    const auto t = static_cast<std::size_t>(std::llround(*e.number("end_time") / 0.01)) - 1;
    if (within(s, plant.start_frame, 2) && within(t, plant.end_frame, 2)) ++recovered;
    spans.emplace_back(*e.number("start_time"), *e.number("end_time"));
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    c.expect(spans[i].first >= spans[i - 1].second - 1e-9, "recovered segments overlap");
  }
  const double rate = static_cast<double>(recovered) / static_cast<double>(rec.planted.size());
  const double elapsed = seconds_since(start);
  c.expect(summary.failed == 0, "recording failed");
  c.expect(rate >= 0.95, "recovered " + std::to_string(recovered) + "/" + std::to_string(rec.planted.size()));
  c.expect(elapsed < 60.0, "took " + fmt("%.1f", elapsed) + " s");
  c.note(std::to_string(recovered) + "/" + std::to_string(rec.planted.size()) + " within 2 frames, " +
         fmt("%.1f", elapsed) + " s");
  return c.result();
}

Outcome band_degeneracy() {
  Check c;
  const auto rec = sftest::make_recording(sftest::SyntheticOptions{}, 2024);
  const auto utts = planted_tokens(rec);
  ctcseg::AlignParams params;
  params.window_frames = rec.matrix.frames();
  const auto banded = ctcseg::align(rec.matrix, utts, params);
  c.expect(banded == ctcseg::align_unbanded(rec.matrix, utts, params), "W = T differs from the unbanded DP");
  params.window_frames = 2 * rec.matrix.frames();
  c.expect(ctcseg::align(rec.matrix, utts, params) == banded, "W = 2T differs from W = T");

  // A band narrower than the longest silent gap between utterances.
  std::size_t widest_gap = 0;
  for (std::size_t i = 1; i < rec.planted.size(); ++i) {
    widest_gap = std::max(widest_gap, rec.planted[i].start_frame - rec.planted[i - 1].end_frame);
  }
  params.window_frames = widest_gap / 2;
  const auto narrow = ctcseg::align(rec.matrix, utts, params);
  std::size_t failed = 0, silent_wrong = 0;
  for (std::size_t i = 0; i < narrow.size(); ++i) {
    if (narrow[i].failed) {
      ++failed;
    } else if (!within(narrow[i].start_frame, rec.planted[i].start_frame, 2) ||
               !within(narrow[i].end_frame, rec.planted[i].end_frame, 2)) {
      ++silent_wrong;
    }
  }
  c.expect(failed > 0, "narrow band produced no failed segment");
  c.expect(silent_wrong == 0, std::to_string(silent_wrong) + " segments wrong without failed flag");
  c.note("W=" + std::to_string(params.window_frames) + ": " + std::to_string(failed) + " failed, 0 silently wrong");
  return c.result();
}

Outcome metric_oracle() {
  Check c;
  std::mt19937_64 rng(1000);
  std::uniform_int_distribution<int> len(0, 12), word(0, 5);
  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<std::string> ref(static_cast<std::size_t>(len(rng))), hyp(static_cast<std::size_t>(len(rng)));
    for (auto& w : ref) w = "w" + std::to_string(word(rng));
    for (auto& w : hyp) w = "w" + std::to_string(word(rng));
    const auto steps = metrics::edit_script<std::string>(ref, hyp);
    const auto got = metrics::count_steps(steps);
    const auto want = sftest::edit_oracle(ref, hyp);
    c.expect(got.substitutions == want.substitutions && got.deletions == want.deletions &&
                 got.insertions == want.insertions,
             "pair " + std::to_string(iter) + " counts differ from the oracle");
  }
  const auto r = metrics::utterance_metrics("two fifty six", "two hundred and fifty six");
  c.expect(r.wer == 2.0 / 3.0, "WER of the insertion pair is " + fmt("%.17g", r.wer));
  c.note("1000 pairs, insertion pair WER " + fmt("%.4f", r.wer));
  return c.result();
}

Outcome normalization_fidelity() {
  Check c;
  const auto ru = textnorm::NormalizationConfig::load(SPEECHFORGE_SOURCE_DIR "/configs/ru.json");
  const auto digits = textnorm::expand_numbers("19", ru.digit_lexicon);
  const auto subst = textnorm::apply_substitutions("т.д.", ru.substitutions);
  const auto i = textnorm::transliterate("i", ru.transliteration);
  const auto j = textnorm::transliterate("j", ru.transliteration);
  c.expect(digits == "один девять", "19 -> " + digits);
  c.expect(subst == "так далее", "т.д. -> " + subst);
  c.expect(i == "и", "i -> " + i);
  c.expect(j == "ж", "j -> " + j);
  const auto doc = textnorm::normalize("Т.Д. 19.", ru);
  c.expect(doc.size() == 1 && doc[0].text == "так далее один девять.", "full pipeline output differs");
  c.note("4 examples byte-exact");
  return c.result();
}

Outcome defaults_audit() {
  Check c;
  const auto echo = pipeline::PipelineConfig::defaults().resolved_json();
  c.expect(echo["align"]["window_set"] == Json::array({8000, 10000, 12000}), "window_set");
  c.expect(echo["align"]["window_frames"] == 8000, "window_frames");
  c.expect(echo["align"]["score_threshold"] == -2.0, "score_threshold");
  bool cer_rule = false;
  for (const auto& rule : echo["filter_rules"]) {
    cer_rule = cer_rule || (rule["field"] == "cer" && rule["op"] == ">" && rule["value"] == 0.10);
  }
  c.expect(cer_rule, "no cer > 0.10 rule");
  c.expect(echo["char_rate"]["high"] == 30.0, "char-rate bound");
  c.note("windows [8000,10000,12000], threshold -2, cer > 0.10, 30 cps");
  return c.result();
}

Outcome audio_conservation() {
  Check c;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<float> amp(-1.0f, 1.0f);
  for (int iter = 0; iter < 20; ++iter) {
    audio::AudioClip clip;
    clip.sample_rate = 16000;
    clip.samples.resize(30000 + static_cast<std::size_t>(iter) * 101);
    for (auto& s : clip.samples) s = amp(rng);
    std::uniform_real_distribution<double> cut(0.0, clip.duration());
    std::vector<double> points{0.0, clip.duration()};
    for (int k = 0; k < 8; ++k) points.push_back(cut(rng));
    std::sort(points.begin(), points.end());
    std::vector<audio::TimeSpan> spans;
    for (std::size_t k = 0; k + 1 < points.size(); ++k) spans.push_back({points[k], points[k + 1]});
    std::vector<float> joined;
    for (const auto& part : audio::cut_segments(clip, spans, 0.0)) {
      joined.insert(joined.end(), part.samples.begin(), part.samples.end());
    }
    c.expect(joined == clip.samples, "tiling did not reconstruct the source");
  }

  audio::AudioClip tone;
  tone.sample_rate = 16000;
  tone.samples.resize(16000);
  for (std::size_t n = 0; n < tone.samples.size(); ++n) {
    tone.samples[n] = static_cast<float>(0.8 * std::sin(2.0 * M_PI * 1000.0 * static_cast<double>(n) / 16000.0));
  }
  const double bandwidth = audio::analyze_signal(tone).bandwidth;
  c.expect(std::abs(bandwidth - 1000.0) <= 16000.0 / 4096.0, "tone bandwidth " + fmt("%.2f", bandwidth));

  audio::AudioClip half;
  half.sample_rate = 16000;
  half.samples.assign(8000, 0.5f);
  const double peak = audio::analyze_signal(half).peak_level;
  c.expect(std::abs(peak - (-6.0206)) <= 0.001, "peak " + fmt("%.5f", peak));

  std::uniform_real_distribution<double> freq(80.0, 3000.0), seconds(0.5, 3.0), noise(0.0, 0.2);
  std::size_t holds = 0;
  for (int iter = 0; iter < 100; ++iter) {
    audio::AudioClip abrupt;
    abrupt.sample_rate = 16000;
    abrupt.samples.resize(static_cast<std::size_t>(seconds(rng) * 16000));
    const double f = freq(rng), n = noise(rng);
    for (std::size_t k = 0; k < abrupt.samples.size(); ++k) {
      abrupt.samples[k] = static_cast<float>(0.6 * std::sin(2.0 * M_PI * f * static_cast<double>(k) / 16000.0) +
                                             n * static_cast<double>(amp(rng)));
    }
    auto faded = abrupt;
    const std::size_t tail = 1600;  // the tail window, 0.1 s
    for (std::size_t k = 0; k < tail; ++k) {
      faded.samples[faded.samples.size() - tail + k] *= static_cast<float>(1.0 - static_cast<double>(k + 1) / tail);
    }
    if (audio::analyze_signal(abrupt).tail_ma_ratio > audio::analyze_signal(faded).tail_ma_ratio) ++holds;
  }
  c.expect(holds == 100, "abrupt > faded on " + std::to_string(holds) + "/100 clips");
  c.note("tiling exact, tone " + fmt("%.1f", bandwidth) + " Hz, peak " + fmt("%.4f", peak) + " dBFS, fade 100/100");
  return c.result();
}

std::vector<fs::path> files_under(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism() {
  Check c;
  std::vector<sftest::SyntheticRecording> recs;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    sftest::SyntheticOptions opt;
    opt.utterances = 20;
    opt.frames = 6000;
    recs.push_back(sftest::make_recording(opt, 900 + seed));
  }
  const auto corpus = sftest::write_corpus(sftest::fresh_dir("accept_determinism"), recs);
  const auto a = corpus.root / "jobs1", b = corpus.root / "jobs8";
  for (const auto& [dir, jobs] : {std::pair{a, 1}, std::pair{b, 8}}) {
    const std::string cmd = std::string("\"") + SPEECHFORGE_CLI + "\" segment --config \"" + corpus.config.string() +
                            "\" --jobs " + std::to_string(jobs) + " --out \"" + dir.string() + "\"";
    const int status = std::system(cmd.c_str());
    c.expect(status == 0, "segment --jobs " + std::to_string(jobs) + " exited with " + std::to_string(status));
  }
  if (!fs::exists(a) || !fs::exists(b)) return c.result();
  const auto files = files_under(a);
  c.expect(files == files_under(b), "output file sets differ");
  std::size_t compared = 0;
  for (const auto& f : files) {
    if (f == "config.resolved.json") continue;  // echoes the jobs setting itself
    c.expect(slurp(a / f) == slurp(b / f), f.string() + " differs");
    ++compared;
  }
  c.expect(compared > 10, "too few outputs compared");
  c.note(std::to_string(compared) + " files byte-identical");
  return c.result();
}

Outcome resegmentation() {
  Check c;
  std::mt19937_64 rng(20);
  sftest::SyntheticOptions opt;
  std::optional<sftest::SyntheticRecording> joined;
  for (int i = 0; i < 20; ++i) {
    const auto text = sftest::random_utterance(rng, 4, 10);
    std::uniform_int_distribution<std::size_t> extra(60, 200);
    auto clip = sftest::make_recording({text}, 3 * sftest::frames_needed(text) + extra(rng), opt, rng);
    joined = joined ? sftest::concatenate(*joined, clip) : clip;
  }
  const auto corpus = sftest::write_corpus(sftest::fresh_dir("accept_reseg"), {*joined});
  auto config = pipeline::PipelineConfig::load(corpus.config);
  pipeline::run_segment(config);
  const auto manifest = dataset::read_manifest(config.output_dir / "manifest.jsonl");
  std::set<std::size_t> found;
  double worst_score = 0.0;
  for (const auto& e : manifest) {
    const auto u = static_cast<std::size_t>(*e.number("utterance_index"));
    const auto& plant = joined->planted.at(u);
    const auto s = static_cast<std::size_t>(std::llround(*e.number("start_time") / 0.01));
    const auto t = static_cast<std::size_t>(std::llround(*e.number("end_time") / 0.01)) - 1;
    const double score = *e.number("score");
    worst_score = std::min(worst_score, score);
    c.expect(within(s, plant.start_frame, 2) && within(t, plant.end_frame, 2),
             "clip " + std::to_string(u) + " boundary off by more than 2 frames");
    c.expect(score > config.align.score_threshold, "clip " + std::to_string(u) + " score " + fmt("%.3f", score));
    found.insert(u);
  }
  c.expect(found.size() == 20, "recovered " + std::to_string(found.size()) + "/20 clips");
  c.note("20/20 clips, worst score " + fmt("%.3f", worst_score));
  return c.result();
}

Outcome api_contract() {
  Check c;
  const auto dir = sftest::fresh_dir("accept_api");
  fs::create_directories(dir / "clips");
  std::mt19937_64 rng(200);
  std::uniform_real_distribution<double> dur(0.2, 1.5), score(-4.0, 0.0);
  std::uniform_real_distribution<float> amp(-0.5f, 0.5f);
  std::vector<dataset::ManifestEntry> entries;
  for (int i = 0; i < 200; ++i) {
    audio::AudioClip clip;
    clip.sample_rate = 8000;
    clip.samples.resize(static_cast<std::size_t>(dur(rng) * 8000));
    for (auto& s : clip.samples) s = amp(rng);
    const auto name = "clips/" + std::to_string(i) + ".wav";
    audio::write_wav_pcm16(dir / name, clip);
    const auto ref = sftest::random_utterance(rng, 2, 8);
    dataset::ManifestEntry e(name, clip.duration(), ref);
    e.set("pred_text", i % 4 == 0 ? ref : sftest::random_utterance(rng, 2, 8));
    e.set("score", score(rng));
    entries.push_back(std::move(e));
  }
  dataset::write_manifest(dir / "manifest.jsonl", entries);

  explorer::Service service([&] { return explorer::DatasetIndex::build(dir / "manifest.jsonl"); });
  explorer::HttpServer server(service);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  httplib::Client client("127.0.0.1", port);
  auto get = [&](const std::string& path) -> std::optional<Json> {
    const auto res = client.Get(path);
    if (!res || res->status != 200) return std::nullopt;
    return Json::parse(res->body);
  };

  const auto stats = get("/api/stats");
  c.expect(stats && (*stats)["entry_count"] == 200, "stats entry_count");

  std::size_t pages = 0;
  for (const std::string sort : {"id", "wer", "cer", "duration", "score", "text"}) {
    for (const std::string dir_param : {"asc", "desc"}) {
      for (const std::string filter : {"", "cer:>:0.10", "wer:<=:0.5,score:>:-2"}) {
        std::vector<std::size_t> seen;
        std::size_t total = 0;
        for (std::size_t page = 0;; ++page) {
          const auto body = get("/api/samples?page=" + std::to_string(page) + "&page_size=17&sort=" + sort +
                                "&dir=" + dir_param + (filter.empty() ? "" : "&filter=" + filter));
          if (!body) {
            c.expect(false, "samples request failed for sort " + sort);
            break;
          }
          ++pages;
          total = (*body)["total"].get<std::size_t>();
          if ((*body)["items"].empty()) break;
          for (const auto& item : (*body)["items"]) seen.push_back(item["id"].get<std::size_t>());
        }
        const std::set<std::size_t> unique(seen.begin(), seen.end());
        c.expect(seen.size() == total && unique.size() == total,
                 "pagination incomplete for sort=" + sort + " filter=" + filter);
      }
    }
  }

  const auto all = get("/api/samples?page_size=1000");
  std::size_t detailed = 0;
  if (all) {
    for (const auto& item : (*all)["items"]) {
      const auto id = item["id"].get<std::size_t>();
      const auto detail = get("/api/samples/" + std::to_string(id));
      if (!detail) {
        c.expect(false, "detail " + std::to_string(id) + " failed");
        continue;
      }
      for (const auto& [key, value] : item.items()) {
        if (value.is_number()) c.expect((*detail)[key] == value, "detail/list mismatch on " + key);
      }
      ++detailed;
    }
  }
  c.expect(detailed == 200, "only " + std::to_string(detailed) + " details checked");

  for (std::size_t id : {0u, 57u, 199u}) {
    const auto res = client.Get("/api/samples/" + std::to_string(id) + "/audio");
    if (!res || res->status != 200) {
      c.expect(false, "audio " + std::to_string(id) + " failed");
      continue;
    }
    const auto clip = audio::decode_wav(std::as_bytes(std::span(res->body.data(), res->body.size())));
    c.expect(std::abs(clip.duration() - entries[id].duration()) <= 0.001, "audio duration mismatch");
  }
  const auto missing = client.Get("/api/samples/200");
  c.expect(missing && missing->status == 404, "id = n is not 404");
  server.stop();
  c.note("200 entries, " + std::to_string(pages) + " pages, " + std::to_string(detailed) + " details");
  return c.result();
}

}  // namespace

int main() {
  if (std::getenv("SPEECHFORGE_LOG") == nullptr) setenv("SPEECHFORGE_LOG", "warn", 0);
  init_logging_from_env();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"alignment oracle equivalence", alignment_oracle},
      {"synthetic boundary recovery", synthetic_recovery},
      {"band degeneracy and failure", band_degeneracy},
      {"metric oracle", metric_oracle},
      {"normalization fidelity", normalization_fidelity},
      {"defaults audit", defaults_audit},
      {"audio conservation", audio_conservation},
      {"determinism under parallelism", determinism},
      {"re-segmentation harness", resegmentation},
      {"api contract", api_contract},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << " -- " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
