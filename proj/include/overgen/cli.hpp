#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "overgen/aligner.hpp"
#include "overgen/alignment.hpp"
#include "overgen/corpus.hpp"
#include "overgen/detector.hpp"
#include "overgen/error.hpp"
#include "overgen/evalkit.hpp"
#include "overgen/qe_ensemble.hpp"
#include "overgen/synthgen.hpp"

#ifndef OVERGEN_DATA_DIR
#define OVERGEN_DATA_DIR "data"
#endif

namespace overgen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

namespace detail {

using json = nlohmann::ordered_json;

/// Flag value if given, else the config-file value, else the default.
template <typename T>
T resolve(const std::optional<T>& flag, const json& config, const std::string& key, T fallback) {
  if (flag) return *flag;
  if (auto it = config.find(key); it != config.end()) {
    try {
      return it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config key '" + key + "' has the wrong type");
    }
  }
  return fallback;
}

template <typename T>
std::optional<T> resolve_optional(const std::optional<T>& flag, const json& config,
                                  const std::string& key) {
  if (flag) return flag;
  if (auto it = config.find(key); it != config.end() && !it->is_null()) {
    try {
      return it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError("config key '" + key + "' has the wrong type");
    }
  }
  return std::nullopt;
}

inline json load_config(const std::optional<std::string>& flag) {
  std::optional<std::string> path = flag;
  if (!path) {
    if (const char* env = std::getenv("OVERGEN_CONFIG"); env && *env) path = env;
  }
  if (!path) return json::object();
  std::ifstream in(*path);
  if (!in) throw IoError("cannot open config", *path);
  try {
    auto j = json::parse(in);
    if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed config: ") + e.what());
  }
}

inline void write_snapshot(const json& resolved, const std::string& out_path) {
  const auto path = out_path + ".config.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing", path);
  out << resolved.dump(2) << '\n';
  if (!out) throw IoError("write failure", path);
}

inline std::string require(const std::optional<std::string>& v, const std::string& flag) {
  if (!v || v->empty()) throw ValidationError("missing required flag " + flag);
  return *v;
}

struct Common {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
};

struct DetectorFlags {
  std::optional<std::size_t> n, k_partial, ngram_order, tng_margin;
  std::optional<double> theta_detached;

  void add_to(CLI::App* app) {
    app->add_option("--n", n, "minimum run of unaligned target tokens");
    app->add_option("--theta-detached", theta_detached, "unaligned share for Detached");
    app->add_option("--k-partial", k_partial, "span length for PartiallyDetached");
    app->add_option("--ngram-order", ngram_order, "n-gram order for repetition counts");
    app->add_option("--tng-margin", tng_margin, "target-minus-source repetition margin");
  }

  DetectorParams resolve(const json& config) const {
    const DetectorParams d;
    DetectorParams p;
    p.n = detail::resolve(n, config, "n", d.n);
    p.theta_detached = detail::resolve(theta_detached, config, "theta-detached", d.theta_detached);
    p.k_partial = detail::resolve(k_partial, config, "k-partial", d.k_partial);
    p.ngram_order = detail::resolve(ngram_order, config, "ngram-order", d.ngram_order);
    p.tng_margin = detail::resolve(tng_margin, config, "tng-margin", d.tng_margin);
    p.validate();
    return p;
  }
};

inline json to_json(const DetectorParams& p) {
  return {{"n", p.n},
          {"theta-detached", p.theta_detached},
          {"k-partial", p.k_partial},
          {"ngram-order", p.ngram_order},
          {"tng-margin", p.tng_margin}};
}

inline ScoreDirection parse_direction(const std::string& s) {
  auto d = direction_from_string(s);
  if (!d) throw ValidationError("--qe-direction must be 'low' or 'high'");
  return *d;
}

// ---------------------------------------------------------------- align-train

struct AlignTrain {
  Common common;
  std::optional<std::string> input, model;
  std::optional<std::size_t> iterations;
  bool no_null = false;

  int run(std::ostream& out) const {
    const auto config = load_config(common.config);
    const auto in_path = require(resolve_optional(input, config, "input"), "--input");
    const auto model_path = require(resolve_optional(model, config, "model"), "--model");
    TrainOptions opts;
    opts.iterations = resolve(iterations, config, "iterations", opts.iterations);
    opts.uses_null = !(no_null || config.value("no-null", false));

    const auto corpus = load_jsonl(in_path);
    const auto m = train_ibm1(corpus, opts);
    save_model(m, model_path);
    write_snapshot({{"command", "align-train"},
                    {"input", in_path},
                    {"model", model_path},
                    {"iterations", opts.iterations},
                    {"uses_null", opts.uses_null}},
                   model_path);
    out << "trained on " << corpus.size() - m.skipped_pairs << " pairs (" << m.skipped_pairs
        << " skipped), " << m.src_vocab.size() << " source / " << m.tgt_vocab.size()
        << " target words, log-likelihood " << m.log_likelihood.front() << " -> "
        << m.log_likelihood.back() << '\n';
    return kExitOk;
  }
};

// ---------------------------------------------------------------- align

struct Align {
  Common common;
  std::optional<std::string> input, model, out_path;
  std::optional<double> p_min;

  int run(std::ostream& out) const {
    const auto config = load_config(common.config);
    const auto in_path = require(resolve_optional(input, config, "input"), "--input");
    const auto model_path = require(resolve_optional(model, config, "model"), "--model");
    const auto dest = require(resolve_optional(out_path, config, "out"), "--out");
    const auto pm = resolve(p_min, config, "p-min", kDefaultPMin);

    const auto m = load_model(model_path);
    const auto corpus = load_jsonl(in_path);
    std::vector<Alignment> alignments;
    AlignDiagnostics diag;
    for (const auto& seg : corpus.segments) {
      alignments.push_back(align_pair(m, tokenize(seg.src), tokenize(seg.tgt), pm, &diag));
    }
    write_pharaoh_file(alignments, dest);
    write_snapshot({{"command", "align"},
                    {"input", in_path},
                    {"model", model_path},
                    {"out", dest},
                    {"p-min", pm}},
                   dest);
    out << "aligned " << corpus.size() << " segments; " << diag.oov_target_tokens
        << " out-of-vocabulary target tokens\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------- detect

struct Detect {
  Common common;
  DetectorFlags params;
  std::optional<std::string> input, out_path, alignments, model, oracle, qe_scores, calibration,
      qe_direction, method;
  std::optional<double> qe_threshold, p_min;
  std::optional<std::size_t> jobs;

  int run(std::ostream& out) const {
    const auto config = load_config(common.config);
    const auto in_path = require(resolve_optional(input, config, "input"), "--input");
    const auto dest = require(resolve_optional(out_path, config, "out"), "--out");
    const auto p = params.resolve(config);
    const auto n_jobs = std::max<std::size_t>(1, resolve(jobs, config, "jobs", std::size_t{1}));
    const auto pm = resolve(p_min, config, "p-min", kDefaultPMin);

    const auto align_file = resolve_optional(alignments, config, "alignments");
    const auto model_file = resolve_optional(model, config, "model");
    const auto oracle_file = resolve_optional(oracle, config, "oracle");
    const int sources = (align_file ? 1 : 0) + (model_file ? 1 : 0) + (oracle_file ? 1 : 0);
    if (sources > 1) {
      throw ValidationError("choose one aligner source: --alignments, --model or --oracle");
    }

    // QE threshold: explicit flag, else a calibration file.
    std::optional<double> threshold = resolve_optional(qe_threshold, config, "qe-threshold");
    ScoreDirection direction =
        parse_direction(resolve(qe_direction, config, "qe-direction", std::string("low")));
    if (const auto calib = resolve_optional(calibration, config, "calibration")) {
      std::ifstream in(*calib);
      if (!in) throw IoError("cannot open for reading", *calib);
      json j;
      try {
        j = json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed calibration: ") + e.what());
      }
      const auto c = calibration_from_json(j);
      if (!threshold) threshold = c.threshold;
      if (!qe_direction && !config.contains("qe-direction")) direction = c.direction;
    }

    Method run_method = threshold ? Method::Ensemble : Method::CheckAlign;
    if (const auto m = resolve_optional(method, config, "method")) {
      const auto parsed = method_from_string(*m);
      if (!parsed) throw ValidationError("--method must be checkalign, qe or ensemble");
      run_method = *parsed;
    }
    const bool use_qe = run_method != Method::CheckAlign;
    const bool use_align = run_method != Method::QE;
    if (use_qe && !threshold) {
      throw ValidationError("QE detection needs --qe-threshold or --calibration");
    }

    std::unordered_map<std::string, double> external_scores;
    if (const auto csv = resolve_optional(qe_scores, config, "qe-scores")) {
      for (auto& [id, s] : load_qe_csv(*csv)) external_scores[id] = s;
    }

    std::optional<TranslationModel> trained;
    if (use_align && model_file) trained = load_model(*model_file);
    std::ifstream align_stream;
    const auto pharaoh = align_file ? align_file : oracle_file;
    if (use_align && pharaoh) {
      align_stream.open(*pharaoh);
      if (!align_stream) throw IoError("cannot open for reading", *pharaoh);
    }

    std::string source_name = "embedded";
    if (align_file) source_name = "pharaoh";
    if (model_file) source_name = "model";
    if (oracle_file) source_name = "oracle";

    struct Item {
      SegmentPair seg;
      std::optional<Alignment> alignment;
      std::optional<double> score;
    };
    auto judge = [&](const Item& item) {
      std::optional<Verdict> ca, qe;
      if (use_align) {
        Alignment a;
        if (item.alignment) {
          a = *item.alignment;
        } else if (trained) {
          a = align_pair(*trained, tokenize(item.seg.src), tokenize(item.seg.tgt), pm);
        } else if (item.seg.alignment) {
          a = *item.seg.alignment;
        } else {
          throw ValidationError("segment '" + item.seg.id + "' has no alignment");
        }
        try {
          ca = checkalign_detect(item.seg, a, p);
        } catch (const BoundsError& e) {
          throw BoundsError("segment '" + item.seg.id + "': " + e.what());
        }
      }
      if (use_qe) {
        if (!item.score) throw ValidationError("segment '" + item.seg.id + "' has no QE score");
        qe = qe_detect(item.seg.id, *item.score, *threshold, direction);
      }
      if (ca && qe) return ensemble_or(*ca, *qe);
      return ca ? *ca : *qe;
    };

    JsonlReader reader(in_path);
    JsonlWriter writer(dest);
    std::size_t processed = 0, flagged = 0, align_line = 0;
    constexpr std::size_t kBatch = 512;
    std::vector<Item> batch;
    std::vector<std::optional<Verdict>> results;
    std::vector<std::string> errors;
    auto flush = [&] {
      results.assign(batch.size(), std::nullopt);
      errors.assign(batch.size(), std::string());
      auto work = [&](std::size_t worker) {
        for (std::size_t i = worker; i < batch.size(); i += n_jobs) {
          try {
            results[i] = judge(batch[i]);
          } catch (const std::exception& e) {
            errors[i] = e.what();
          }
        }
      };
      if (n_jobs == 1) {
        work(0);
      } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < n_jobs; ++w) threads.emplace_back(work, w);
        for (auto& t : threads) t.join();
      }
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (!errors[i].empty()) throw ValidationError(errors[i]);
        writer.write(to_json(*results[i]));
        ++processed;
        if (results[i]->flagged) ++flagged;
      }
      batch.clear();
    };

    while (auto seg = reader.next()) {
      Item item;
      if (use_align && pharaoh) {
        std::string line;
        if (!std::getline(align_stream, line)) {
          throw ValidationError("alignment file " + *pharaoh + " has fewer lines than the input");
        }
        ++align_line;
        try {
          item.alignment = parse_pharaoh(line);
        } catch (const ParseError& e) {
          throw ParseError(std::string(e.what()) + " in " + *pharaoh, align_line);
        }
      }
      if (use_qe) {
        if (auto it = external_scores.find(seg->id); it != external_scores.end()) {
          item.score = it->second;
        } else {
          item.score = seg->qe_score;
        }
      }
      item.seg = std::move(*seg);
      batch.push_back(std::move(item));
      if (batch.size() == kBatch) flush();
    }
    flush();
    writer.close();

    json resolved = {{"command", "detect"},
                     {"input", in_path},
                     {"out", dest},
                     {"method", std::string(to_string(run_method))},
                     {"aligner_source", use_align ? source_name : "none"},
                     {"params", to_json(p)},
                     {"jobs", n_jobs}};
    if (align_file) resolved["alignments"] = *align_file;
    if (model_file) resolved["model"] = *model_file, resolved["p-min"] = pm;
    if (oracle_file) resolved["oracle"] = *oracle_file;
    if (use_qe) {
      resolved["qe-threshold"] = *threshold;
      resolved["qe-direction"] = std::string(to_string(direction));
    }
    write_snapshot(resolved, dest);
    out << "processed " << processed << " segments, flagged " << flagged << '\n';
    return kExitOk;
  }
};

// ---------------------------------------------------------------- calibrate

struct Calibrate {
  Common common;
  std::optional<std::string> input, out_path, qe_scores, qe_direction;

  int run(std::ostream& out) const {
    const auto config = load_config(common.config);
    const auto in_path = require(resolve_optional(input, config, "input"), "--input");
    const auto dest = require(resolve_optional(out_path, config, "out"), "--out");
    const auto direction =
        parse_direction(resolve(qe_direction, config, "qe-direction", std::string("low")));

    std::unordered_map<std::string, double> external;
    if (const auto csv = resolve_optional(qe_scores, config, "qe-scores")) {
      for (auto& [id, s] : load_qe_csv(*csv)) external[id] = s;
    }
    const auto corpus = load_jsonl(in_path);
    std::vector<DevPoint> dev;
    for (const auto& seg : corpus.segments) {
      if (!seg.gold_label) continue;
      std::optional<double> score = seg.qe_score;
      if (auto it = external.find(seg.id); it != external.end()) score = it->second;
      if (!score) continue;
      dev.push_back({*score, is_overgeneration(*seg.gold_label)});
    }
    const auto result = calibrate_threshold(dev, direction);
    std::ofstream f(dest);
    if (!f) throw IoError("cannot open for writing", dest);
    f << to_json(result).dump(2) << '\n';
    if (!f) throw IoError("write failure", dest);
    write_snapshot({{"command", "calibrate"},
                    {"input", in_path},
                    {"out", dest},
                    {"qe-direction", std::string(to_string(direction))}},
                   dest);
    out << "threshold " << result.threshold << " F1 " << result.f1_at_threshold << " over "
        << result.support << " segments\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------- eval

struct Eval {
  Common common;
  std::optional<std::string> gold, verdicts, mode, format, out_path;

  int run(std::ostream& out) const {
    const auto config = load_config(common.config);
    const auto gold_path = require(resolve_optional(gold, config, "gold"), "--gold");
    const auto verdict_path = require(resolve_optional(verdicts, config, "verdicts"), "--verdicts");
    const auto mode_name = resolve(mode, config, "mode", std::string("binary"));
    EvalMode m;
    if (mode_name == "binary") m = EvalMode::Binary;
    else if (mode_name == "per-label" || mode_name == "per_label") m = EvalMode::PerLabel;
    else throw ValidationError("--mode must be binary or per-label");
    const auto format_name = resolve(format, config, "format", std::string("json"));
    ReportFormat fmt;
    if (format_name == "json") fmt = ReportFormat::JSON;
    else if (format_name == "table") fmt = ReportFormat::PlainTable;
    else throw ValidationError("--format must be json or table");

    const auto corpus = load_jsonl(gold_path);
    std::vector<Verdict> vs;
    {
      std::ifstream in(verdict_path);
      if (!in) throw IoError("cannot open for reading", verdict_path);
      std::string text;
      std::size_t line = 0;
      while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
          j = json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
          throw ParseError(std::string("malformed JSON: ") + e.what(), line);
        }
        vs.push_back(verdict_from_json(j, line));
      }
    }
    const auto report = evaluate_run(corpus, vs, m);
    const auto rendered = render_report(report, fmt);
    if (const auto dest = resolve_optional(out_path, config, "out")) {
      std::ofstream f(*dest);
      if (!f) throw IoError("cannot open for writing", *dest);
      f << rendered;
      if (!f) throw IoError("write failure", *dest);
      write_snapshot({{"command", "eval"},
                      {"gold", gold_path},
                      {"verdicts", verdict_path},
                      {"mode", std::string(to_string(m))},
                      {"format", format_name},
                      {"out", *dest}},
                     *dest);
    } else {
      out << rendered;
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------- synth

struct Synth {
  Common common;
  DetectorFlags params;
  std::optional<std::string> input, out_path, kind, templates, lexicon, manifest, oracle_out;
  std::optional<double> rate;
  std::optional<std::size_t> repeat_min, repeat_max;
  bool suffix = false;

  static InjectionSpec spec_from(const json& j, std::uint64_t default_seed) {
    InjectionSpec s;
    const auto k = injection_kind_from_string(j.value("kind", std::string("prefix")));
    if (!k) throw ValidationError("unknown injection kind");
    s.kind = *k;
    s.rate = j.value("rate", s.rate);
    s.seed = j.value("seed", default_seed);
    s.repeat_min = j.value("repeat-min", s.repeat_min);
    s.repeat_max = j.value("repeat-max", s.repeat_max);
    s.oscillation_suffix = j.value("suffix", false);
    const std::string default_templates = std::string(OVERGEN_DATA_DIR) + "/prefix_templates.txt";
    const std::string default_lexicon = std::string(OVERGEN_DATA_DIR) + "/confabulation_lexicon_it.txt";
    if (s.kind == InjectionKind::Prefix) {
      s.templates = load_lines(j.value("templates", default_templates));
    } else if (s.kind == InjectionKind::Confabulation) {
      s.insert_lexicon = load_lines(j.value("lexicon", default_lexicon));
    } else if (j.contains("lexicon")) {
      s.insert_lexicon = load_lines(j.at("lexicon").get<std::string>());
    }
    return s;
  }

  int run(std::ostream& out) const {
    const auto config = load_config(common.config);
    const auto in_path = require(resolve_optional(input, config, "input"), "--input");
    const auto dest = require(resolve_optional(out_path, config, "out"), "--out");
    const auto seed = resolve(common.seed, config, "seed", std::uint64_t{0});
    const auto p = params.resolve(config);

    std::vector<InjectionSpec> specs;
    json spec_log = json::array();
    if (auto it = config.find("specs"); it != config.end() && !kind) {
      for (const auto& j : *it) {
        specs.push_back(spec_from(j, seed));
        spec_log.push_back(j);
      }
    } else {
      json j = json::object();
      j["kind"] = resolve(kind, config, "kind", std::string("prefix"));
      j["rate"] = resolve(rate, config, "rate", 1.0);
      j["seed"] = seed;
      j["repeat-min"] = resolve(repeat_min, config, "repeat-min", std::size_t{10});
      j["repeat-max"] = resolve(repeat_max, config, "repeat-max", std::size_t{12});
      j["suffix"] = suffix || config.value("suffix", false);
      if (auto t = resolve_optional(templates, config, "templates")) j["templates"] = *t;
      if (auto l = resolve_optional(lexicon, config, "lexicon")) j["lexicon"] = *l;
      specs.push_back(spec_from(j, seed));
      spec_log.push_back(j);
    }

    const auto clean = load_jsonl(in_path);
    const auto synth = build_synthetic_corpus(clean, specs, p);
    const auto manifest_path = resolve(manifest, config, "manifest", dest + ".manifest.jsonl");
    const auto oracle_path = resolve(oracle_out, config, "oracle-out", dest + ".oracle.align");
    write_jsonl(synth.corpus, dest);
    {
      JsonlWriter w(manifest_path);
      for (const auto& e : synth.manifest) w.write(to_json(e));
      w.close();
    }
    write_pharaoh_file(synth.oracle_alignments, oracle_path);
    write_snapshot({{"command", "synth"},
                    {"input", in_path},
                    {"out", dest},
                    {"manifest", manifest_path},
                    {"oracle-out", oracle_path},
                    {"seed", seed},
                    {"params", to_json(p)},
                    {"specs", spec_log}},
                   dest);
    std::size_t injected = 0;
    for (const auto& e : synth.manifest) injected += e.skipped ? 0 : 1;
    out << "wrote " << synth.corpus.size() << " segments, " << injected << " injected\n";
    return kExitOk;
  }
};

}  // namespace detail

/// Runs one subcommand. Exit status: 0 success, 1 validation or usage
/// error, 2 I/O error.
inline int dispatch(const std::vector<std::string>& argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Detect, categorize and evaluate overgenerations in MT output", "overgen"};
  app.require_subcommand(1, 1);

  auto add_common = [](CLI::App* sub, detail::Common& c) {
    sub->add_option("--config", c.config, "JSON config; flags override its values");
  };

  detail::AlignTrain align_train;
  auto* at = app.add_subcommand("align-train", "train an IBM Model 1 aligner on a JSONL corpus");
  add_common(at, align_train.common);
  at->add_option("--input", align_train.input, "training corpus (JSONL)");
  at->add_option("--model", align_train.model, "output model file");
  at->add_option("--iterations", align_train.iterations, "EM iterations (default 10)");
  at->add_flag("--no-null", align_train.no_null, "train without the NULL source word");
  at->add_option("--seed", align_train.common.seed, "unused; accepted for uniformity");

  detail::Align align;
  auto* al = app.add_subcommand("align", "align a JSONL corpus with a trained model");
  add_common(al, align.common);
  al->add_option("--input", align.input, "corpus (JSONL)");
  al->add_option("--model", align.model, "model file from align-train");
  al->add_option("--out", align.out_path, "output Pharaoh file");
  al->add_option("--p-min", align.p_min, "minimum link probability (default 0.05)");
  al->add_option("--seed", align.common.seed, "unused; accepted for uniformity");

  detail::Detect detect;
  auto* de = app.add_subcommand("detect", "emit one verdict per segment");
  add_common(de, detect.common);
  de->add_option("--input", detect.input, "corpus (JSONL)");
  de->add_option("--out", detect.out_path, "verdicts (JSONL)");
  de->add_option("--alignments", detect.alignments, "Pharaoh file parallel to --input");
  de->add_option("--model", detect.model, "align on the fly with this model");
  de->add_option("--oracle", detect.oracle, "oracle Pharaoh file written by synth");
  de->add_option("--p-min", detect.p_min, "minimum link probability with --model");
  detect.params.add_to(de);
  de->add_option("--qe-threshold", detect.qe_threshold, "QE decision threshold");
  de->add_option("--qe-direction", detect.qe_direction, "low|high: which scores are overgenerations");
  de->add_option("--qe-scores", detect.qe_scores, "CSV of id,score overriding qe_score");
  de->add_option("--calibration", detect.calibration, "calibration JSON from calibrate");
  de->add_option("--method", detect.method, "checkalign|qe|ensemble");
  de->add_option("--jobs", detect.jobs, "worker threads");
  de->add_option("--seed", detect.common.seed, "unused; detection is deterministic");

  detail::Calibrate calibrate;
  auto* ca = app.add_subcommand("calibrate", "choose a QE threshold maximizing F1");
  add_common(ca, calibrate.common);
  ca->add_option("--input", calibrate.input, "labelled dev corpus (JSONL)");
  ca->add_option("--out", calibrate.out_path, "calibration JSON");
  ca->add_option("--qe-scores", calibrate.qe_scores, "CSV of id,score overriding qe_score");
  ca->add_option("--qe-direction", calibrate.qe_direction, "low|high");
  ca->add_option("--seed", calibrate.common.seed, "unused; calibration is deterministic");

  detail::Eval eval;
  auto* ev = app.add_subcommand("eval", "score verdicts against gold labels");
  add_common(ev, eval.common);
  ev->add_option("--gold", eval.gold, "gold corpus (JSONL)");
  ev->add_option("--input", eval.gold, "alias of --gold");
  ev->add_option("--verdicts", eval.verdicts, "verdicts (JSONL)");
  ev->add_option("--mode", eval.mode, "binary|per-label");
  ev->add_option("--format", eval.format, "json|table");
  ev->add_option("--out", eval.out_path, "write the report here instead of stdout");
  ev->add_option("--seed", eval.common.seed, "unused; evaluation is deterministic");

  detail::Synth synth;
  auto* sy = app.add_subcommand("synth", "inject labelled overgenerations into a clean corpus");
  add_common(sy, synth.common);
  sy->add_option("--input", synth.input, "clean corpus (JSONL)");
  sy->add_option("--out", synth.out_path, "synthetic corpus (JSONL)");
  sy->add_option("--kind", synth.kind, "prefix|confabulation|oscillation");
  sy->add_option("--templates", synth.templates, "prefix templates, one per line");
  sy->add_option("--lexicon", synth.lexicon, "confabulation inserts or oscillation tokens");
  sy->add_option("--rate", synth.rate, "fraction of segments perturbed");
  sy->add_option("--repeat-min", synth.repeat_min, "oscillation repeats, lower bound");
  sy->add_option("--repeat-max", synth.repeat_max, "oscillation repeats, upper bound");
  sy->add_flag("--suffix", synth.suffix, "append oscillation instead of replacing the target");
  sy->add_option("--manifest", synth.manifest, "manifest path (default <out>.manifest.jsonl)");
  sy->add_option("--oracle-out", synth.oracle_out, "oracle alignments (default <out>.oracle.align)");
  synth.params.add_to(sy);
  sy->add_option("--seed", synth.common.seed, "selection seed");

  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitValidation;
  }

  try {
    if (at->parsed()) return align_train.run(out);
    if (al->parsed()) return align.run(out);
    if (de->parsed()) return detect.run(out);
    if (ca->parsed()) return calibrate.run(out);
    if (ev->parsed()) return eval.run(out);
    if (sy->parsed()) return synth.run(out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  err << app.help();
  return kExitValidation;
}

}  // namespace overgen::cli
