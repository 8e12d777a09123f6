#include "finkg/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <iostream>
#include <map>
#include <thread>

#include <json.hpp>

#include "finkg/errors.hpp"
#include "finkg/io.hpp"
#include "finkg/reasoner.hpp"

namespace finkg {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Runs fn(i) for i in [0, n) on up to `workers` threads. fn must not throw.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
  };
  const auto extra = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  std::vector<std::jthread> threads;
  for (std::size_t k = 1; k < extra; ++k) threads.emplace_back(body);
  body();
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out.push_back('\n');
  }
  return out;
}

std::optional<Decimal> gold_exe_value(const FinDocument& doc) {
  if (doc.question.gold_exe_answer) return doc.question.gold_exe_answer;
  if (!doc.question.gold_program) return std::nullopt;
  try {
    return Decimal::from_double(execute_program(*doc.question.gold_program, doc.table));
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

std::string_view mode_name(AnswerMode mode) { return mode == AnswerMode::Vanilla ? "vanilla" : "kg"; }

AnswerMode parse_mode(std::string_view text) {
  if (text == "vanilla") return AnswerMode::Vanilla;
  if (text == "kg") return AnswerMode::Kg;
  throw ConfigError("mode must be vanilla or kg, got \"" + std::string(text) + "\"");
}

void PipelineConfig::validate() const {
  if (extractor != "llm" && extractor != "table") throw ConfigError("extractor must be llm or table");
  if (embedding_provider != "local" && embedding_provider != "remote") {
    throw ConfigError("embedding provider must be local or remote");
  }
  if (filter_mode != "topk" && filter_mode != "threshold") throw ConfigError("filter mode must be topk or threshold");
  if (!(judge_rules.rounding_rel_tol > 0.0 && judge_rules.rounding_rel_tol < 1.0)) {
    throw ConfigError("rounding tolerance must be within (0, 1)");
  }
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (embedding_dim < 16) throw ConfigError("embedding dimension must be >= 16");
}

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  cfg_.training.seed = cfg_.seed;
  cache_ = std::make_shared<ResponseCache>(cfg_.cache_dir.empty() ? std::nullopt
                                                                  : std::optional<std::filesystem::path>(cfg_.cache_dir));
  std::filesystem::create_directories(cfg_.output_dir);
}

std::size_t Pipeline::chat_network_calls() const {
  std::size_t n = chat_ ? chat_->network_calls() : 0;
  if (judge_) n += judge_->client().network_calls();
  return n;
}

std::filesystem::path Pipeline::split_path(const std::string& split) const {
  std::filesystem::path path;
  if (split == "train") {
    path = cfg_.train_path;
  } else if (split == "dev") {
    path = cfg_.dev_path;
  } else if (split == "test") {
    path = cfg_.test_path;
  } else {
    throw ConfigError("unknown split \"" + split + "\" (expected train, dev or test)");
  }
  if (path.empty()) throw ConfigError("no dataset path configured for split " + split);
  if (!std::filesystem::exists(path)) throw ConfigError("dataset file does not exist: " + path.string());
  return path;
}

std::vector<FinDocument> Pipeline::load_documents(const std::string& split) const {
  auto loaded = load_split(split_path(split));
  for (const auto& d : loaded.diagnostics) std::cerr << "[" << split << "] " << d << "\n";
  return std::move(loaded.documents);
}

std::filesystem::path Pipeline::require(const std::string& name, const std::string& producer) const {
  auto path = artifact(name);
  if (!std::filesystem::exists(path)) {
    throw MissingArtifact(path.string() + " not found; run `" + producer + "` first");
  }
  return path;
}

ChatClient& Pipeline::chat() {
  if (!chat_) chat_ = std::make_unique<ChatClient>(cfg_.chat, cache_, cfg_.max_in_flight);
  return *chat_;
}

EmbeddingProvider& Pipeline::embedder() {
  if (!embedder_) {
    std::shared_ptr<EmbeddingProvider> inner;
    if (cfg_.embedding_provider == "remote") {
      inner = std::make_shared<RemoteEmbeddingProvider>(cfg_.embeddings, cache_);
    } else {
      inner = std::make_shared<LocalEmbeddingProvider>(cfg_.embedding_dim);
    }
    embedder_ = std::make_shared<MemoizingEmbeddingProvider>(std::move(inner));
  }
  return *embedder_;
}

MlpModel Pipeline::load_model() {
  const auto path = require("retriever_model.json", "train-retriever");
  auto model = MlpModel::from_json(io::read_file(path));
  if (!model.provider_tag.empty() && model.provider_tag != embedder().tag()) {
    throw DimensionMismatch("model was trained on " + model.provider_tag + " features but the configured provider is " +
                            embedder().tag());
  }
  return model;
}

// ------------------------------------------------------------------ ingest

std::filesystem::path Pipeline::ingest(const std::string& split) {
  const auto docs = load_documents(split);
  std::vector<std::string> lines(docs.size());
  parallel_for(docs.size(), cfg_.max_in_flight, [&](std::size_t i) { lines[i] = assembled_document_line(docs[i]); });
  const auto out = artifact("documents_" + split + ".jsonl");
  io::write_file_atomic(out, join_lines(lines));
  return out;
}

// ----------------------------------------------------------------- extract

std::filesystem::path Pipeline::extract(const std::string& split) {
  require("documents_" + split + ".jsonl", "ingest --split " + split);
  const auto docs = load_documents(split);

  std::vector<ExtractionResult> results(docs.size());
  std::vector<std::string> failures(docs.size());
  if (cfg_.extractor == "table") {
    for (std::size_t i = 0; i < docs.size(); ++i) {
      results[i].doc_id = docs[i].id;
      results[i].triplets = extract_table_triplets(docs[i]);
    }
  } else {
    auto asset = PromptAsset::load(cfg_.prompt_asset);
    LlmExtractor extractor(chat(), std::move(asset), cfg_.extraction);
    parallel_for(docs.size(), cfg_.max_in_flight, [&](std::size_t i) {
      try {
        results[i] = extractor.extract(docs[i]);
      } catch (const std::exception& e) {
        results[i].doc_id = docs[i].id;
        failures[i] = e.what();
      }
    });
  }

  std::string triplets;
  std::string rejected;
  std::size_t n_triplets = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    triplets += serialize_triplets(results[i].triplets);
    n_triplets += results[i].triplets.size();
    for (const auto& r : results[i].rejected) {
      ordered_json j;
      j["doc_id"] = results[i].doc_id;
      j["fragment"] = r.fragment;
      j["violations"] = r.violations;
      rejected += j.dump() + "\n";
    }
    if (!failures[i].empty()) {
      std::cerr << "[extract] " << docs[i].id << ": " << failures[i] << "\n";
      ordered_json j;
      j["doc_id"] = results[i].doc_id;
      j["fragment"] = "";
      j["violations"] = {"LlmUnavailable: " + failures[i]};
      rejected += j.dump() + "\n";
    }
  }
  io::write_file_atomic(artifact("rejected_" + split + ".jsonl"), rejected);
  const auto out = artifact("triplets_" + split + ".jsonl");
  io::write_file_atomic(out, triplets);
  std::cerr << "[extract] " << split << ": " << n_triplets << " triplets from " << docs.size() << " documents\n";
  return out;
}

// -------------------------------------------------------------- retriever

std::filesystem::path Pipeline::train_retriever() {
  const auto triplet_path = require("triplets_train.jsonl", "extract --split train");
  const auto docs = load_documents("train");
  std::map<std::string, std::vector<Triplet>> by_doc;
  for (auto& t : parse_triplets_file(io::read_file(triplet_path))) by_doc[t.source_doc].push_back(std::move(t));

  std::vector<std::vector<LabeledTriplet>> labeled(docs.size());
  std::vector<std::vector<LabeledExample>> examples(docs.size());
  std::vector<std::string> errors(docs.size());
  auto& provider = embedder();
  parallel_for(docs.size(), cfg_.max_in_flight, [&](std::size_t i) {
    try {
      const auto it = by_doc.find(docs[i].id);
      if (it == by_doc.end()) return;
      labeled[i] = label_triplets(docs[i], it->second);
      for (const auto& lt : labeled[i]) {
        examples[i].push_back({build_features(docs[i].question, lt.triplet, provider).flatten(), lt.label});
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (const auto& e : errors) {
    if (!e.empty()) throw ProviderUnavailable("feature extraction failed: " + e);
  }

  std::vector<LabeledExample> data;
  std::string manifest;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (const auto& lt : labeled[i]) {
      ordered_json j;
      j["doc_id"] = docs[i].id;
      j["triplet_id"] = lt.triplet.triplet_id;
      j["label"] = lt.label;
      manifest += j.dump() + "\n";
    }
    for (auto& e : examples[i]) data.push_back(std::move(e));
  }
  io::write_file_atomic(artifact("training_manifest.jsonl"), manifest);

  auto train_cfg = cfg_.training;
  if (train_cfg.positive_weight <= 0.0) train_cfg.positive_weight = balanced_positive_weight(data);
  auto result = train(data, train_cfg);
  result.model.provider_tag = provider.tag();

  std::size_t positives = 0;
  for (const auto& e : data) positives += e.label == 1 ? 1 : 0;
  ordered_json log;
  log["examples"] = data.size();
  log["positives"] = positives;
  log["positive_weight"] = train_cfg.positive_weight;
  log["loss_history"] = result.loss_history;
  io::write_file_atomic(artifact("training_log.json"), log.dump(2) + "\n");

  const auto out = artifact("retriever_model.json");
  io::write_file_atomic(out, result.model.to_json() + "\n");
  return out;
}

// ------------------------------------------------------------------ answer

std::filesystem::path Pipeline::answer(const std::string& split, AnswerMode mode) {
  const auto docs = load_documents(split);

  std::map<std::string, std::string> texts;
  std::map<std::string, std::vector<Triplet>> by_doc;
  std::optional<MlpModel> model;
  if (mode == AnswerMode::Vanilla) {
    const auto path = require("documents_" + split + ".jsonl", "ingest --split " + split);
    for (const auto& line : io::split_lines(io::read_file(path))) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      texts[j.at("id").get<std::string>()] = j.at("text").get<std::string>();
    }
  } else {
    const auto path = require("triplets_" + split + ".jsonl", "extract --split " + split);
    for (auto& t : parse_triplets_file(io::read_file(path))) by_doc[t.source_doc].push_back(std::move(t));
    model = load_model();
  }

  auto& client = chat();
  auto& provider = embedder();
  std::vector<std::string> lines(docs.size());
  parallel_for(docs.size(), cfg_.max_in_flight, [&](std::size_t i) {
    const auto& doc = docs[i];
    ordered_json j;
    j["doc_id"] = doc.id;
    j["mode"] = mode_name(mode);
    j["question"] = doc.question.text;
    std::string prompt;
    json retrieved = json::array();
    std::string error;
    Answer answer;
    try {
      if (mode == AnswerMode::Vanilla) {
        const auto it = texts.find(doc.id);
        prompt = build_document_prompt(doc.question.text, it == texts.end() ? assemble_text(doc) : it->second);
      } else {
        static const std::vector<Triplet> kNone;
        const auto it = by_doc.find(doc.id);
        const auto& candidates = it == by_doc.end() ? kNone : it->second;
        auto selected = cfg_.filter_mode == "threshold"
                            ? filter_threshold(doc.question, candidates, *model, provider, cfg_.threshold)
                            : filter_topk(doc.question, candidates, *model, provider, cfg_.top_k);
        std::vector<Triplet> facts;
        for (auto& s : selected) {
          retrieved.push_back({{"triplet_id", s.triplet.triplet_id}, {"score", s.score}});
          facts.push_back(std::move(s.triplet));
        }
        prompt = build_reasoning_prompt(doc.question.text, facts);
      }
      answer = parse_answer(client.complete(prompt).content);
    } catch (const std::exception& e) {
      error = e.what();
    }
    j["answer"] = answer.answer_text;
    j["kind"] = answer_kind_name(answer.kind);
    j["marker_found"] = answer.marker_found;
    j["raw_text"] = answer.raw_text;
    j["retrieved"] = retrieved;
    j["prompt"] = prompt;
    j["error"] = error.empty() ? ordered_json(nullptr) : ordered_json(error);
    lines[i] = j.dump();
  });

  const auto out = artifact("predictions_" + split + "_" + std::string(mode_name(mode)) + ".jsonl");
  io::write_file_atomic(out, join_lines(lines));
  return out;
}

// ---------------------------------------------------------------- evaluate

EvalSummary Pipeline::evaluate(const std::string& split, AnswerMode mode,
                               const std::optional<std::filesystem::path>& predictions) {
  const auto tag = split + "_" + std::string(mode_name(mode));
  const auto pred_path =
      predictions ? *predictions : require("predictions_" + tag + ".jsonl", "answer --split " + split + " --mode " +
                                                                                std::string(mode_name(mode)));
  if (!std::filesystem::exists(pred_path)) throw MissingArtifact(pred_path.string() + " not found; run `answer` first");
  const auto docs = load_documents(split);
  std::map<std::string, const FinDocument*> by_id;
  for (const auto& d : docs) by_id[d.id] = &d;

  std::vector<EvalInput> inputs;
  for (const auto& line : io::split_lines(io::read_file(pred_path))) {
    if (line.empty()) continue;
    const auto j = json::parse(line);
    const auto id = j.at("doc_id").get<std::string>();
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw ParseError("prediction for unknown document " + id);
    EvalInput in;
    in.doc_id = id;
    in.predicted = parse_answer(j.value("raw_text", ""));
    in.prediction_failed = j.contains("error") && !j["error"].is_null();
    in.gold = it->second->question.gold_answer;
    in.gold_exe = gold_exe_value(*it->second);
    inputs.push_back(std::move(in));
  }

  if (!judge_ && !cfg_.judge.endpoint.empty()) judge_ = std::make_unique<LlmJudge>(cfg_.judge, cache_);
  auto summary = evaluate_split(inputs, cfg_.judge_rules, judge_.get());

  io::write_file_atomic(artifact("verdicts_" + tag + ".jsonl"), verdicts_jsonl(summary));
  ordered_json acc;
  acc["split"] = split;
  acc["mode"] = mode_name(mode);
  acc["n"] = summary.records.size();
  acc["correct"] = summary.correct;
  acc["accuracy"] = summary.accuracy;
  acc["accuracy_pct"] = summary.accuracy * 100.0;
  io::write_file_atomic(artifact("accuracy_" + tag + ".json"), acc.dump(2) + "\n");
  return summary;
}

// ------------------------------------------------------------------ report

std::string Pipeline::report(const std::string& baseline, const std::string& treatment) {
  auto accuracy = [](const std::string& arg) -> double {
    if (auto d = Decimal::parse(arg)) return d->to_double();
    if (!std::filesystem::exists(arg)) {
      throw MissingArtifact(arg + " is neither a percentage nor an existing accuracy file; run `evaluate` first");
    }
    const auto j = json::parse(io::read_file(arg));
    return j.at("accuracy_pct").get<double>();
  };
  const auto text = format_report(accuracy(baseline), accuracy(treatment));
  io::write_file_atomic(artifact("report.md"), text);
  return text;
}

}  // namespace finkg
