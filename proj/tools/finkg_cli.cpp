// finkg: command-line driver for the extraction / retrieval / QA pipeline.
//
//   finkg [global options] <ingest|extract|train-retriever|answer|evaluate|report> [options]
//
// Global options may also come from a TOML file given with --config; flags
// on the command line win. API keys are read only from the environment
// variable named by --api-key-env.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "finkg/errors.hpp"
#include "finkg/pipeline.hpp"

namespace {

void add_llm_options(CLI::App& app, finkg::LlmConfig& cfg, const std::string& prefix, const std::string& what) {
  app.add_option("--" + prefix + "endpoint", cfg.endpoint, what + " base URL (OpenAI-compatible)");
  app.add_option("--" + prefix + "model", cfg.model_name, what + " name");
}

}  // namespace

int main(int argc, char** argv) {
  finkg::PipelineConfig cfg;
  cfg.judge.temperature = 0.0;

  CLI::App app{"Financial knowledge-graph extraction and question answering"};
  app.set_config("--config", "", "TOML file with default option values");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  app.add_option("--train", cfg.train_path, "Training split (FinQA JSON)");
  app.add_option("--dev", cfg.dev_path, "Development split (FinQA JSON)");
  app.add_option("--test", cfg.test_path, "Test split (FinQA JSON)");
  app.add_option("--output-dir", cfg.output_dir, "Artifact directory")->capture_default_str();
  app.add_option("--cache-dir", cfg.cache_dir, "Persistent LLM/embedding response cache");
  app.add_option("--seed", cfg.seed, "Seed for retriever training")->capture_default_str();
  app.add_option("--max-in-flight", cfg.max_in_flight, "Concurrent LLM requests")->capture_default_str();

  add_llm_options(app, cfg.chat, "", "Chat model");
  app.add_option("--temperature", cfg.chat.temperature)->capture_default_str();
  app.add_option("--max-tokens", cfg.chat.max_tokens)->capture_default_str();
  app.add_option("--api-key-env", cfg.chat.api_key_env, "Environment variable holding the API key")
      ->capture_default_str();
  app.add_option("--max-retries", cfg.chat.max_retries)->capture_default_str();
  int timeout_ms = static_cast<int>(cfg.chat.timeout.count());
  app.add_option("--timeout-ms", timeout_ms, "Per-request timeout")->capture_default_str();

  app.add_option("--extractor", cfg.extractor, "llm or table")
      ->check(CLI::IsMember({"llm", "table"}))
      ->capture_default_str();
  app.add_option("--prompt-asset", cfg.prompt_asset, "Extraction prompt JSON")->capture_default_str();
  app.add_option("--chunk-budget", cfg.extraction.chunk_budget_chars, "Characters per extraction chunk")
      ->capture_default_str();

  app.add_option("--embedding-provider", cfg.embedding_provider, "local or remote")
      ->check(CLI::IsMember({"local", "remote"}))
      ->capture_default_str();
  app.add_option("--embedding-dim", cfg.embedding_dim, "Dimension of the local embedding")->capture_default_str();
  add_llm_options(app, cfg.embeddings, "embedding-", "Remote embedding model");

  add_llm_options(app, cfg.judge, "judge-", "LLM judge model");
  app.add_option("--rounding-tol", cfg.judge_rules.rounding_rel_tol, "Relative tolerance of the rules judge")
      ->capture_default_str();

  app.add_option("--lr", cfg.training.learning_rate)->capture_default_str();
  app.add_option("--epochs", cfg.training.epochs)->capture_default_str();
  app.add_option("--batch-size", cfg.training.batch_size)->capture_default_str();
  app.add_option("--hidden-size", cfg.training.hidden_size)->capture_default_str();
  double positive_weight = 0.0;
  app.add_option("--positive-weight", positive_weight, "BCE positive-class weight; 0 means #neg/#pos")
      ->capture_default_str();
  app.add_option("--filter-mode", cfg.filter_mode, "topk or threshold")
      ->check(CLI::IsMember({"topk", "threshold"}))
      ->capture_default_str();
  app.add_option("--top-k", cfg.top_k)->capture_default_str();
  app.add_option("--threshold", cfg.threshold)->capture_default_str();

  std::string split = "dev";
  std::string mode = "kg";
  std::string predictions;
  std::string baseline;
  std::string treatment;
  auto split_option = [&](CLI::App* sub) {
    sub->add_option("--split", split, "train, dev or test")
        ->check(CLI::IsMember({"train", "dev", "test"}))
        ->capture_default_str();
  };
  auto mode_option = [&](CLI::App* sub) {
    sub->add_option("--mode", mode, "vanilla or kg")->check(CLI::IsMember({"vanilla", "kg"}))->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "Linearize tables and assemble document text");
  split_option(ingest);
  auto* extract = app.add_subcommand("extract", "Extract validated triplets");
  split_option(extract);
  auto* train = app.add_subcommand("train-retriever", "Label train triplets and fit the relevance MLP");
  auto* answer = app.add_subcommand("answer", "Answer questions from the document or retrieved facts");
  split_option(answer);
  mode_option(answer);
  auto* evaluate = app.add_subcommand("evaluate", "Judge predictions against gold answers");
  split_option(evaluate);
  mode_option(evaluate);
  evaluate->add_option("--predictions", predictions, "Predictions file (default: the answer artifact)");
  auto* report = app.add_subcommand("report", "Compare two runs");
  report->add_option("--baseline", baseline, "Accuracy in percent or accuracy JSON file")->required();
  report->add_option("--treatment", treatment, "Accuracy in percent or accuracy JSON file")->required();
  for (auto* sub : {ingest, extract, train, answer, evaluate, report}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  cfg.chat.timeout = std::chrono::milliseconds(timeout_ms);
  for (auto* other : {&cfg.embeddings, &cfg.judge}) {
    other->api_key_env = cfg.chat.api_key_env;
    other->max_retries = cfg.chat.max_retries;
    other->timeout = cfg.chat.timeout;
  }
  if (cfg.embeddings.endpoint.empty()) cfg.embeddings.endpoint = cfg.chat.endpoint;
  cfg.training.positive_weight = positive_weight;

  try {
    finkg::Pipeline pipeline(cfg);
    if (*ingest) {
      std::cout << pipeline.ingest(split).string() << "\n";
    } else if (*extract) {
      std::cout << pipeline.extract(split).string() << "\n";
    } else if (*train) {
      std::cout << pipeline.train_retriever().string() << "\n";
    } else if (*answer) {
      std::cout << pipeline.answer(split, finkg::parse_mode(mode)).string() << "\n";
    } else if (*evaluate) {
      std::optional<std::filesystem::path> pred;
      if (!predictions.empty()) pred = predictions;
      const auto summary = pipeline.evaluate(split, finkg::parse_mode(mode), pred);
      std::printf("%s/%s: %zu/%zu correct, accuracy %.2f%%\n", split.c_str(), mode.c_str(), summary.correct,
                  summary.records.size(), summary.accuracy * 100.0);
    } else if (*report) {
      std::cout << pipeline.report(baseline, treatment);
    }
  } catch (const finkg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const finkg::Error& e) {
    std::cerr << e.kind() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
