#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "finkg/io.hpp"
#include "fixture_llm.hpp"

namespace fs = std::filesystem;
using namespace finkg;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "finkg_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const auto cmd = std::string(FINKG_CLI_PATH) + " --config " + (dir_ / "run.toml").string() + " " + args + " > " +
                     (dir_ / "stdout.txt").string() + " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  void write_config(const std::string& endpoint) const {
    std::ofstream(dir_ / "run.toml") << "train = \"" << mock::fixture_path() << "\"\n"
                                     << "test = \"" << mock::fixture_path() << "\"\n"
                                     << "output-dir = \"" << (dir_ / "out").string() << "\"\n"
                                     << "endpoint = \"" << endpoint << "\"\n"
                                     << "embedding-dim = 32\n"
                                     << "epochs = 10\n"
                                     << "top-k = 3\n";
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, FullRunThroughCommands) {
  mock::MockLlmServer server(mock::corpus_handler(load_split(mock::fixture_path()).documents));
  write_config(server.endpoint());
  ASSERT_EQ(run("ingest --split train"), 0);
  ASSERT_EQ(run("ingest --split test"), 0);
  ASSERT_EQ(run("extract --split train"), 0);
  ASSERT_EQ(run("extract --split test"), 0);
  ASSERT_EQ(run("train-retriever"), 0);
  ASSERT_EQ(run("answer --split test --mode kg"), 0);
  ASSERT_EQ(run("evaluate --split test --mode kg"), 0);
  EXPECT_NE(io::read_file(dir_ / "stdout.txt").find("accuracy 100.00%"), std::string::npos);
  ASSERT_EQ(run("report --baseline 51.93 --treatment " + (dir_ / "out" / "accuracy_test_kg.json").string()), 0);
  EXPECT_NE(io::read_file(dir_ / "stdout.txt").find("Llama + KG"), std::string::npos);

  // A flag overrides the config file.
  ASSERT_EQ(run("train-retriever --embedding-dim 16"), 0);
  const auto model = nlohmann::json::parse(io::read_file(dir_ / "out" / "retriever_model.json"));
  EXPECT_EQ(model.at("input_dim"), 2 * 16 + 6);
}

TEST_F(CliTest, ErrorsAndExitCodes) {
  write_config("http://127.0.0.1:1/v1");
  EXPECT_EQ(run("answer --split test --mode kg"), 1);
  EXPECT_NE(io::read_file(dir_ / "stderr.txt").find("run `extract --split test` first"), std::string::npos);
  EXPECT_EQ(run("answer --split dev --mode kg"), 2);  // no dev path configured
  EXPECT_NE(run("answer --mode both"), 0);
  std::ofstream(dir_ / "run.toml", std::ios::app) << "no-such-key = 1\n";
  EXPECT_NE(run("ingest --split test"), 0);
}
