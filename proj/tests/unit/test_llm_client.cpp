#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "finkg/errors.hpp"
#include "finkg/llm_client.hpp"
#include "mock_llm_server.hpp"

using namespace finkg;

namespace {

LlmConfig config_for(const mock::MockLlmServer& server) {
  LlmConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.backoff_base = std::chrono::milliseconds(1);
  cfg.api_key_env = "FINKG_TEST_UNSET_KEY";
  return cfg;
}

}  // namespace

TEST(ChatClient, RetriesServerErrors) {
  mock::MockLlmServer server(mock::scripted_handler({}, "ANSWER: 1"));
  server.fail_next(2, 500);
  ChatClient client(config_for(server));
  const auto reply = client.complete("hello");
  EXPECT_EQ(reply.content, "ANSWER: 1");
  EXPECT_FALSE(reply.from_cache);
  EXPECT_EQ(server.chat_requests(), 3u);
  EXPECT_EQ(client.network_calls(), 3u);
}

TEST(ChatClient, RetriesRateLimitThenGivesUp) {
  mock::MockLlmServer server;
  server.fail_next(10, 429);
  auto cfg = config_for(server);
  cfg.max_retries = 2;
  ChatClient client(cfg);
  EXPECT_THROW(client.complete("x"), LlmUnavailable);
  EXPECT_EQ(server.chat_requests(), 3u);
}

TEST(ChatClient, ClientErrorsAreNotRetried) {
  mock::MockLlmServer server;
  server.fail_next(1, 400);
  ChatClient client(config_for(server));
  EXPECT_THROW(client.complete("x"), LlmUnavailable);
  EXPECT_EQ(server.chat_requests(), 1u);
}

TEST(ChatClient, UnreachableEndpoint) {
  LlmConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1";
  cfg.max_retries = 1;
  cfg.backoff_base = std::chrono::milliseconds(1);
  ChatClient client(cfg);
  EXPECT_THROW(client.complete("x"), LlmUnavailable);
  EXPECT_EQ(client.network_calls(), 2u);
  LlmConfig none;
  EXPECT_THROW(ChatClient(none).complete("x"), LlmUnavailable);
}

TEST(ChatClient, WireFormat) {
  mock::MockLlmServer server;
  auto cfg = config_for(server);
  cfg.api_key_env = "FINKG_TEST_KEY";
  ::setenv("FINKG_TEST_KEY", "sk-test", 1);
  ChatClient client(cfg);
  client.complete("what is 2+2?");
  ::unsetenv("FINKG_TEST_KEY");
  ChatClient(config_for(server)).complete("no key");

  const auto bodies = server.chat_bodies();
  ASSERT_EQ(bodies.size(), 2u);
  EXPECT_EQ(bodies[0].at("model"), "meta-llama/Llama-3.1-8B-Instruct");
  EXPECT_DOUBLE_EQ(bodies[0].at("temperature").get<double>(), 0.2);
  EXPECT_EQ(bodies[0].at("max_tokens"), 2048);
  EXPECT_EQ(bodies[0].at("messages")[0].at("role"), "user");
  EXPECT_EQ(bodies[0].at("messages")[0].at("content"), "what is 2+2?");
  const auto auth = server.authorization_headers();
  EXPECT_EQ(auth[0], "Bearer sk-test");
  EXPECT_EQ(auth[1], "");
}

TEST(ChatClient, CachesInMemoryAndOnDisk) {
  const auto dir = std::filesystem::temp_directory_path() / "finkg_cache_test";
  std::filesystem::remove_all(dir);
  mock::MockLlmServer server(mock::scripted_handler({}, "cached reply"));
  {
    ChatClient client(config_for(server), std::make_shared<ResponseCache>(dir));
    EXPECT_FALSE(client.complete("p").from_cache);
    EXPECT_TRUE(client.complete("p").from_cache);
    EXPECT_EQ(client.network_calls(), 1u);
  }
  ChatClient fresh(config_for(server), std::make_shared<ResponseCache>(dir));
  const auto reply = fresh.complete("p");
  EXPECT_TRUE(reply.from_cache);
  EXPECT_EQ(reply.content, "cached reply");
  EXPECT_EQ(fresh.network_calls(), 0u);
  EXPECT_EQ(server.chat_requests(), 1u);

  auto other = config_for(server);
  other.temperature = 0.0;
  EXPECT_FALSE(ChatClient(other, std::make_shared<ResponseCache>(dir)).complete("p").from_cache);
  std::filesystem::remove_all(dir);
}

TEST(ChatClient, TruncatedRepliesAreNotCached) {
  mock::MockLlmServer server([](const std::string&) { return mock::MockReply{200, "[{\"subj", "length"}; });
  ChatClient client(config_for(server));
  EXPECT_THROW(client.complete("p"), LlmTruncated);
  EXPECT_THROW(client.complete("p"), LlmTruncated);
  EXPECT_EQ(server.chat_requests(), 2u);
}

TEST(ChatClient, BoundsRequestsInFlight) {
  std::atomic<int> current{0};
  std::atomic<int> peak{0};
  mock::MockLlmServer server([&](const std::string&) {
    const int now = ++current;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --current;
    return mock::MockReply{200, "ok", "stop"};
  });
  ChatClient client(config_for(server), nullptr, 2);
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { client.complete("p" + std::to_string(i)); });
  for (auto& t : threads) t.join();
  EXPECT_LE(peak.load(), 2);
  EXPECT_EQ(server.chat_requests(), 8u);
}

TEST(LlmConfig, Validation) {
  LlmConfig cfg;
  cfg.temperature = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.max_tokens = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
