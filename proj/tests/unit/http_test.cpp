#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "factalign/analytics.hpp"
#include "factalign/matching.hpp"
#include "factalign/service.hpp"
#include "fixtures.hpp"
#include "http_harness.hpp"
#include "workspace_fixture.hpp"

using namespace factalign;
using nlohmann::json;

namespace {

class HttpApi : public ::testing::Test {
 protected:
  HttpApi() {
    ServiceConfig config;
    config.workspace = dir_.path() / "ws";
    bench_ = std::make_unique<service::Workbench>(config, std::make_unique<FallbackEmbedder>());
    fixtures::seed_workspace(bench_->workspace());
    server_ = std::make_unique<fixtures::RunningServer>(*bench_);
  }

  httplib::Result post(const std::string& path, const json& body) {
    auto c = server_->client();
    return c.Post(path, body.dump(), "application/json");
  }
  httplib::Result get(const std::string& path) {
    auto c = server_->client();
    return c.Get(path);
  }

  fixtures::TempDir dir_;
  std::unique_ptr<service::Workbench> bench_;
  std::unique_ptr<fixtures::RunningServer> server_;
};

}  // namespace

TEST_F(HttpApi, Health) {
  const auto res = get("/health");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["status"], "ok");
}

TEST_F(HttpApi, MatchIdenticalAnnotations) {
  const auto res = post("/match", {{"annotation_a", "d1.alice.g2"}, {"annotation_b", "d1.bob.g2"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["iaa"], 1.0);
}

TEST_F(HttpApi, MatchBodyEqualsLibraryJson) {
  FallbackEmbedder provider;
  Embedder embedder(provider);
  const auto a = bench_->workspace().require<Annotation>("d1.alice.g1");
  const auto b = bench_->workspace().require<Annotation>("d1.llm.g1");
  const auto res = post("/match", {{"annotation_a", a.id}, {"annotation_b", b.id}, {"threshold", 0.5}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->body, json(match_annotations(a, b, embedder, 0.5)).dump(2));
}

TEST_F(HttpApi, UnknownAnnotationIs404) {
  const auto res = post("/match", {{"annotation_a", "d1.alice.g1"}, {"annotation_b", "ghost"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["error"], "NotFound");
}

TEST_F(HttpApi, BadRequestsAre400) {
  auto c = server_->client();
  auto res = c.Post("/match", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = c.Post("/match", R"({"annotation_a": "x"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = c.Get("/heatmap");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = c.Post("/match", json{{"annotation_a", "d1.alice.g1"}, {"annotation_b", "d1.bob.g1"}, {"threshold", 3}}.dump(),
               "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(HttpApi, HeatmapMatchesLibrary) {
  const auto res = get("/heatmap?document=d1&round=r1");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  FallbackEmbedder provider;
  Embedder embedder(provider);
  std::vector<Annotation> anns;
  for (auto& a : bench_->workspace().list_round_annotations("r1")) {
    if (a.document_id == "d1") anns.push_back(a);
  }
  ASSERT_EQ(anns.size(), 3u);
  EXPECT_EQ(res->body, json(iaa_matrix(anns, embedder, kDefaultThreshold)).dump(2));
  const auto missing = get("/heatmap?document=d1&round=r9");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body)["error"], "UnknownRound");
}

TEST_F(HttpApi, RecordCrud) {
  auto c = server_->client();
  auto res = c.Put("/documents/d3", R"({"text": "Bob visits Anna.", "language": "en"})", "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["id"], "d3");

  res = c.Get("/documents/d3");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["text"], "Bob visits Anna.");
  res = c.Get("/documents");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body).size(), 3u);
  res = c.Get("/documents/none");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  res = c.Put("/documents/d4", R"({"id": "other", "text": "x"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  res = c.Put("/annotations/bad",
              R"({"document_id": "ghost", "annotator_id": "alice", "guideline_version_id": "g1",
                  "facts": [], "created_at": "2024-01-01T00:00:00Z"})",
              "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(json::parse(res->body)["error"], "IntegrityViolation");
}

TEST_F(HttpApi, AnalyticsEndpointsRespond) {
  for (const std::string path : {"/histogram", "/histogram?round=r2", "/convergence", "/coverage?annotation=d1.alice.g1",
                                 "/redundancy?annotation=d1.alice.g1", "/graphs/source?document=d2",
                                 "/graphs/facts?annotation=d2.bob.g1", "/graphs/highlights?annotation=d2.bob.g1"}) {
    const auto res = get(path);
    ASSERT_TRUE(res) << path;
    EXPECT_EQ(res->status, 200) << path << ": " << res->body;
  }
  for (const auto& [path, body] : std::vector<std::pair<std::string, json>>{
           {"/graphs/diff", {{"document", "d2"}, {"annotation", "d2.bob.g1"}}},
           {"/branching/parse", {{"sentence", "You need A and B."}}},
           {"/calibrate", {{"grid_step", 0.05}}},
           {"/consensus", {{"round", "r1"}}}}) {
    const auto res = post(path, body);
    ASSERT_TRUE(res) << path;
    EXPECT_EQ(res->status, 200) << path << ": " << res->body;
  }
}

TEST_F(HttpApi, ImportIsIdempotentButTriplesStayUnique) {
  json batch = {{"annotator_id", "llm"},
                {"guideline_version_id", "g2"},
                {"annotations", {{{"document_id", "d2"}, {"facts", {"Anna meets Bob"}}}}}};
  auto res = post("/annotations/import", batch);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  res = post("/annotations/import", batch);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  batch["annotations"][0]["id"] = "second-copy";
  res = post("/annotations/import", batch);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
}

TEST_F(HttpApi, ConcurrentReadsAgree) {
  const auto expected = get("/heatmap?document=d1&round=r1");
  ASSERT_TRUE(expected);
  std::atomic<int> mismatches{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      auto c = server_->client();
      for (int i = 0; i < 10; ++i) {
        const auto r = c.Get("/heatmap?document=d1&round=r1");
        if (!r || r->body != expected->body) ++mismatches;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(mismatches.load(), 0);
}

namespace {

// Mock remote embedding service; the vector is the fallback embedding so
// results are comparable.
class MockEmbedServer {
 public:
  explicit MockEmbedServer(int status) {
    server_.Post("/v1/embed", [status](const httplib::Request& req, httplib::Response& res) {
      if (status != 200) {
        res.status = status;
        return;
      }
      json vectors = json::array();
      const auto request = json::parse(req.body);
      for (const auto& t : request.at("texts")) {
        const auto v = fallback_embed(t.get<std::string>(), 64);
        vectors.push_back(std::vector<double>(v.values().begin(), v.values().end()));
      }
      res.set_content(json{{"vectors", vectors}}.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    while (!server_.is_running()) std::this_thread::yield();
  }
  ~MockEmbedServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(HttpProvider, RemoteVectorsFlowThroughEmbedder) {
  MockEmbedServer mock(200);
  HttpEmbeddingProvider provider({mock.url(), "mock", 64, std::chrono::milliseconds(5000), 2});
  Embedder embedder(provider);
  const std::vector<std::string> texts = {"pay the fee", "bring a passport"};
  const auto vectors = embedder.embed(texts);
  ASSERT_EQ(vectors.size(), 2u);
  EXPECT_NEAR(cosine_similarity(vectors[0], fallback_embed("pay the fee", 64)), 1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(vectors[1], fallback_embed("bring a passport", 64)), 1.0, 1e-12);
}

TEST(HttpProvider, ServerErrorIsProviderUnavailable) {
  MockEmbedServer mock(503);
  HttpEmbeddingProvider provider({mock.url(), "mock", 64, std::chrono::milliseconds(5000), 2});
  const std::vector<std::string> texts = {"pay the fee"};
  EXPECT_ERROR_KIND(provider.compute(texts), ErrorKind::ProviderUnavailable);
}

TEST(HttpProvider, UnavailableProviderMapsTo502) {
  fixtures::TempDir dir;
  ServiceConfig config;
  config.workspace = dir.path();
  config.provider = "http";
  config.provider_url = "http://127.0.0.1:1";
  config.provider_timeout = std::chrono::milliseconds(500);
  service::Workbench bench(config);
  fixtures::seed_workspace(bench.workspace());
  fixtures::RunningServer server(bench);
  auto c = server.client();
  const auto res = c.Post("/match", R"({"annotation_a": "d1.alice.g1", "annotation_b": "d1.bob.g1"})",
                          "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 502);
  EXPECT_EQ(json::parse(res->body)["error"], "ProviderUnavailable");
}
