#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "attrib/embedding.hpp"
#include "attrib/sha256.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"

using namespace attrib;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double norm_of(const EmbeddingVector& v) { return l2_norm(v.values); }

fs::path fresh_temp_dir(const char* tag) {
    fs::path p = fs::temp_directory_path() /
                 (std::string("attrib_emb_") + tag + "_" +
                  std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("sha256 matches published test vectors") {
    CHECK(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("normalize_embedding scales to unit length") {
    auto v = normalize_embedding({3.0, 4.0});
    CHECK(v.values[0] == doctest::Approx(0.6));
    CHECK(v.values[1] == doctest::Approx(0.8));
    CHECK(!v.degenerate);

    auto z = normalize_embedding({0.0, 0.0, 0.0});
    CHECK(z.degenerate);
    CHECK(z.values[0] == 1.0);
    CHECK(z.values[1] == 0.0);
    CHECK(norm_of(z) == doctest::Approx(1.0));

    CHECK_THROWS_AS(normalize_embedding({}), FatalError);
    CHECK_THROWS_AS(normalize_embedding({1.0, std::nan("")}), FatalError);
}

TEST_CASE("cosine distance basics") {
    EmbeddingVector a = normalize_embedding({1.0, 0.0});
    EmbeddingVector b = normalize_embedding({0.0, 1.0});
    EmbeddingVector c = normalize_embedding({-1.0, 0.0});
    CHECK(cosine_distance(a, a) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(cosine_distance(a, b) == doctest::Approx(1.0));
    CHECK(cosine_distance(a, c) == doctest::Approx(2.0));
    CHECK(cosine_distance(a, b) == cosine_distance(b, a));

    EmbeddingVector d3 = normalize_embedding({1.0, 0.0, 0.0});
    CHECK_THROWS_AS(cosine_distance(a, d3), FatalError);
}

TEST_CASE("builtin provider is deterministic and unit length") {
    BuiltinHashProvider p;
    CHECK(p.dimension() == 512);
    CHECK(p.identity() == "builtin-hash-v1");

    auto v1 = p.embed("The mitochondria is the powerhouse of the cell.");
    auto v2 = p.embed("The mitochondria is the powerhouse of the cell.");
    CHECK(v1.dim() == 512);
    CHECK(std::abs(norm_of(v1) - 1.0) <= 1e-9);
    CHECK(v1.values == v2.values);

    auto other = p.embed("Entirely different content appears here.");
    CHECK(cosine_distance(v1, other) > 0.1);
    CHECK(cosine_distance(v1, v1) <= 1e-9);
}

TEST_CASE("builtin provider canonicalizes case and whitespace") {
    BuiltinHashProvider p;
    auto a = p.embed("Hello  World");
    auto b = p.embed("hello world");
    auto c = p.embed("  hello\tworld \n");
    CHECK(a.values == b.values);
    CHECK(a.values == c.values);

    auto spaced = p.embed("hello world again");
    CHECK(cosine_distance(a, spaced) > 0.0);
}

TEST_CASE("builtin provider flags degenerate inputs") {
    BuiltinHashProvider p;
    auto empty = p.embed("");
    CHECK(empty.degenerate);
    CHECK(empty.values[0] == 1.0);

    auto tiny = p.embed("ab");  // shorter than the smallest n-gram
    CHECK(tiny.degenerate);

    auto ok = p.embed("abc");
    CHECK(!ok.degenerate);
    CHECK(cosine_distance(empty, ok) >= 0.0);
}

TEST_CASE("builtin provider separates disjoint alphabets") {
    BuiltinHashProvider p;
    auto a = p.embed("baba dada baba gaga");
    auto b = p.embed("kiki riri kiki sisi");
    CHECK(cosine_distance(a, b) > 0.8);

    auto a2 = p.embed("baba dada gaga baba");
    CHECK(cosine_distance(a, a2) < 0.5);
}

TEST_CASE("batch embed matches single embed") {
    BuiltinHashProvider p;
    std::vector<std::string> texts = {"one fine day", "two fine days",
                                      "three fine days"};
    auto batch = p.embed_batch(texts);
    REQUIRE(batch.size() == 3);
    for (std::size_t i = 0; i < texts.size(); ++i)
        CHECK(batch[i].values == p.embed(texts[i]).values);
}

namespace {

struct TestServer {
    httplib::Server svr;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};

    explicit TestServer(int dim = 4) {
        svr.Post("/embed", [this, dim](const httplib::Request& req,
                                       httplib::Response& res) {
            hits++;
            json body = json::parse(req.body);
            json vectors = json::array();
            for (const auto& t : body["texts"]) {
                std::string s = t.get<std::string>();
                std::vector<double> v(dim, 0.0);
                v[0] = 1.0 + static_cast<double>(s.size());
                for (std::size_t i = 0; i < s.size(); ++i)
                    v[1 + i % (dim - 1)] += static_cast<double>(
                        static_cast<unsigned char>(s[i]));
                vectors.push_back(v);
            }
            json out;
            out["vectors"] = vectors;
            res.set_content(out.dump(), "application/json");
        });
        port = svr.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { svr.listen_after_bind(); });
        svr.wait_until_ready();
    }

    ~TestServer() {
        svr.stop();
        if (thread.joinable()) thread.join();
    }
};

}  // namespace

TEST_CASE("external provider round trip with caching") {
    fs::path cache = fresh_temp_dir("cache");
    std::vector<EmbeddingVector> first;
    int port = 0;
    {
        TestServer server;
        port = server.port;
        ExternalServiceConfig cfg;
        cfg.port = server.port;
        cfg.identity = "test-svc-v1";
        cfg.cache_dir = cache.string();
        ExternalServiceProvider provider(cfg);

        first = provider.embed_batch({"alpha beta", "gamma delta"});
        REQUIRE(first.size() == 2);
        CHECK(provider.dimension() == 4);
        for (const auto& v : first)
            CHECK(std::abs(norm_of(v) - 1.0) <= 1e-9);
        CHECK(server.hits.load() == 1);

        // repeat request served from cache, no extra round trip
        auto again = provider.embed_batch({"alpha beta", "gamma delta"});
        CHECK(server.hits.load() == 1);
        CHECK(again[0].values == first[0].values);

        CHECK(fs::exists(provider.cache_path("alpha beta")));
    }

    // server is gone; a fresh provider must still answer from the cache
    ExternalServiceConfig cfg;
    cfg.port = port;
    cfg.identity = "test-svc-v1";
    cfg.cache_dir = cache.string();
    ExternalServiceProvider offline(cfg);
    auto cached = offline.embed_batch({"gamma delta", "alpha beta"});
    CHECK(cached[0].values == first[1].values);
    CHECK(cached[1].values == first[0].values);

    // an uncached text now fails with a retriable transport error
    CHECK_THROWS_AS(offline.embed("never seen"), RetriableError);
    fs::remove_all(cache);
}

TEST_CASE("external provider transport failures are retriable") {
    ExternalServiceConfig cfg;
    cfg.port = 1;  // nothing listens here
    cfg.timeout_ms = 200;
    ExternalServiceProvider provider(cfg);
    CHECK_THROWS_AS(provider.embed("hello"), RetriableError);

    ExternalServiceConfig bad;
    bad.port = 0;
    CHECK_THROWS_AS(ExternalServiceProvider{bad}, FatalError);
}

TEST_CASE("external provider schema violations are fatal") {
    httplib::Server svr;
    int mode = 0;
    svr.Post("/embed", [&](const httplib::Request& req,
                           httplib::Response& res) {
        json body = json::parse(req.body);
        json out;
        if (mode == 0) {
            out["oops"] = 1;
        } else if (mode == 1) {
            out["vectors"] = json::array({json::array({1.0, 2.0})});
        } else if (mode == 2) {
            json vectors = json::array();
            for (std::size_t i = 0; i < body["texts"].size(); ++i)
                vectors.push_back(json::array(
                    {1.0, json::array({2.0})}));  // nested junk
            out["vectors"] = vectors;
        } else {
            json vectors = json::array();
            bool first = true;
            for (std::size_t i = 0; i < body["texts"].size(); ++i) {
                vectors.push_back(first ? json::array({1.0, 2.0, 3.0})
                                        : json::array({1.0, 2.0}));
                first = false;
            }
            out["vectors"] = vectors;
        }
        res.set_content(out.dump(), "application/json");
    });
    int port = svr.bind_to_any_port("127.0.0.1");
    std::thread th([&] { svr.listen_after_bind(); });
    svr.wait_until_ready();

    ExternalServiceConfig cfg;
    cfg.port = port;
    ExternalServiceProvider provider(cfg);

    mode = 0;  // missing "vectors"
    CHECK_THROWS_AS(provider.embed("a"), FatalError);
    mode = 1;  // wrong vector count
    CHECK_THROWS_AS(provider.embed_batch({"a", "b"}), FatalError);
    mode = 2;  // non-numeric component
    CHECK_THROWS_AS(provider.embed("a"), FatalError);
    mode = 3;  // dimension drift inside one response
    CHECK_THROWS_AS(provider.embed_batch({"a", "b"}), FatalError);

    svr.stop();
    th.join();
}
