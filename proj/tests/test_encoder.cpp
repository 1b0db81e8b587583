#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "nlohmann/json.hpp"

#include "emokd/encoder.hpp"
#include "emokd/errors.hpp"
#include "emokd/util.hpp"

using namespace emokd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("emokd_enc_" + std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

class FakeEncoder : public EncoderClient {
 public:
  int calls = 0;
  std::vector<std::vector<double>> encode(const std::string& path) override {
    ++calls;
    if (path.find("broken") != std::string::npos) {
      throw ExtractionError("cannot read " + path);
    }
    // two tokens whose mean is (1, 2, 3)
    return {{0.0, 0.0, 0.0}, {2.0, 4.0, 6.0}};
  }
};

}  // namespace

TEST_SUITE_BEGIN("encoder");

TEST_CASE("mean pooling") {
  // identical tokens pool to themselves
  CHECK(mean_pool({{3.0, -1.0}, {3.0, -1.0}, {3.0, -1.0}}) ==
        std::vector<double>{3.0, -1.0});
  // mean of a zero token and a two token is a one token
  CHECK(mean_pool({{0.0, 0.0}, {2.0, 2.0}}) == std::vector<double>{1.0, 1.0});
  CHECK_THROWS_AS(mean_pool({}), ExtractionError);
  CHECK_THROWS_AS(mean_pool({{1.0, 2.0}, {1.0}}), ExtractionError);
}

TEST_CASE("extract_features pools per image and caches results") {
  TempDir tmp;
  const fs::path cache = tmp.path / "features.txt";
  FakeEncoder encoder;
  const std::vector<std::string> paths = {"img_a.jpg", "img_b.jpg"};

  const auto records =
      extract_features(paths, encoder, synthetic_space(2), cache);
  REQUIRE(records.size() == 2);
  CHECK(records[0].vector == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(encoder.calls == 2);
  CHECK(fs::exists(cache));

  // second run answers from the cache
  const auto again =
      extract_features(paths, encoder, synthetic_space(2), cache);
  CHECK(encoder.calls == 2);
  CHECK(again[1].vector == records[1].vector);
}

TEST_CASE("per-sample failures are aggregated into one error") {
  FakeEncoder encoder;
  try {
    extract_features({"ok.jpg", "broken1.jpg", "broken2.jpg"}, encoder,
                     synthetic_space(2), std::nullopt);
    FAIL("expected ExtractionError");
  } catch (const ExtractionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2 extraction failure(s)") != std::string::npos);
    CHECK(msg.find("broken1.jpg") != std::string::npos);
    CHECK(msg.find("broken2.jpg") != std::string::npos);
  }
  CHECK(encoder.calls == 3);  // every path was attempted
}

TEST_CASE("remote encoder client round-trips through a local endpoint") {
  httplib::Server server;
  server.Post("/encode", [](const httplib::Request& req,
                            httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    nlohmann::json out = {
        {"tokens", {{1.0, 2.0}, {3.0, 4.0}}},
        {"path", body["image_path"]},
    };
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteEncoderClient client(
      "http://127.0.0.1:" + std::to_string(port) + "/encode", "");
  const auto tokens = client.encode("x.jpg");
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0] == std::vector<double>{1.0, 2.0});
  CHECK(mean_pool(tokens) == std::vector<double>{2.0, 3.0});

  server.stop();
  worker.join();

  RemoteEncoderClient dead("http://127.0.0.1:1/encode", "");
  CHECK_THROWS_AS(dead.encode("x.jpg"), ExtractionError);
}

TEST_SUITE_END();
