// Copyright 2026 The TILscore Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "fake_model.hpp"
#include "httplib.h"
#include "test_support.hpp"
#include "tilscore/error.hpp"
#include "tilscore/inference.hpp"
#include "tilscore/parallel.hpp"
#include "tilscore/protocol.hpp"
#include "tilscore/rng.hpp"
#include "tilscore/synthetic.hpp"

namespace tilscore {
namespace {

using testing::KindOf;

// Truth without rasterized classes: the mock only reads the region list.
GroundTruthMap Truth() {
  GroundTruthMap t;
  t.slide_id = "t";
  t.width = 4000;
  t.height = 4000;
  t.regions = {{0, 0, 2000, 4000, TissueClass::kTumor, 500.0, 0.25},
               {2000, 0, 1000, 4000, TissueClass::kStroma, 800.0, 0.5},
               {3000, 0, 1000, 1000, TissueClass::kNecrosis, 0.0, 1.0}};
  return t;
}

PatchRef Ref(int x, int y, int size = 200, double mpp = 0.5) {
  return {"t", x, y, size, mpp};
}

std::size_t Tils(const std::vector<CellInstance>& cells) {
  std::size_t n = 0;
  for (const auto& c : cells) n += c.cls == CellClass::kInflammatory;
  return n;
}

TEST(Mock, ClassifiesByMajorityTruthClass) {
  MockBackend mock(1);
  mock.add_slide(Truth());
  const PixelBuffer patch(200, 200);
  const ClassProbs tumor = backend_classify(mock, patch, Ref(100, 100));
  EXPECT_EQ(ArgmaxClass(tumor), PatchClass::kTumor);
  EXPECT_DOUBLE_EQ(tumor[3], 0.9);
  // 120 px tumor, 80 px stroma across the boundary at x = 2000.
  EXPECT_EQ(ArgmaxClass(backend_classify(mock, patch, Ref(1880, 100))),
            PatchClass::kTumor);
  EXPECT_EQ(ArgmaxClass(backend_classify(mock, patch, Ref(1920, 100))),
            PatchClass::kStroma);
  EXPECT_EQ(ArgmaxClass(backend_classify(mock, patch, Ref(3100, 100))),
            PatchClass::kNecrosis);
  const auto areas = mock.class_areas(Ref(1880, 100));
  EXPECT_DOUBLE_EQ(areas[static_cast<int>(TissueClass::kTumor)], 120.0 * 200);
  EXPECT_DOUBLE_EQ(areas[static_cast<int>(TissueClass::kStroma)], 80.0 * 200);
}

TEST(Mock, BackgroundPatchIsUniformAndEmpty) {
  GroundTruthMap t = Truth();
  t.regions.resize(1);
  MockBackend mock(1);
  mock.add_slide(t);
  const PixelBuffer patch(200, 200);
  const ClassProbs p = backend_classify(mock, patch, Ref(3000, 3000));
  for (double v : p) EXPECT_DOUBLE_EQ(v, 0.25);
  EXPECT_TRUE(backend_quantify(mock, patch, Ref(3000, 3000)).empty());
  // Necrosis with planted density 0 never yields cells.
  MockBackend full(2);
  full.add_slide(Truth());
  for (int i = 0; i < 20; ++i) {
    EXPECT_TRUE(full.quantify(Ref(3000 + 30 * i, 100), patch).empty());
  }
}

TEST(Mock, OutsideCoverageOrUnknownSlideIsArgumentError) {
  MockBackend mock(1);
  mock.add_slide(Truth());
  const PixelBuffer patch(200, 200);
  EXPECT_EQ(KindOf([&] { mock.classify(Ref(3900, 0), patch); }), ErrorKind::kArgument);
  EXPECT_EQ(KindOf([&] { mock.classify({"other", 0, 0, 200, 0.5}, patch); }),
            ErrorKind::kArgument);
}

TEST(Mock, CountsArePoissonAroundPlantedDensity) {
  MockBackend mock(3);
  mock.add_slide(Truth());
  const PixelBuffer patch(200, 200);
  // 200 px at 0.5 um = 0.01 mm^2; density 500 -> mean 5 TILs.
  const double mean = 500.0 * 0.01;
  EXPECT_NEAR(mock.expected_tils(Ref(0, 0)), mean, 1e-9);
  double sum = 0.0;
  const int n = 1000;
  int outliers = 0;
  for (int i = 0; i < n; ++i) {
    const auto cells = backend_quantify(mock, patch, Ref(1 + 17 * (i % 100), 300 * (i / 100)));
    const double k = static_cast<double>(Tils(cells));
    sum += k;
    outliers += std::abs(k - mean) > 3 * std::sqrt(mean) + 1;
  }
  EXPECT_NEAR(sum / n, mean, 0.05 * mean);
  EXPECT_LT(outliers, 15);
}

TEST(Mock, TilShareSetsTheInflammatoryFraction) {
  MockBackend mock(4);
  mock.add_slide(Truth());
  const PixelBuffer patch(400, 400);
  double tils = 0;
  double all = 0;
  for (int i = 0; i < 200; ++i) {
    const auto cells = mock.quantify(Ref(2000 + 2 * i, 400 + 10 * i, 400), patch);
    tils += static_cast<double>(Tils(cells));
    all += static_cast<double>(cells.size());
    for (const auto& c : cells) {
      ASSERT_GE(c.cx, 0.0);
      ASSERT_LT(c.cx, 400.0);
    }
  }
  EXPECT_NEAR(tils / all, 0.5, 0.03);  // stroma share
}

TEST(Mock, IsAPureFunctionOfSeedAndCoordinates) {
  MockBackend a(9);
  MockBackend b(9);
  MockBackend c(10);
  a.add_slide(Truth());
  b.add_slide(Truth());
  c.add_slide(Truth());
  const PixelBuffer patch(200, 200);
  const auto first = a.quantify(Ref(400, 400), patch);
  a.quantify(Ref(0, 0), patch);  // interleaved calls do not shift the stream
  EXPECT_EQ(a.quantify(Ref(400, 400), patch), first);
  EXPECT_EQ(b.quantify(Ref(400, 400), patch), first);
  EXPECT_NE(c.quantify(Ref(400, 400), patch), first);
}

TEST(NormalizeProbs, RenormalizesRejectsAndArgmaxTies) {
  const auto n = NormalizeProbs({0.5, 0.5, 0.5, 0.5});
  EXPECT_TRUE(n.renormalized);
  for (double v : n.probs) EXPECT_DOUBLE_EQ(v, 0.25);
  EXPECT_FALSE(NormalizeProbs({0.1, 0.2, 0.3, 0.4}).renormalized);
  EXPECT_EQ(KindOf([] { NormalizeProbs({-0.1, 0.5, 0.3, 0.3}); }), ErrorKind::kProtocol);
  EXPECT_EQ(KindOf([] { NormalizeProbs({0, 0, 0, 0}); }), ErrorKind::kProtocol);
  EXPECT_EQ(KindOf([] { NormalizeProbs({NAN, 1, 0, 0}); }), ErrorKind::kProtocol);
  EXPECT_EQ(ArgmaxClass({0.1, 0.2, 0.3, 0.4}), PatchClass::kTumor);
  EXPECT_EQ(ArgmaxClass({0.25, 0.25, 0.25, 0.25}), PatchClass::kNecrosis);
  EXPECT_EQ(ArgmaxClass({0.1, 0.4, 0.1, 0.4}), PatchClass::kStroma);
}

TEST(NormalizeProbs, AlwaysYieldsADistribution) {
  Pcg32 rng(6);
  for (int i = 0; i < 1000; ++i) {
    ClassProbs raw;
    for (double& v : raw) v = rng.uniform() * 3;
    raw[rng.bounded(4)] += 1e-3;
    const auto n = NormalizeProbs(raw);
    double sum = 0;
    for (double v : n.probs) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

PixelBuffer Noise(int w, int h, std::uint64_t seed) {
  PixelBuffer img(w, h);
  Pcg32 rng(seed);
  for (auto& b : img.mutable_bytes()) b = static_cast<std::uint8_t>(rng.next());
  return img;
}

TEST(Protocol, RequestRoundTripIsBitExact) {
  const PixelBuffer img = Noise(5, 3, 1);
  const std::string msg = protocol::EncodeRequest("s@0,0#1", protocol::Task::kQuantify, img, 0.25);
  EXPECT_EQ(msg.find('\n'), std::string::npos);
  const protocol::Request r = protocol::DecodeRequest(msg);
  EXPECT_EQ(r.width, 5);
  EXPECT_EQ(r.height, 3);
  EXPECT_EQ(r.task, protocol::Task::kQuantify);
  EXPECT_EQ(std::vector<std::uint8_t>(img.bytes().begin(), img.bytes().end()), r.pixels);
  EXPECT_EQ(protocol::EncodeRequest(r), msg);
  EXPECT_EQ(protocol::PeekId(msg), "s@0,0#1");
  // Keys appear in lexicographic order.
  EXPECT_EQ(msg.rfind("{\"height\":3,\"id\":", 0), 0u);
}

TEST(Protocol, ResponsesRoundTrip) {
  const std::string c = protocol::EncodeClassifyResponse({"a", {0.1, 0.2, 0.3, 0.4}});
  EXPECT_EQ(c, R"({"id":"a","probs":{"necrosis":0.1,"normal_lung":0.3,"stroma":0.2,"tumor":0.4}})");
  const auto dc = protocol::DecodeClassifyResponse(c);
  EXPECT_EQ(protocol::EncodeClassifyResponse(dc), c);

  const protocol::QuantifyResponse q{
      "b", {{1.5, 2.25, CellClass::kInflammatory}, {0, 7, CellClass::kDead}}};
  const std::string qm = protocol::EncodeQuantifyResponse(q);
  const auto dq = protocol::DecodeQuantifyResponse(qm);
  EXPECT_EQ(dq.cells, q.cells);
  EXPECT_EQ(protocol::EncodeQuantifyResponse(dq), qm);
}

TEST(Protocol, Base64MatchesKnownVectors) {
  const std::string s = "foobar";
  const std::vector<std::uint8_t> b(s.begin(), s.end());
  EXPECT_EQ(protocol::Base64Encode(std::span(b).first(4)), "Zm9vYg==");
  EXPECT_EQ(protocol::Base64Encode(b), "Zm9vYmFy");
  EXPECT_EQ(protocol::Base64Decode("Zm9vYmFy"), b);
  EXPECT_EQ(KindOf([] { protocol::Base64Decode("@@@"); }), ErrorKind::kProtocol);
}

TEST(Protocol, MalformedMessagesAreProtocolErrors) {
  for (const char* m : {
           R"({"id":"a","probs":{"necrosis":0.1,"stroma":0.2,"tumor":0.4}})",
           R"({"id":"a"})", R"({"probs":{}})", "[1,2]", "{oops",
       }) {
    EXPECT_EQ(KindOf([&] { protocol::DecodeClassifyResponse(m); }),
              ErrorKind::kProtocol)
        << m;
  }
  EXPECT_EQ(KindOf([] {
              protocol::DecodeQuantifyResponse(
                  R"({"cells":[{"class":"macrophage","x":1,"y":1}],"id":"a"})");
            }),
            ErrorKind::kProtocol);
  EXPECT_EQ(KindOf([] {
              protocol::DecodeRequest(
                  R"({"height":1,"id":"a","mpp":1,"pixels_b64":"AAAA","task":"segment","width":1})");
            }),
            ErrorKind::kProtocol);
  EXPECT_EQ(KindOf([] {
              protocol::DecodeRequest(
                  R"({"height":2,"id":"a","mpp":1,"pixels_b64":"AAAA","task":"classify","width":1})");
            }),
            ErrorKind::kProtocol);
}

// Out-of-bounds centroids from any backend are rejected after the call.
class OffPatchBackend final : public Backend {
 public:
  ClassProbs classify(const PatchRef&, const PixelBuffer&) override { return {1, 0, 0, 0}; }
  std::vector<CellInstance> quantify(const PatchRef& ref, const PixelBuffer&) override {
    return {{static_cast<double>(ref.size), 0.0, CellClass::kInflammatory}};
  }
};

TEST(BackendQuantify, CentroidOutsidePatchIsProtocolError) {
  OffPatchBackend b;
  EXPECT_EQ(KindOf([&] { backend_quantify(b, PixelBuffer(64, 64), Ref(0, 0, 64)); }),
            ErrorKind::kProtocol);
  EXPECT_EQ(KindOf([&] { backend_classify(b, PixelBuffer(32, 64), Ref(0, 0, 64)); }),
            ErrorKind::kArgument);
}

std::string FakeCommand(const std::string& flags = "") {
  return std::string(TILSCORE_FAKE_BACKEND) + (flags.empty() ? "" : " " + flags);
}

void ExpectMatchesFakeModel(Backend& backend, int n, int workers) {
  std::vector<PixelBuffer> patches;
  for (int i = 0; i < n; ++i) patches.push_back(Noise(16, 16, 100 + i));
  std::vector<ClassProbs> probs(n);
  std::vector<std::vector<CellInstance>> cells(n);
  const auto failures = ParallelFor(n, workers, [&](std::size_t i) {
    const PatchRef ref{"s", static_cast<int>(16 * i), 0, 16, 0.5};
    probs[i] = backend_classify(backend, patches[i], ref);
    cells[i] = backend_quantify(backend, patches[i], ref);
  });
  ASSERT_TRUE(failures.empty()) << failures[0].message();
  for (int i = 0; i < n; ++i) {
    protocol::Request r;
    r.width = 16;
    r.height = 16;
    r.pixels.assign(patches[i].bytes().begin(), patches[i].bytes().end());
    const auto expected = NormalizeProbs(testing::FakeProbs(r)).probs;
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(probs[i][k], expected[k], 1e-12);
    EXPECT_EQ(cells[i], testing::FakeCells(r));
  }
}

TEST(SubprocessBackend, AnswersInOrder) {
  auto backend = MakeSubprocessBackend(FakeCommand(), 10.0);
  ExpectMatchesFakeModel(*backend, 6, 1);
}

TEST(SubprocessBackend, MatchesRepliesThatArriveOutOfOrder) {
  // The fake answers each batch of 4 in reverse; 4 workers keep 4 in flight.
  auto backend = MakeSubprocessBackend(FakeCommand("--batch 4"), 10.0);
  ExpectMatchesFakeModel(*backend, 8, 4);
}

TEST(SubprocessBackend, MalformedReplyIsProtocolError) {
  auto backend = MakeSubprocessBackend(FakeCommand("--malformed"), 10.0);
  EXPECT_EQ(KindOf([&] { backend->classify(Ref(0, 0, 16), Noise(16, 16, 1)); }),
            ErrorKind::kProtocol);
}

TEST(SubprocessBackend, SilentProcessTimesOut) {
  auto backend = MakeSubprocessBackend(FakeCommand("--hang"), 0.3);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_EQ(KindOf([&] { backend->classify(Ref(0, 0, 16), Noise(16, 16, 1)); }),
            ErrorKind::kBackendUnavailable);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(SubprocessBackend, NegativeScoreIsRejected) {
  auto backend = MakeSubprocessBackend(FakeCommand("--negative"), 10.0);
  const PixelBuffer patch = Noise(16, 16, 1);
  EXPECT_EQ(KindOf([&] { backend_classify(*backend, patch, Ref(0, 0, 16)); }),
            ErrorKind::kProtocol);
}

TEST(SubprocessBackend, ExitedProcessIsUnavailable) {
  auto backend = MakeSubprocessBackend("exit 0", 2.0);
  EXPECT_EQ(KindOf([&] { backend->classify(Ref(0, 0, 16), Noise(16, 16, 1)); }),
            ErrorKind::kBackendUnavailable);
}

class FakeHttpServer {
 public:
  FakeHttpServer() {
    server_.Post("/infer", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      if (status_ != 200) {
        res.status = status_;
        return;
      }
      res.set_content(testing::FakeRespond(req.body), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeHttpServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/infer"; }
  void fail_with(int status) { status_ = status; }
  int hits() const { return hits_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> status_{200};
  std::atomic<int> hits_{0};
};

TEST(HttpBackend, MatchesInProcessServer) {
  FakeHttpServer server;
  auto backend = MakeHttpBackend(server.url(), 5.0);
  ExpectMatchesFakeModel(*backend, 6, 3);
  EXPECT_EQ(server.hits(), 12);
}

TEST(HttpBackend, ErrorsMapToKinds) {
  FakeHttpServer server;
  server.fail_with(500);
  auto backend = MakeHttpBackend(server.url(), 5.0);
  EXPECT_EQ(KindOf([&] { backend->classify(Ref(0, 0, 16), Noise(16, 16, 1)); }),
            ErrorKind::kProtocol);
  auto gone = MakeHttpBackend("http://127.0.0.1:1/infer", 1.0);
  EXPECT_EQ(KindOf([&] { gone->classify(Ref(0, 0, 16), Noise(16, 16, 1)); }),
            ErrorKind::kBackendUnavailable);
  EXPECT_EQ(KindOf([] { MakeHttpBackend("ftp://x/y", 1.0); }), ErrorKind::kConfig);
}

TEST(MakeRemoteBackend, DispatchesOnKind) {
  BackendDescriptor d = BackendDescriptor::Parse("subprocess:" + FakeCommand());
  auto b = MakeRemoteBackend(d);
  ExpectMatchesFakeModel(*b, 2, 1);
  EXPECT_EQ(KindOf([] { MakeRemoteBackend(BackendDescriptor{}); }), ErrorKind::kArgument);
}

}  // namespace
}  // namespace tilscore
