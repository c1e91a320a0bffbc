/*
 * Copyright 2026 The CGP Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cgp/service.h"

#include <thread>

#include "cgp/errors.h"
#include "cgp/simulator.h"
#include "gtest/gtest.h"
#include "httplib.h"

namespace cgp {
namespace {

using nlohmann::json;

PredictionService MakeService() {
  ModelFile f;
  f.family = "cgp";
  f.model = GenerativeModel(DefaultSimConfig());
  f.converged = true;
  return PredictionService(
      f, SimulateRegime(DefaultSimConfig(), Policy::PiA(), 5, 11).dataset);
}

json Request(double cut, json plan, json query) {
  return {{"history",
           {{"cut_time", cut},
            {"events", json::array({{{"t", 1.0}, {"y", 0.4}},
                                    {{"t", 3.0}, {"a", "tx"}},
                                    {{"t", 5.0}, {"y", 0.1}}})}}},
          {"plan", plan},
          {"query_times", query},
          {"mode", "mixture"}};
}

TEST(Service, TracesAndTraceLookup) {
  const PredictionService s = MakeService();
  const HttpReply list = s.Traces();
  EXPECT_EQ(list.status, 200);
  ASSERT_EQ(list.body["traces"].size(), 5u);
  EXPECT_EQ(list.body["traces"][0]["id"], "s0");
  EXPECT_EQ(list.body["traces"][0]["default_cut_time"], 12.0);

  const HttpReply one = s.TraceById("s3");
  EXPECT_EQ(one.status, 200);
  EXPECT_EQ(one.body["id"], "s3");
  EXPECT_FALSE(one.body["events"].empty());
  EXPECT_EQ(s.TraceById("nope").status, 404);
}

TEST(Service, ModelMetadata) {
  const HttpReply m = MakeService().Model();
  EXPECT_EQ(m.status, 200);
  EXPECT_EQ(m.body["n_components"], 3);
  EXPECT_EQ(m.body["action_vocabulary"], json::array({"tx"}));
  EXPECT_EQ(m.body["family"], "cgp");
  EXPECT_EQ(m.body["model_id"], MakeService().model_id());
}

TEST(Service, EmptyPlanMatchesNoActionPrediction) {
  const PredictionService s = MakeService();
  const HttpReply r =
      s.Predict(Request(12, json::array(), {13.0, 18.0, 24.0}).dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  History h;
  h.cut_time = 12;
  h.events = {{1.0, 0.4, std::nullopt}, {3.0, std::nullopt, "tx"},
              {5.0, 0.1, std::nullopt}};
  const std::vector<double> q = {13.0, 18.0, 24.0};
  const PosteriorPrediction p =
      Predict(GenerativeModel(DefaultSimConfig()), h, {}, q,
              PredictMode::kMixture);
  EXPECT_EQ(r.body["mean"].get<std::vector<double>>(), p.mean);
  EXPECT_EQ(r.body["lower95"].get<std::vector<double>>(), p.lower95);
  EXPECT_EQ(r.body["upper95"].get<std::vector<double>>(), p.upper95);
  EXPECT_EQ(r.body["times"].get<std::vector<double>>(), q);
  EXPECT_EQ(r.body["class_log_posterior"].size(), 3u);
  EXPECT_EQ(r.body["model_id"], s.model_id());
}

TEST(Service, PlanShiftsPredictionAndIsStateless) {
  const PredictionService s = MakeService();
  const std::string body =
      Request(12, json::array({{{"type", "tx"}, {"time", 13.0}}}),
              {14.0, 20.0})
          .dump();
  const HttpReply a = s.Predict(body);
  const HttpReply b = s.Predict(body);
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body.dump(), b.body.dump());
  const HttpReply none = s.Predict(Request(12, json::array(), {14.0, 20.0}).dump());
  // Treatment inside its window adds the effect; afterwards it wears off.
  EXPECT_NEAR(a.body["mean"][0].get<double>() -
                  none.body["mean"][0].get<double>(),
              0.5, 1e-12);
  EXPECT_NEAR(a.body["mean"][1].get<double>(),
              none.body["mean"][1].get<double>(), 1e-12);
}

TEST(Service, InvalidRequestsNameTheField) {
  const PredictionService s = MakeService();
  auto field = [&](const std::string& body) {
    const HttpReply r = s.Predict(body);
    EXPECT_EQ(r.status, 400) << body;
    return r.body.value("field", std::string());
  };
  EXPECT_EQ(field("{oops"), "body");
  EXPECT_EQ(field("[1]"), "body");
  EXPECT_EQ(field("{}"), "history");
  EXPECT_EQ(field(Request(12, json::array({{{"type", "tx"}, {"time", 12.0}}}),
                          {13.0})
                      .dump()),
            "plan[0].time");
  EXPECT_EQ(field(Request(12, json::array({{{"type", "zap"}, {"time", 13.0}}}),
                          {13.0})
                      .dump()),
            "plan[0].type");
  EXPECT_EQ(field(Request(12, json::array(), {13.0, 11.0}).dump()),
            "query_times[1]");
  EXPECT_EQ(field(Request(12, json::array(), json::array()).dump()),
            "query_times");
  EXPECT_EQ(field(Request(4, json::array(), {13.0}).dump()),
            "history.events[2].t");
  json bad_mode = Request(12, json::array(), {13.0});
  bad_mode["mode"] = "median";
  EXPECT_EQ(field(bad_mode.dump()), "mode");
  json bad_event = Request(12, json::array(), {13.0});
  bad_event["history"]["events"][0]["y"] = "high";
  EXPECT_EQ(field(bad_event.dump()), "history.events[0]");
}

TEST(Service, PredictionFailureIs500WithErrorClass) {
  ModelFile f;
  f.model = GenerativeModel(DefaultSimConfig());
  // A kernel parameter so large the posterior overflows.
  for (GPComponent& c : f.model.components) {
    c.kernel = Sum({Matern32{1e308, 8.0}, WhiteNoise{0.1}});
  }
  const PredictionService s(f, {});
  const HttpReply r = s.Predict(Request(12, json::array(), {13.0}).dump());
  EXPECT_EQ(r.status, 500) << r.body.dump();
  EXPECT_TRUE(r.body.contains("error"));
}

TEST(Service, ServesOverHttp) {
  const PredictionService s = MakeService();
  HttpServer server(s);
  const int port = server.Bind("127.0.0.1", 0);
  std::thread t([&] { server.Listen(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_connection_timeout(5);

  auto traces = cli.Get("/api/traces");
  ASSERT_TRUE(traces);
  EXPECT_EQ(traces->status, 200);
  EXPECT_EQ(json::parse(traces->body), s.Traces().body);
  auto missing = cli.Get("/api/trace/nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  auto model = cli.Get("/api/model");
  ASSERT_TRUE(model);
  EXPECT_EQ(json::parse(model->body)["model_id"], s.model_id());

  const std::string body = Request(12, json::array(), {13.0, 24.0}).dump();
  auto p = cli.Post("/api/predict", body, "application/json");
  ASSERT_TRUE(p);
  EXPECT_EQ(p->status, 200);
  EXPECT_EQ(json::parse(p->body), s.Predict(body).body);
  auto bad = cli.Post("/api/predict", "{}", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  server.Stop();
  t.join();
}

}  // namespace
}  // namespace cgp
