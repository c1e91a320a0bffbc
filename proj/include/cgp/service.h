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

// HTTP prediction service. Each endpoint is a pure function of the loaded
// model, the loaded traces and the request, so handlers are testable without
// a socket; HttpServer only binds them to routes.
//
//   GET  /api/traces        ids, tau and default cut time of every trace
//   GET  /api/trace/{id}    events of one trace
//   GET  /api/model         model metadata and action vocabulary
//   POST /api/predict       PredictRequest -> PredictResponse

#ifndef CGP_SERVICE_H_
#define CGP_SERVICE_H_

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "cgp/model_io.h"
#include "cgp/trace.h"
#include "json.hpp"

namespace cgp {

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

class PredictionService {
 public:
  PredictionService(ModelFile model, Dataset traces);

  HttpReply Traces() const;
  HttpReply TraceById(const std::string& id) const;
  HttpReply Model() const;
  HttpReply Predict(const std::string& body) const;

  // Stable identifier derived from the model file contents.
  const std::string& model_id() const { return model_id_; }

 private:
  ModelFile model_;
  Dataset traces_;
  std::map<std::string, size_t> index_;
  std::set<std::string> vocabulary_;
  std::string model_id_;
};

// Half of the trace horizon.
double DefaultCutTime(const Trace& trace);

// Binds the service routes to a socket. Requests are handled concurrently;
// the service itself is immutable.
class HttpServer {
 public:
  explicit HttpServer(const PredictionService& service);
  ~HttpServer();

  // Returns the bound port; port 0 picks an ephemeral one. Throws Error if
  // the address cannot be bound.
  int Bind(const std::string& host, int port);
  // Blocks until Stop() is called from another thread.
  void Listen();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cgp

#endif  // CGP_SERVICE_H_
