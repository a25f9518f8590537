/* Copyright 2026 The mosseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "service.hpp"

#include <pthread.h>
#include <signal.h>
#include <sodium.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <random>
#include <thread>

#include "config.hpp"
#include "error.hpp"
#include "httplib.h"
#include "json.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "png_io.hpp"
#include "sequence.hpp"

namespace mosseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

[[noreturn]] void Throw(int status, std::string code, std::string message) {
  throw HttpError{status, std::move(code), std::move(message)};
}

json ErrorBody(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

void Reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int StatusForKind(ErrorKind kind, std::string& code) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: code = "invalid_argument"; return 400;
    case ErrorKind::kFormat: code = "format_error"; return 400;
    case ErrorKind::kNotFound: code = "not_found"; return 404;
    case ErrorKind::kInvalidState: code = "invalid_state"; return 409;
    case ErrorKind::kIo: code = "io_error"; return 500;
    case ErrorKind::kInternal: code = "internal_error"; return 500;
  }
  code = "internal_error";
  return 500;
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler Wrap(Handler fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const HttpError& e) {
      Reply(res, e.status, ErrorBody(e.code, e.message));
    } catch (const Error& e) {
      std::string code;
      const int status = StatusForKind(e.kind(), code);
      Reply(res, status, ErrorBody(code, e.what()));
    } catch (const json::exception& e) {
      Reply(res, 400, ErrorBody("bad_json", e.what()));
    } catch (const std::exception& e) {
      Reply(res, 500, ErrorBody("internal_error", e.what()));
    }
  };
}

std::string NewId() {
  static std::mutex mu;
  static std::mt19937_64 rng(std::random_device{}());
  std::lock_guard lock(mu);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

void WriteJson(const fs::path& path, const json& j) {
  const std::string s = j.dump(2) + "\n";
  WriteFileBytes(path, {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

json ReadJson(const fs::path& path) {
  const Bytes b = ReadFileBytes(path);
  return json::parse(b.begin(), b.end());
}

int ParseFrame(const std::string& s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v < 0)
    Throw(404, "unknown_frame", "not a frame number: " + s);
  return v;
}

Bytes DecodeBase64(std::string_view text) {
  Bytes out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), " \t\r\n", &len,
                        nullptr, sodium_base64_VARIANT_ORIGINAL) != 0)
    Throw(400, "bad_base64", "annotation body is not valid base64");
  out.resize(len);
  return out;
}

void CopyNumberedPngs(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  if (!fs::is_directory(from, ec)) return;
  fs::create_directories(to);
  for (const auto& [n, path] : ListNumberedPngs(from)) {
    const Bytes b = ReadFileBytes(path);
    WriteFileBytes(to / FrameFileName(n), b);
  }
}

}  // namespace

struct RunInfo {
  int id = 0;
  std::string status;  // running | done | error
  int from = 0;        // frame number
  std::string direction;
  json config = json::object();
  std::string error;
  int frames_done = 0;
  int frames_total = 0;
  std::optional<double> metric_tol;

  json ToJson() const {
    json j{{"run_id", id},           {"status", status},
           {"from", from},           {"direction", direction},
           {"config", config},       {"frames_done", frames_done},
           {"frames_total", frames_total}};
    if (!error.empty()) j["error"] = error;
    if (metric_tol) j["metric_tol"] = *metric_tol;
    return j;
  }

  static RunInfo FromJson(const json& j) {
    RunInfo r;
    r.id = j.at("run_id").get<int>();
    r.status = j.at("status").get<std::string>();
    r.from = j.at("from").get<int>();
    r.direction = j.at("direction").get<std::string>();
    r.config = j.value("config", json::object());
    r.error = j.value("error", std::string());
    r.frames_done = j.value("frames_done", 0);
    r.frames_total = j.value("frames_total", 0);
    if (j.contains("metric_tol")) r.metric_tol = j["metric_tol"].get<double>();
    return r;
  }
};

struct Service::Entry {
  std::mutex mu;
  std::string id;
  fs::path dir;
  int height = 0;
  int width = 0;
  std::vector<int> frame_numbers;
  bool has_gt = false;
  std::vector<RunInfo> runs;  // ascending id
  std::thread worker;

  fs::path RunDir(int run) const { return dir / "runs" / std::to_string(run); }

  void PersistRun(const RunInfo& r) const { WriteJson(RunDir(r.id) / "run.json", r.ToJson()); }

  bool Running() const {
    return std::any_of(runs.begin(), runs.end(),
                       [](const RunInfo& r) { return r.status == "running"; });
  }

  bool HasFrame(int n) const {
    return std::binary_search(frame_numbers.begin(), frame_numbers.end(), n);
  }

  RunInfo* FindRun(int id) {
    for (auto& r : runs)
      if (r.id == id) return &r;
    return nullptr;
  }

  json Describe() const {
    std::vector<int> annotated;
    std::error_code ec;
    if (fs::is_directory(dir / "masks", ec))
      for (const auto& [n, p] : ListNumberedPngs(dir / "masks")) annotated.push_back(n);
    json runs_json = json::array();
    for (const auto& r : runs) runs_json.push_back(r.ToJson());
    std::string status = "idle";
    if (!runs.empty()) status = runs.back().status;
    return {{"id", id},
            {"frame_count", frame_numbers.size()},
            {"dims", {{"height", height}, {"width", width}}},
            {"frames", frame_numbers},
            {"annotations", annotated},
            {"has_ground_truth", has_gt},
            {"status", status},
            {"runs", runs_json}};
  }
};

namespace {

std::shared_ptr<Service::Entry> LoadEntry(const fs::path& dir) {
  const json meta = ReadJson(dir / "session.json");
  auto e = std::make_shared<Service::Entry>();
  e->id = meta.at("id").get<std::string>();
  e->dir = dir;
  e->height = meta.at("height").get<int>();
  e->width = meta.at("width").get<int>();
  e->frame_numbers = meta.at("frames").get<std::vector<int>>();
  e->has_gt = meta.at("has_ground_truth").get<bool>();
  std::error_code ec;
  if (fs::is_directory(dir / "runs", ec)) {
    for (const auto& d : fs::directory_iterator(dir / "runs")) {
      if (!fs::is_regular_file(d.path() / "run.json", ec)) continue;
      RunInfo r = RunInfo::FromJson(ReadJson(d.path() / "run.json"));
      if (r.status == "running") {
        r.status = "error";
        r.error = "interrupted by service restart";
        r.frames_done = 0;
        for (const auto& f : fs::directory_iterator(d.path()))
          r.frames_done += f.path().extension() == ".png";
        e->PersistRun(r);
      }
      e->runs.push_back(std::move(r));
    }
  }
  std::sort(e->runs.begin(), e->runs.end(),
            [](const RunInfo& a, const RunInfo& b) { return a.id < b.id; });
  return e;
}

// Validates a staged folder and writes session.json.
std::shared_ptr<Service::Entry> FinishStaged(const fs::path& staged, const std::string& id) {
  const SequenceFolder seq = LoadSequence(staged, Resolution{.native = true});
  auto e = std::make_shared<Service::Entry>();
  e->id = id;
  e->dir = staged;
  e->height = seq.source_height;
  e->width = seq.source_width;
  e->frame_numbers = seq.frame_numbers;
  e->has_gt = !seq.ground_truth.empty();
  WriteJson(staged / "session.json", {{"id", id},
                                      {"height", e->height},
                                      {"width", e->width},
                                      {"frames", e->frame_numbers},
                                      {"has_ground_truth", e->has_gt}});
  return e;
}

void Propagate(std::shared_ptr<Service::Entry> e, int run_id, RunConfig cfg, int from) {
  const fs::path run_dir = e->RunDir(run_id);
  std::string failure;
  try {
    const SequenceFolder seq = LoadSequence(e->dir, cfg.resolution);
    const int pos = seq.PositionOf(from);
    const FolderRun run = PropagateFolder(seq, pos, cfg, [&](int p, const MaskMap& m) {
      WriteMaskPng(run_dir / FrameFileName(seq.frame_numbers[p]), m);
      std::lock_guard lock(e->mu);
      if (RunInfo* r = e->FindRun(run_id)) ++r->frames_done;
    });
    WriteRunOutput(run_dir, seq, run, cfg);
  } catch (const std::exception& ex) {
    failure = ex.what();
  }
  std::lock_guard lock(e->mu);
  RunInfo* r = e->FindRun(run_id);
  r->status = failure.empty() ? "done" : "error";
  r->error = failure;
  try {
    e->PersistRun(*r);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "mosseg: cannot persist run %d of %s: %s\n", run_id, e->id.c_str(),
                 ex.what());
  }
}

}  // namespace

Service::Service(ServiceOptions opts) : opts_(std::move(opts)) {
  Check(!opts_.data_dir.empty(), ErrorKind::kInvalidArgument, "data directory is empty");
  fs::create_directories(opts_.data_dir);
  for (const auto& d : fs::directory_iterator(opts_.data_dir)) {
    std::error_code ec;
    if (!fs::is_regular_file(d.path() / "session.json", ec)) continue;
    try {
      auto e = LoadEntry(d.path());
      entries_[e->id] = e;
    } catch (const std::exception& ex) {
      std::fprintf(stderr, "mosseg: skipping %s: %s\n", d.path().c_str(), ex.what());
    }
  }
}

Service::~Service() { WaitForRuns(); }

void Service::WaitForRuns() {
  std::vector<std::shared_ptr<Entry>> all;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, e] : entries_) all.push_back(e);
  }
  for (auto& e : all) {
    std::thread t;
    {
      std::lock_guard lock(e->mu);
      t = std::move(e->worker);
    }
    if (t.joinable()) t.join();
  }
}

std::shared_ptr<Service::Entry> Service::Find(const std::string& id) {
  std::lock_guard lock(mu_);
  const auto it = entries_.find(id);
  if (it == entries_.end()) Throw(404, "unknown_sequence", "no sequence with id " + id);
  return it->second;
}

std::shared_ptr<Service::Entry> Service::Register(std::shared_ptr<Entry> entry) {
  std::lock_guard lock(mu_);
  entries_[entry->id] = entry;
  return entry;
}

void Service::Mount(httplib::Server& server) {
  server.set_payload_max_length(opts_.max_upload_bytes);

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    std::string code = "http_" + std::to_string(res.status);
    if (res.status == 413) code = "payload_too_large";
    if (res.status == 404) code = "not_found";
    if (res.status == 400) code = "bad_request";
    res.set_content(ErrorBody(code, httplib::status_message(res.status)).dump(),
                    "application/json");
  });

  server.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "unknown failure";
        try {
          std::rethrow_exception(ep);
        } catch (const std::exception& e) {
          what = e.what();
        } catch (...) {
        }
        Reply(res, 500, ErrorBody("internal_error", what));
      });

  server.Get("/sequences", Wrap([this](const httplib::Request&, httplib::Response& res) {
               json ids = json::array();
               std::lock_guard lock(mu_);
               for (const auto& [id, e] : entries_) ids.push_back(id);
               Reply(res, 200, {{"sequences", ids}});
             }));

  server.Post("/sequences", Wrap([this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = NewId();
    const fs::path staged = opts_.data_dir / (".staging-" + id);
    const fs::path final_dir = opts_.data_dir / id;
    struct Cleanup {
      fs::path p;
      ~Cleanup() {
        std::error_code ec;
        fs::remove_all(p, ec);
      }
    } cleanup{staged};

    if (req.is_multipart_form_data()) {
      const auto frames = req.get_file_values("frames");
      if (frames.empty()) Throw(400, "no_frames", "upload contains no 'frames' files");
      const auto gts = req.get_file_values("gt");
      if (!gts.empty() && gts.size() != frames.size())
        Throw(400, "gt_count_mismatch",
              "got " + std::to_string(gts.size()) + " gt masks for " +
                  std::to_string(frames.size()) + " frames");
      int h = -1, w = -1;
      fs::create_directories(staged / "frames");
      for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        const std::span<const std::uint8_t> bytes(
            reinterpret_cast<const std::uint8_t*>(f.content.data()), f.content.size());
        GrayImage img;
        try {
          img = DecodeGrayPng(bytes);
        } catch (const Error& e) {
          Throw(400, "undecodable_image", "frame '" + f.filename + "': " + e.what());
        }
        if (h < 0) {
          h = img.height();
          w = img.width();
        } else if (img.height() != h || img.width() != w) {
          Throw(400, "dim_mismatch", "frame '" + f.filename + "' is " +
                                         std::to_string(img.height()) + "x" +
                                         std::to_string(img.width()) + ", expected " +
                                         std::to_string(h) + "x" + std::to_string(w));
        }
        WriteFileBytes(staged / "frames" / FrameFileName(static_cast<int>(i)), bytes);
      }
      if (!gts.empty()) fs::create_directories(staged / "gt");
      for (std::size_t i = 0; i < gts.size(); ++i) {
        const auto& g = gts[i];
        const std::span<const std::uint8_t> bytes(
            reinterpret_cast<const std::uint8_t*>(g.content.data()), g.content.size());
        MaskMap m;
        try {
          m = DecodeMaskPng(bytes);
        } catch (const Error& e) {
          Throw(400, "undecodable_image", "gt '" + g.filename + "': " + e.what());
        }
        if (m.height() != h || m.width() != w)
          Throw(400, "dim_mismatch", "gt '" + g.filename + "' does not match the frames");
        WriteFileBytes(staged / "gt" / FrameFileName(static_cast<int>(i)), bytes);
      }
    } else {
      const json body = json::parse(req.body);
      if (!body.contains("path") || !body["path"].is_string())
        Throw(400, "bad_request", "expected multipart 'frames' or JSON {\"path\": ...}");
      const fs::path src = body["path"].get<std::string>();
      try {
        LoadSequence(src, Resolution{.native = true});
      } catch (const Error& e) {
        Throw(400, e.kind() == ErrorKind::kFormat ? "undecodable_image" : "invalid_sequence",
              e.what());
      }
      CopyNumberedPngs(src / "frames", staged / "frames");
      CopyNumberedPngs(src / "masks", staged / "masks");
      CopyNumberedPngs(src / "gt", staged / "gt");
    }

    auto e = FinishStaged(staged, id);
    fs::rename(staged, final_dir);
    e->dir = final_dir;
    Register(e);
    Reply(res, 201, {{"id", e->id},
                     {"frame_count", e->frame_numbers.size()},
                     {"dims", {{"height", e->height}, {"width", e->width}}}});
  }));

  server.Get("/sequences/:id", Wrap([this](const httplib::Request& req, httplib::Response& res) {
               auto e = Find(req.path_params.at("id"));
               std::lock_guard lock(e->mu);
               Reply(res, 200, e->Describe());
             }));

  server.Put("/sequences/:id/annotations/:frame",
             Wrap([this](const httplib::Request& req, httplib::Response& res) {
               auto e = Find(req.path_params.at("id"));
               const int frame = ParseFrame(req.path_params.at("frame"));
               if (!e->HasFrame(frame))
                 Throw(404, "unknown_frame", "sequence has no frame " + std::to_string(frame));
               std::string text = req.body;
               if (req.get_header_value("Content-Type").find("json") != std::string::npos) {
                 const json body = json::parse(req.body);
                 if (!body.contains("png") || !body["png"].is_string())
                   Throw(400, "bad_request", "expected {\"png\": \"<base64>\"}");
                 text = body["png"].get<std::string>();
               }
               const Bytes png = DecodeBase64(text);
               MaskMap m;
               try {
                 m = DecodeMaskPng(png);
               } catch (const Error& err) {
                 Throw(400, "undecodable_image", err.what());
               }
               if (m.height() != e->height || m.width() != e->width)
                 Throw(422, "dim_mismatch",
                       "mask is " + std::to_string(m.height()) + "x" + std::to_string(m.width()) +
                           ", frames are " + std::to_string(e->height) + "x" +
                           std::to_string(e->width));
               if (!m.HasForeground()) Throw(422, "empty_mask", "mask has no foreground pixels");
               std::lock_guard lock(e->mu);
               fs::create_directories(e->dir / "masks");
               WriteFileBytes(e->dir / "masks" / FrameFileName(frame), png);
               res.status = 204;
             }));

  server.Post("/sequences/:id/propagate",
              Wrap([this](const httplib::Request& req, httplib::Response& res) {
                auto e = Find(req.path_params.at("id"));
                const json body = req.body.empty() ? json::object() : json::parse(req.body);
                if (!body.contains("from") || !body["from"].is_number_integer())
                  Throw(400, "bad_request", "'from' (frame number) is required");
                const int from = body["from"].get<int>();
                if (!e->HasFrame(from))
                  Throw(404, "unknown_frame", "sequence has no frame " + std::to_string(from));
                const std::string direction = body.value("direction", std::string("forward"));

                std::string text;
                const json overrides = body.value("config", json::object());
                if (!overrides.is_object())
                  Throw(400, "invalid_config", "'config' must be an object");
                for (const auto& [k, v] : overrides.items())
                  text += k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
                text += "direction=" + direction + "\n";
                RunConfig cfg;
                try {
                  cfg = ParseRunConfig(text, e->dir);
                } catch (const Error& err) {
                  Throw(400, "invalid_config", err.what());
                }

                std::unique_lock lock(e->mu);
                if (e->Running()) Throw(409, "already_running", "a propagation is running");
                std::error_code ec;
                if (!fs::is_regular_file(e->dir / "masks" / FrameFileName(from), ec))
                  Throw(422, "no_annotation", "no annotation at frame " + std::to_string(from));
                if (e->worker.joinable()) {
                  std::thread old = std::move(e->worker);
                  lock.unlock();
                  old.join();
                  lock.lock();
                  if (e->Running()) Throw(409, "already_running", "a propagation is running");
                }

                RunInfo r;
                r.id = e->runs.empty() ? 1 : e->runs.back().id + 1;
                r.status = "running";
                r.from = from;
                r.direction = ToString(cfg.propagation.direction);
                r.config = overrides;
                r.metric_tol = cfg.metric_tol;
                const int n = static_cast<int>(e->frame_numbers.size());
                const int pos = static_cast<int>(
                    std::lower_bound(e->frame_numbers.begin(), e->frame_numbers.end(), from) -
                    e->frame_numbers.begin());
                switch (cfg.propagation.direction) {
                  case Direction::kForward: r.frames_total = n - pos; break;
                  case Direction::kBackward: r.frames_total = pos + 1; break;
                  case Direction::kBoth: r.frames_total = n; break;
                }
                fs::create_directories(e->RunDir(r.id));
                e->PersistRun(r);
                e->runs.push_back(r);
                e->worker = std::thread(Propagate, e, r.id, cfg, from);
                Reply(res, 202, {{"run_id", r.id}, {"status", r.status}});
              }));

  server.Get("/sequences/:id/masks/:frame",
             Wrap([this](const httplib::Request& req, httplib::Response& res) {
               auto e = Find(req.path_params.at("id"));
               const int frame = ParseFrame(req.path_params.at("frame"));
               if (!e->HasFrame(frame))
                 Throw(404, "unknown_frame", "sequence has no frame " + std::to_string(frame));
               const std::string run = req.has_param("run") ? req.get_param_value("run") : "latest";
               std::vector<int> candidates;
               {
                 std::lock_guard lock(e->mu);
                 if (run == "latest") {
                   for (auto it = e->runs.rbegin(); it != e->runs.rend(); ++it)
                     candidates.push_back(it->id);
                 } else {
                   const int id = ParseFrame(run);
                   if (!e->FindRun(id)) Throw(404, "unknown_run", "no run " + run);
                   candidates.push_back(id);
                 }
               }
               std::error_code ec;
               for (int id : candidates) {
                 const fs::path p = e->RunDir(id) / FrameFileName(frame);
                 if (!fs::is_regular_file(p, ec)) continue;
                 const Bytes b = ReadFileBytes(p);
                 res.status = 200;
                 res.set_header("X-Run-Id", std::to_string(id));
                 res.set_content(std::string(b.begin(), b.end()), "image/png");
                 return;
               }
               Throw(404, "mask_not_ready", "no mask for frame " + std::to_string(frame) + " yet");
             }));

  server.Get("/sequences/:id/report",
             Wrap([this](const httplib::Request& req, httplib::Response& res) {
               auto e = Find(req.path_params.at("id"));
               if (!e->has_gt) Throw(409, "no_ground_truth", "sequence has no ground truth");
               const std::string run = req.has_param("run") ? req.get_param_value("run") : "latest";
               std::vector<RunInfo> done;
               {
                 std::lock_guard lock(e->mu);
                 if (run == "latest") {
                   for (auto it = e->runs.rbegin(); it != e->runs.rend(); ++it)
                     if (it->status == "done") done.push_back(*it);
                 } else {
                   const RunInfo* r = e->FindRun(ParseFrame(run));
                   if (!r) Throw(404, "unknown_run", "no run " + run);
                   if (r->status != "done") Throw(409, "run_not_done", "run " + run + " is " + r->status);
                   done.push_back(*r);
                 }
               }
               if (done.empty()) Throw(409, "no_completed_run", "no completed run yet");

               SequenceReport rep;
               if (done.size() == 1) {
                 rep = EvaluateFolders(e->RunDir(done[0].id), e->dir, done[0].metric_tol);
               } else {
                 // Newest run wins per frame; each run's own annotated frame is excluded.
                 std::map<int, MaskMap> preds;
                 std::vector<int> exclude;
                 for (const RunInfo& r : done) {
                   for (const auto& [n, m] : LoadMaskFolder(e->RunDir(r.id))) {
                     if (preds.count(n)) continue;
                     preds.emplace(n, m);
                     if (n == r.from) exclude.push_back(n);
                   }
                 }
                 rep = EvaluateMasks(preds, LoadMaskFolder(e->dir / "gt"), exclude,
                                     done[0].metric_tol, "latest");
               }
               json frames = json::array();
               for (std::size_t i = 0; i < rep.scores.size(); ++i)
                 frames.push_back({{"frame", rep.frames[i]},
                                   {"j", rep.scores[i].j},
                                   {"f", rep.scores[i].f},
                                   {"jf", rep.scores[i].jf}});
               json runs = json::array();
               for (const RunInfo& r : done) runs.push_back(r.id);
               Reply(res, 200,
                     {{"runs", runs},
                      {"frames", frames},
                      {"j", {{"mean", rep.j.mean}, {"std", rep.j.std}}},
                      {"f", {{"mean", rep.f.mean}, {"std", rep.f.std}}},
                      {"jf", {{"mean", rep.jf.mean}, {"std", rep.jf.std}}},
                      {"record", FormatReportRecord(rep)}});
             }));
}

bool Serve(const std::string& host, int port, const ServiceOptions& opts) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  httplib::Server server;
  Service service(opts);
  service.Mount(server);
  if (!server.bind_to_port(host, port)) return false;
  std::fprintf(stderr, "mosseg: serving %s on %s:%d\n", opts.data_dir.c_str(), host.c_str(),
               port);

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.listen_after_bind();
  // Wakes the waiter when listen returned on its own.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  service.WaitForRuns();
  return true;
}

}  // namespace mosseg
