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

// mosseg command line: propagate, evaluate, synth, serve, bench.

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mosseg/mosseg.h"

namespace fs = std::filesystem;

namespace {

struct Failure {
  int code;
};

void Ok(mosseg_status s, const std::string& what) {
  if (s == MOSSEG_OK) return;
  std::fprintf(stderr, "mosseg: %s: %s: %s\n", what.c_str(), mosseg_status_name(s),
               mosseg_last_error());
  throw Failure{1};
}

[[noreturn]] void Die(const std::string& msg) {
  std::fprintf(stderr, "mosseg: %s\n", msg.c_str());
  throw Failure{1};
}

template <typename T, void (*Destroy)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<mosseg_config, mosseg_config_destroy>;
using Sequence = Handle<mosseg_sequence, mosseg_sequence_destroy>;
using Result = Handle<mosseg_result, mosseg_result_destroy>;
using Report = Handle<mosseg_report, mosseg_report_destroy>;
using Buffer = Handle<mosseg_buffer, mosseg_buffer_destroy>;

std::string Text(const Buffer& b) {
  return {reinterpret_cast<const char*>(mosseg_buffer_data(b.get())),
          mosseg_buffer_size(b.get())};
}

void LoadConfig(const std::string& path, Config& cfg) {
  if (path.empty()) {
    Ok(mosseg_config_create(cfg.out()), "config");
  } else {
    Ok(mosseg_config_load(path.c_str(), cfg.out()), "config " + path);
  }
}

// ---- propagate

struct PropagateArgs {
  std::string seq, config, out, direction;
  int annotated = 0;
};

int Propagate(const PropagateArgs& a) {
  Config cfg;
  LoadConfig(a.config, cfg);
  if (!a.direction.empty())
    Ok(mosseg_config_set(cfg.get(), "direction", a.direction.c_str()), "--direction");
  Sequence seq;
  Ok(mosseg_sequence_load(a.seq.c_str(), cfg.get(), seq.out()), "sequence " + a.seq);
  const int pos = mosseg_sequence_position(seq.get(), a.annotated);
  if (pos < 0) Die("sequence has no frame " + std::to_string(a.annotated));
  if (!mosseg_sequence_has_annotation(seq.get(), pos))
    Die("no annotation for frame " + std::to_string(a.annotated) + " in " + a.seq + "/masks");
  Result result;
  Ok(mosseg_propagate(seq.get(), pos, cfg.get(), nullptr, nullptr, result.out()), "propagate");
  Ok(mosseg_result_write(result.get(), seq.get(), cfg.get(), a.out.c_str()), "write " + a.out);
  int written = 0;
  for (int p = 0; p < mosseg_result_frame_count(result.get()); ++p)
    written += mosseg_result_mask(result.get(), p) != nullptr;
  std::printf("wrote %d masks and %d consolidation events to %s\n", written,
              mosseg_result_event_count(result.get()), a.out.c_str());
  return 0;
}

// ---- evaluate

struct EvaluateArgs {
  std::string pred, gt, out, config;
  bool include_annotated = false;
};

bool HasPngs(const fs::path& dir) {
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec))
    if (e.path().extension() == ".png") return true;
  return false;
}

std::string EvaluateOne(const fs::path& pred, const fs::path& gt, const mosseg_config* cfg,
                        bool include_annotated) {
  Report rep;
  Ok(mosseg_evaluate_dirs(pred.c_str(), gt.c_str(), cfg, include_annotated, rep.out()),
     "evaluate " + pred.string());
  Buffer table, record;
  Ok(mosseg_report_render(rep.get(), MOSSEG_REPORT_TABLE, table.out()), "report");
  Ok(mosseg_report_render(rep.get(), MOSSEG_REPORT_RECORD, record.out()), "report");
  return Text(table) + Text(record);
}

int Evaluate(const EvaluateArgs& a) {
  Config cfg;
  LoadConfig(a.config, cfg);
  std::string text;
  if (HasPngs(a.pred)) {
    text = EvaluateOne(a.pred, a.gt, cfg.get(), a.include_annotated);
  } else {
    // One subdirectory per sequence, scored concurrently.
    std::vector<fs::path> dirs;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(a.pred, ec))
      if (e.is_directory() && HasPngs(e.path())) dirs.push_back(e.path());
    if (ec) Die("cannot read " + a.pred + ": " + ec.message());
    if (dirs.empty()) Die("no predicted masks under " + a.pred);
    std::sort(dirs.begin(), dirs.end());
    std::vector<std::future<std::string>> jobs;
    for (const auto& d : dirs)
      jobs.push_back(std::async(std::launch::async, [&, d] {
        return EvaluateOne(d, fs::path(a.gt) / d.filename(), cfg.get(), a.include_annotated);
      }));
    for (auto& j : jobs) text += j.get();
  }
  std::fputs(text.c_str(), stdout);
  if (!a.out.empty()) {
    std::ofstream f(a.out, std::ios::binary);
    f << text;
    if (!f) Die("cannot write " + a.out);
  }
  return 0;
}

// ---- bench

void PrintCriterion(void*, const char* name, int passed, const char* detail) {
  std::printf("%s %s  %s\n", passed ? "PASS" : "FAIL", name, detail);
  std::fflush(stdout);
}

std::string SelfPath() {
  std::error_code ec;
  const fs::path p = fs::read_symlink("/proc/self/exe", ec);
  return ec ? std::string() : p.string();
}

int Bench(const std::string& scratch, std::string cli) {
  if (cli.empty()) cli = SelfPath();
  int failed = 0;
  Ok(mosseg_bench_run(cli.empty() ? nullptr : cli.c_str(),
                      scratch.empty() ? nullptr : scratch.c_str(), PrintCriterion, nullptr,
                      &failed),
     "bench");
  std::printf("%s: %d criteria failed\n", failed ? "FAIL" : "PASS", failed);
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mosseg: semi-supervised mask propagation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mosseg_version()));

  PropagateArgs prop;
  auto* p = app.add_subcommand("propagate", "propagate an annotation through a sequence folder");
  p->add_option("--seq", prop.seq, "sequence folder (frames/, masks/)")->required();
  p->add_option("--annotated", prop.annotated, "annotated frame number")->required();
  p->add_option("--direction", prop.direction, "forward | backward | both (overrides config)")
      ->check(CLI::IsMember({"forward", "backward", "both"}));
  p->add_option("--config", prop.config, "key=value config file");
  p->add_option("--out", prop.out, "output directory")->required();

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "score predicted masks against ground truth");
  e->add_option("--pred", ev.pred, "predicted mask directory (or one per sequence)")->required();
  e->add_option("--gt", ev.gt, "ground-truth mask directory or sequence folder")->required();
  e->add_option("--out", ev.out, "also write the report to this file");
  e->add_option("--config", ev.config, "config file (metric_tol)");
  e->add_flag("--include-annotated", ev.include_annotated, "score the annotated frame too");

  std::string spec, synth_out;
  bool split = false;
  auto* s = app.add_subcommand("synth", "generate a synthetic sequence corpus");
  s->add_option("--spec", spec, "synth spec file")->required();
  s->add_option("--out", synth_out, "output directory")->required();
  s->add_flag("--split", split, "lay sequences out as train/val/test (3:1:1)");

  int port = 8080;
  std::string data, host = "0.0.0.0";
  std::size_t max_upload_mb = 256;
  auto* v = app.add_subcommand("serve", "run the annotation HTTP service");
  v->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
  v->add_option("--host", host, "bind address");
  v->add_option("--data", data, "data directory")->required();
  v->add_option("--max-upload-mb", max_upload_mb, "request body limit in MiB")
      ->check(CLI::PositiveNumber);

  std::string scratch, cli_path;
  auto* b = app.add_subcommand("bench", "run the acceptance suite");
  b->add_option("--scratch", scratch, "scratch directory for the pipeline criterion");
  b->add_option("--cli", cli_path, "CLI executable for the pipeline criterion (default: self)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*p) return Propagate(prop);
    if (*e) return Evaluate(ev);
    if (*s) {
      Ok(mosseg_synth(spec.c_str(), synth_out.c_str(), split ? 1 : 0), "synth");
      std::printf("wrote %s\n", synth_out.c_str());
      return 0;
    }
    if (*v) {
      Ok(mosseg_serve(host.c_str(), port, data.c_str(), max_upload_mb), "serve");
      return 0;
    }
    if (*b) return Bench(scratch, cli_path);
  } catch (const Failure& f) {
    return f.code;
  }
  return 1;
}
