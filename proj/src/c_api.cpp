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

#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "bench.hpp"
#include "config.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "mosseg/mosseg.h"
#include "pipeline.hpp"
#include "png_io.hpp"
#include "propagator.hpp"
#include "sequence.hpp"
#include "service.hpp"
#include "synth_spec.hpp"

using namespace mosseg;

struct mosseg_buffer {
  Bytes bytes;
};
struct mosseg_config {
  RunConfig cfg;
};
struct mosseg_sequence {
  SequenceFolder seq;
};
struct mosseg_mask {
  MaskMap mask;
};
struct mosseg_result {
  FolderRun run;
  std::vector<std::unique_ptr<mosseg_mask>> masks;  // null where not covered
};
struct mosseg_session {
  std::unique_ptr<Session> session;
};
struct mosseg_report {
  SequenceReport report;
};

namespace {

thread_local std::string g_last_error;

mosseg_status StatusOf(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return MOSSEG_ERR_INVALID_ARGUMENT;
    case ErrorKind::kInvalidState: return MOSSEG_ERR_INVALID_STATE;
    case ErrorKind::kNotFound: return MOSSEG_ERR_NOT_FOUND;
    case ErrorKind::kIo: return MOSSEG_ERR_IO;
    case ErrorKind::kFormat: return MOSSEG_ERR_FORMAT;
    case ErrorKind::kInternal: return MOSSEG_ERR_INTERNAL;
  }
  return MOSSEG_ERR_INTERNAL;
}

template <typename Fn>
mosseg_status Guard(Fn&& fn) {
  try {
    fn();
    return MOSSEG_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return StatusOf(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MOSSEG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MOSSEG_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return MOSSEG_ERR_INTERNAL;
  }
}

template <typename T>
void NotNull(const T* p, const char* what) {
  Check(p != nullptr, ErrorKind::kInvalidArgument, std::string(what) + " is NULL");
}

std::string Str(const char* s, const char* what) {
  NotNull(s, what);
  return s;
}

void CheckPosition(const SequenceFolder& seq, int position) {
  Check(position >= 0 && position < seq.size(), ErrorKind::kInvalidArgument,
        "frame position " + std::to_string(position) + " out of range [0, " +
            std::to_string(seq.size()) + ")");
}

const RunConfig& ConfigOrDefault(const mosseg_config* cfg) {
  static const RunConfig kDefault;
  return cfg ? cfg->cfg : kDefault;
}

template <typename T, typename... Args>
void Emit(T** out, Args&&... args) {
  NotNull(out, "out");
  *out = new T{std::forward<Args>(args)...};
}

}  // namespace

extern "C" {

const char* mosseg_version(void) { return "1.0.0"; }

const char* mosseg_last_error(void) { return g_last_error.c_str(); }

const char* mosseg_status_name(mosseg_status status) {
  switch (status) {
    case MOSSEG_OK: return "ok";
    case MOSSEG_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MOSSEG_ERR_INVALID_STATE: return "invalid_state";
    case MOSSEG_ERR_NOT_FOUND: return "not_found";
    case MOSSEG_ERR_IO: return "io_error";
    case MOSSEG_ERR_FORMAT: return "format_error";
    case MOSSEG_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

// ---- buffers

const uint8_t* mosseg_buffer_data(const mosseg_buffer* buffer) {
  return buffer ? buffer->bytes.data() : nullptr;
}
size_t mosseg_buffer_size(const mosseg_buffer* buffer) { return buffer ? buffer->bytes.size() : 0; }
void mosseg_buffer_destroy(mosseg_buffer* buffer) { delete buffer; }

static mosseg_buffer* TextBuffer(const std::string& s) {
  return new mosseg_buffer{Bytes(s.begin(), s.end())};
}

// ---- configuration

mosseg_status mosseg_config_create(mosseg_config** out) {
  return Guard([&] { Emit(out, RunConfig{}); });
}

mosseg_status mosseg_config_load(const char* path, mosseg_config** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new mosseg_config{LoadRunConfig(Str(path, "path"))};
  });
}

mosseg_status mosseg_config_parse(const char* text, mosseg_config** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new mosseg_config{ParseRunConfig(Str(text, "text"))};
  });
}

mosseg_status mosseg_config_clone(const mosseg_config* cfg, mosseg_config** out) {
  return Guard([&] {
    NotNull(cfg, "cfg");
    Emit(out, cfg->cfg);
  });
}

mosseg_status mosseg_config_set(mosseg_config* cfg, const char* key, const char* value) {
  return Guard([&] {
    NotNull(cfg, "cfg");
    RunConfig next = cfg->cfg;
    ApplyConfigKey(next, Str(key, "key"), Str(value, "value"));
    next.Validate();
    cfg->cfg = std::move(next);
  });
}

mosseg_status mosseg_config_format(const mosseg_config* cfg, mosseg_buffer** out) {
  return Guard([&] {
    NotNull(cfg, "cfg");
    NotNull(out, "out");
    *out = TextBuffer(FormatRunConfig(cfg->cfg));
  });
}

mosseg_direction mosseg_config_direction(const mosseg_config* cfg) {
  switch (ConfigOrDefault(cfg).propagation.direction) {
    case Direction::kForward: return MOSSEG_FORWARD;
    case Direction::kBackward: return MOSSEG_BACKWARD;
    case Direction::kBoth: return MOSSEG_BOTH;
  }
  return MOSSEG_FORWARD;
}

void mosseg_config_destroy(mosseg_config* cfg) { delete cfg; }

// ---- masks

mosseg_status mosseg_mask_create(int height, int width, const uint8_t* labels,
                                 mosseg_mask** out) {
  return Guard([&] {
    Check(height > 0 && width > 0, ErrorKind::kInvalidArgument, "mask dims must be positive");
    NotNull(labels, "labels");
    NotNull(out, "out");
    std::vector<uint8_t> v(labels, labels + static_cast<size_t>(height) * width);
    *out = new mosseg_mask{MaskMap::FromLabels(height, width, std::move(v))};
  });
}

mosseg_status mosseg_mask_decode_png(const uint8_t* data, size_t size, mosseg_mask** out) {
  return Guard([&] {
    NotNull(data, "data");
    NotNull(out, "out");
    *out = new mosseg_mask{DecodeMaskPng({data, size})};
  });
}

mosseg_status mosseg_mask_encode_png(const mosseg_mask* mask, mosseg_buffer** out) {
  return Guard([&] {
    NotNull(mask, "mask");
    NotNull(out, "out");
    *out = new mosseg_buffer{EncodeMaskPng(mask->mask)};
  });
}

mosseg_status mosseg_mask_read(const char* path, mosseg_mask** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new mosseg_mask{ReadMaskPng(Str(path, "path"))};
  });
}

mosseg_status mosseg_mask_write(const mosseg_mask* mask, const char* path) {
  return Guard([&] {
    NotNull(mask, "mask");
    WriteMaskPng(Str(path, "path"), mask->mask);
  });
}

int mosseg_mask_height(const mosseg_mask* mask) { return mask ? mask->mask.height() : 0; }
int mosseg_mask_width(const mosseg_mask* mask) { return mask ? mask->mask.width() : 0; }
const uint8_t* mosseg_mask_labels(const mosseg_mask* mask) {
  return mask ? mask->mask.labels().data() : nullptr;
}

int mosseg_mask_equal(const mosseg_mask* a, const mosseg_mask* b) {
  if (!a || !b) return a == b;
  const auto la = a->mask.labels();
  const auto lb = b->mask.labels();
  return a->mask.height() == b->mask.height() && a->mask.width() == b->mask.width() &&
         std::equal(la.begin(), la.end(), lb.begin(), lb.end());
}

void mosseg_mask_destroy(mosseg_mask* mask) { delete mask; }

// ---- sequences

mosseg_status mosseg_sequence_load(const char* dir, const mosseg_config* cfg,
                                   mosseg_sequence** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new mosseg_sequence{LoadSequence(Str(dir, "dir"), ConfigOrDefault(cfg).resolution)};
  });
}

int mosseg_sequence_frame_count(const mosseg_sequence* seq) { return seq ? seq->seq.size() : 0; }
int mosseg_sequence_height(const mosseg_sequence* seq) {
  return seq ? seq->seq.source_height : 0;
}
int mosseg_sequence_width(const mosseg_sequence* seq) { return seq ? seq->seq.source_width : 0; }

int mosseg_sequence_frame_number(const mosseg_sequence* seq, int position) {
  if (!seq || position < 0 || position >= seq->seq.size()) return -1;
  return seq->seq.frame_numbers[position];
}

int mosseg_sequence_position(const mosseg_sequence* seq, int frame_number) {
  return seq ? seq->seq.PositionOf(frame_number) : -1;
}

int mosseg_sequence_has_annotation(const mosseg_sequence* seq, int position) {
  return seq && seq->seq.annotations.count(position) ? 1 : 0;
}

int mosseg_sequence_has_ground_truth(const mosseg_sequence* seq) {
  return seq && !seq->seq.ground_truth.empty() ? 1 : 0;
}

mosseg_status mosseg_sequence_set_annotation(mosseg_sequence* seq, int position,
                                             const mosseg_mask* mask) {
  return Guard([&] {
    NotNull(seq, "seq");
    NotNull(mask, "mask");
    CheckPosition(seq->seq, position);
    Check(mask->mask.height() == seq->seq.source_height &&
              mask->mask.width() == seq->seq.source_width,
          ErrorKind::kInvalidArgument,
          "mask/frame dim mismatch: mask " + std::to_string(mask->mask.height()) + "x" +
              std::to_string(mask->mask.width()) + ", frames " +
              std::to_string(seq->seq.source_height) + "x" +
              std::to_string(seq->seq.source_width));
    seq->seq.annotations[position] = mask->mask;
  });
}

void mosseg_sequence_destroy(mosseg_sequence* seq) { delete seq; }

// ---- propagation

mosseg_status mosseg_propagate(const mosseg_sequence* seq, int annotated_position,
                               const mosseg_config* cfg, mosseg_frame_callback on_frame,
                               void* user, mosseg_result** out) {
  return Guard([&] {
    NotNull(seq, "seq");
    NotNull(out, "out");
    CheckPosition(seq->seq, annotated_position);
    std::function<void(int, const MaskMap&)> cb;
    if (on_frame) {
      cb = [&](int position, const MaskMap& m) {
        const mosseg_mask view{m};
        on_frame(user, position, &view);
      };
    }
    auto result = std::make_unique<mosseg_result>();
    result->run = PropagateFolder(seq->seq, annotated_position, ConfigOrDefault(cfg), cb);
    for (const MaskMap& m : result->run.masks)
      result->masks.push_back(m.empty() ? nullptr : std::make_unique<mosseg_mask>(m));
    *out = result.release();
  });
}

int mosseg_result_frame_count(const mosseg_result* result) {
  return result ? static_cast<int>(result->masks.size()) : 0;
}

const mosseg_mask* mosseg_result_mask(const mosseg_result* result, int position) {
  if (!result || position < 0 || position >= static_cast<int>(result->masks.size()))
    return nullptr;
  return result->masks[position].get();
}

int mosseg_result_event_count(const mosseg_result* result) {
  return result ? static_cast<int>(result->run.events.size()) : 0;
}

mosseg_status mosseg_result_event(const mosseg_result* result, int index, int* position,
                                  int* prototypes) {
  return Guard([&] {
    NotNull(result, "result");
    Check(index >= 0 && index < static_cast<int>(result->run.events.size()),
          ErrorKind::kInvalidArgument, "event index out of range");
    if (position) *position = result->run.events[index].frame;
    if (prototypes) *prototypes = result->run.events[index].prototypes;
  });
}

mosseg_status mosseg_result_write(const mosseg_result* result, const mosseg_sequence* seq,
                                  const mosseg_config* cfg, const char* dir) {
  return Guard([&] {
    NotNull(result, "result");
    NotNull(seq, "seq");
    Check(static_cast<int>(result->run.masks.size()) == seq->seq.size(),
          ErrorKind::kInvalidArgument, "result does not belong to this sequence");
    WriteRunOutput(Str(dir, "dir"), seq->seq, result->run, ConfigOrDefault(cfg));
  });
}

void mosseg_result_destroy(mosseg_result* result) { delete result; }

// ---- sessions

mosseg_status mosseg_session_create(const mosseg_sequence* seq, int annotated_position, int step,
                                    const mosseg_config* cfg, mosseg_session** out) {
  return Guard([&] {
    NotNull(seq, "seq");
    NotNull(out, "out");
    CheckPosition(seq->seq, annotated_position);
    Check(step == 1 || step == -1, ErrorKind::kInvalidArgument, "step must be +1 or -1");
    Check(seq->seq.annotations.count(annotated_position) > 0, ErrorKind::kNotFound,
          "no annotation at position " + std::to_string(annotated_position));
    const PropagationConfig& p = ConfigOrDefault(cfg).propagation;
    *out = new mosseg_session{std::make_unique<Session>(
        seq->seq.frames[annotated_position], seq->seq.WorkingAnnotation(annotated_position), p,
        annotated_position, step)};
  });
}

int mosseg_session_next_position(const mosseg_session* session) {
  return session ? session->session->next_frame() : -1;
}

mosseg_status mosseg_session_step(mosseg_session* session, const mosseg_sequence* seq,
                                  mosseg_mask** out) {
  return Guard([&] {
    NotNull(session, "session");
    NotNull(seq, "seq");
    NotNull(out, "out");
    const int pos = session->session->next_frame();
    Check(pos >= 0 && pos < seq->seq.size(), ErrorKind::kInvalidState,
          "session is past the end of the sequence (next position " + std::to_string(pos) + ")");
    *out = new mosseg_mask{session->session->Step(seq->seq.frames[pos], pos)};
  });
}

mosseg_status mosseg_session_save(const mosseg_session* session, const char* path) {
  return Guard([&] {
    NotNull(session, "session");
    std::ostringstream buf;
    session->session->Serialize(buf);
    const std::string s = buf.str();
    WriteFileBytes(Str(path, "path"), {reinterpret_cast<const uint8_t*>(s.data()), s.size()});
  });
}

mosseg_status mosseg_session_load(const char* path, mosseg_session** out) {
  return Guard([&] {
    NotNull(out, "out");
    const std::string p = Str(path, "path");
    std::ifstream in(p, std::ios::binary);
    Check(in.good(), ErrorKind::kNotFound, "cannot open session file: " + p);
    *out = new mosseg_session{std::make_unique<Session>(Session::Deserialize(in))};
  });
}

void mosseg_session_destroy(mosseg_session* session) { delete session; }

// ---- evaluation

mosseg_status mosseg_evaluate_dirs(const char* pred_dir, const char* gt_dir,
                                   const mosseg_config* cfg, int include_annotated,
                                   mosseg_report** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new mosseg_report{EvaluateFolders(Str(pred_dir, "pred_dir"), Str(gt_dir, "gt_dir"),
                                             ConfigOrDefault(cfg).metric_tol,
                                             include_annotated != 0)};
  });
}

mosseg_status mosseg_evaluate_result(const mosseg_result* result, const mosseg_sequence* seq,
                                     const mosseg_config* cfg, mosseg_report** out) {
  return Guard([&] {
    NotNull(result, "result");
    NotNull(seq, "seq");
    NotNull(out, "out");
    const SequenceFolder& s = seq->seq;
    Check(static_cast<int>(result->run.masks.size()) == s.size(), ErrorKind::kInvalidArgument,
          "result does not belong to this sequence");
    Check(!s.ground_truth.empty(), ErrorKind::kInvalidState, "sequence has no ground truth");
    std::map<int, MaskMap> preds, gts;
    for (int p = 0; p < s.size(); ++p)
      if (!result->run.masks[p].empty()) preds[s.frame_numbers[p]] = result->run.masks[p];
    for (const auto& [p, m] : s.ground_truth) gts[s.frame_numbers[p]] = m;
    *out = new mosseg_report{EvaluateMasks(preds, gts, {s.frame_numbers[result->run.annotated]},
                                           ConfigOrDefault(cfg).metric_tol,
                                           s.path.filename().string())};
  });
}

int mosseg_report_frame_count(const mosseg_report* report) {
  return report ? static_cast<int>(report->report.scores.size()) : 0;
}

mosseg_status mosseg_report_frame(const mosseg_report* report, int index, int* frame_number,
                                  double* j, double* f, double* jf) {
  return Guard([&] {
    NotNull(report, "report");
    const auto& r = report->report;
    Check(index >= 0 && index < static_cast<int>(r.scores.size()), ErrorKind::kInvalidArgument,
          "report index out of range");
    if (frame_number) *frame_number = r.frames[index];
    if (j) *j = r.scores[index].j;
    if (f) *f = r.scores[index].f;
    if (jf) *jf = r.scores[index].jf;
  });
}

mosseg_status mosseg_report_summary(const mosseg_report* report, double* j_mean, double* j_std,
                                    double* f_mean, double* f_std, double* jf_mean,
                                    double* jf_std) {
  return Guard([&] {
    NotNull(report, "report");
    const auto& r = report->report;
    if (j_mean) *j_mean = r.j.mean;
    if (j_std) *j_std = r.j.std;
    if (f_mean) *f_mean = r.f.mean;
    if (f_std) *f_std = r.f.std;
    if (jf_mean) *jf_mean = r.jf.mean;
    if (jf_std) *jf_std = r.jf.std;
  });
}

mosseg_status mosseg_report_render(const mosseg_report* report, mosseg_report_format format,
                                   mosseg_buffer** out) {
  return Guard([&] {
    NotNull(report, "report");
    NotNull(out, "out");
    Check(format == MOSSEG_REPORT_TABLE || format == MOSSEG_REPORT_RECORD,
          ErrorKind::kInvalidArgument, "unknown report format");
    *out = TextBuffer(format == MOSSEG_REPORT_TABLE ? FormatReportTable(report->report)
                                                    : FormatReportRecord(report->report) + "\n");
  });
}

void mosseg_report_destroy(mosseg_report* report) { delete report; }

// ---- synth and acceptance

mosseg_status mosseg_synth(const char* spec_path, const char* out_dir, int split) {
  return Guard([&] {
    const SynthJob job = LoadSynthSpec(Str(spec_path, "spec_path"));
    WriteSynthCorpus(job, Str(out_dir, "out_dir"), split != 0);
  });
}

mosseg_status mosseg_bench_run(const char* cli_path, const char* scratch_dir,
                               mosseg_bench_callback on_result, void* user, int* failed) {
  return Guard([&] {
    BenchOptions opts;
    if (cli_path) opts.cli_path = cli_path;
    if (scratch_dir) opts.scratch_dir = scratch_dir;
    int bad = 0;
    RunAcceptance(opts, [&](const CriterionResult& r) {
      bad += !r.passed;
      if (on_result) on_result(user, r.name.c_str(), r.passed ? 1 : 0, r.detail.c_str());
    });
    if (failed) *failed = bad;
  });
}

// ---- service

mosseg_status mosseg_serve(const char* host, int port, const char* data_dir,
                           size_t max_upload_mb) {
  return Guard([&] {
    Check(port >= 0 && port <= 65535, ErrorKind::kInvalidArgument,
          "port out of range: " + std::to_string(port));
    ServiceOptions opts;
    opts.data_dir = Str(data_dir, "data_dir");
    if (max_upload_mb > 0) opts.max_upload_bytes = max_upload_mb << 20;
    Check(Serve(host ? host : "0.0.0.0", port, opts), ErrorKind::kIo,
          "cannot bind port " + std::to_string(port));
  });
}

}  // extern "C"
