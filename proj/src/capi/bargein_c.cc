// src/capi/bargein_c.cc

// Copyright 2026  The bargein Authors

// See ../../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "bargein/bargein.h"

#include <cstring>
#include <iostream>
#include <memory>
#include <string>

#include "config.h"
#include "error.h"
#include "metrics.h"
#include "pipeline.h"

struct bg_config {
  bargein::RunConfig cfg;
};

struct bg_model {
  bargein::NamedClassifier classifier;
};

namespace {

thread_local std::string g_error;

bg_status Fail(bg_status s, const std::string &msg) {
  g_error = msg;
  return s;
}

bg_status FromKind(bargein::ErrorKind k) {
  switch (k) {
    case bargein::ErrorKind::kValidation: return BG_ERR_VALIDATION;
    case bargein::ErrorKind::kConfig: return BG_ERR_CONFIG;
    case bargein::ErrorKind::kIo: return BG_ERR_IO;
    case bargein::ErrorKind::kNumeric: return BG_ERR_NUMERIC;
    default: return BG_ERR_RUNTIME;
  }
}

// Runs fn, translating exceptions into status codes and the thread-local
// error message.
template <typename Fn>
bg_status Guard(Fn &&fn) {
  try {
    g_error.clear();
    return fn();
  } catch (const bargein::Error &e) {
    return Fail(FromKind(e.kind()), e.what());
  } catch (const std::bad_alloc &) {
    return Fail(BG_ERR_RUNTIME, "out of memory");
  } catch (const std::exception &e) {
    return Fail(BG_ERR_RUNTIME, e.what());
  } catch (...) {
    return Fail(BG_ERR_RUNTIME, "unknown error");
  }
}

bg_status CopyOut(const std::string &s, char *buf, size_t len) {
  if (!buf) return BG_OK;
  if (s.size() + 1 > len)
    return Fail(BG_ERR_ARGUMENT, "buffer of " + std::to_string(len) + " bytes is too short for " +
                                     std::to_string(s.size() + 1));
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return BG_OK;
}

bool ToLabel(int v, bargein::BargeInLabel *out) {
  if (v == BG_TRUE_BARGE_IN) *out = bargein::BargeInLabel::kTrue;
  else if (v == BG_FALSE_BARGE_IN) *out = bargein::BargeInLabel::kFalse;
  else return false;
  return true;
}

}  // namespace

extern "C" {

const char *bg_version(void) { return "0.1.0"; }

const char *bg_status_name(bg_status s) {
  switch (s) {
    case BG_OK: return "ok";
    case BG_ERR_ARGUMENT: return "invalid argument";
    case BG_ERR_CONFIG: return "config error";
    case BG_ERR_VALIDATION: return "validation error";
    case BG_ERR_IO: return "i/o error";
    case BG_ERR_NUMERIC: return "numeric error";
    case BG_ERR_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

const char *bg_last_error(void) { return g_error.c_str(); }

void bg_set_verbose(int verbose) { bargein::SetLogStream(verbose ? &std::clog : nullptr); }

size_t bg_command_count(void) { return bargein::Commands().size(); }

const char *bg_command_name(size_t i) {
  const auto &c = bargein::Commands();
  return i < c.size() ? c[i].name : nullptr;
}

const char *bg_command_help(size_t i) {
  const auto &c = bargein::Commands();
  return i < c.size() ? c[i].help : nullptr;
}

size_t bg_key_count(void) { return bargein::ConfigKeys().size(); }

bg_status bg_key_info(size_t i, const char **name, const char **default_value,
                      const char **help) {
  const auto &k = bargein::ConfigKeys();
  if (i >= k.size()) return Fail(BG_ERR_ARGUMENT, "key index out of range");
  if (name) *name = k[i].name;
  if (default_value) *default_value = k[i].default_value;
  if (help) *help = k[i].help;
  return BG_OK;
}

int bg_key_applies(size_t i, const char *command) {
  const auto &k = bargein::ConfigKeys();
  if (i >= k.size() || !command) return 0;
  for (const auto &c : bargein::Commands())
    if (std::strcmp(c.name, command) == 0) return (k[i].commands & c.command) ? 1 : 0;
  return 0;
}

bg_status bg_config_create(bg_config **out) {
  if (!out) return Fail(BG_ERR_ARGUMENT, "out is null");
  return Guard([&] {
    *out = new bg_config();
    return BG_OK;
  });
}

void bg_config_destroy(bg_config *config) { delete config; }

bg_status bg_config_load(bg_config *config, const char *path) {
  if (!config || !path) return Fail(BG_ERR_ARGUMENT, "config and path must be non-null");
  // An unreadable config file is a usage problem, not a runtime failure.
  return Guard([&] {
    try {
      config->cfg.LoadFile(path);
    } catch (const bargein::IoError &e) {
      throw bargein::ConfigError(e.what());
    }
    return BG_OK;
  });
}

bg_status bg_config_set(bg_config *config, const char *key, const char *value) {
  if (!config || !key || !value) return Fail(BG_ERR_ARGUMENT, "null argument");
  return Guard([&] {
    config->cfg.Set(key, value);
    return BG_OK;
  });
}

bg_status bg_config_get(const bg_config *config, const char *key, char *buf, size_t len) {
  if (!config || !key) return Fail(BG_ERR_ARGUMENT, "null argument");
  return Guard([&] { return CopyOut(config->cfg.Get(key), buf, len); });
}

bg_status bg_run(const char *command, const bg_config *config, const char *out_dir,
                 char *run_dir, size_t run_dir_len) {
  if (!command || !config) return Fail(BG_ERR_ARGUMENT, "command and config must be non-null");
  return Guard([&] {
    const bargein::Command c = bargein::ParseCommand(command);
    const auto dir = bargein::RunCommand(c, config->cfg, out_dir ? out_dir : "");
    return CopyOut(dir.string(), run_dir, run_dir_len);
  });
}

bg_status bg_model_load(const char *path, bg_model **out) {
  if (!path || !out) return Fail(BG_ERR_ARGUMENT, "path and out must be non-null");
  return Guard([&] {
    auto m = std::make_unique<bg_model>();
    m->classifier = bargein::LoadClassifier(path);
    *out = m.release();
    return BG_OK;
  });
}

void bg_model_destroy(bg_model *model) { delete model; }

const char *bg_model_name(const bg_model *model) {
  return model ? model->classifier.name.c_str() : nullptr;
}

const char *bg_model_inputs(const bg_model *model) {
  return model ? model->classifier.inputs.c_str() : nullptr;
}

bg_status bg_model_classify(const bg_model *model, const float *samples, size_t n,
                            int sample_rate, const char *prompt, const char *context,
                            int *label) {
  if (!model || !samples || !label) return Fail(BG_ERR_ARGUMENT, "null argument");
  const std::string &inputs = model->classifier.inputs;
  if (inputs.find("prompt") != std::string::npos && !prompt)
    return Fail(BG_ERR_ARGUMENT, "model uses the bot prompt but none was given");
  if (inputs.find("context") != std::string::npos && !context)
    return Fail(BG_ERR_ARGUMENT, "model uses the dialogue context but none was given");
  return Guard([&] {
    bargein::DialogueTurn t;
    t.user.samples.assign(samples, samples + n);
    t.user.sample_rate = sample_rate;
    if (prompt) t.prompt_text = prompt;
    if (context) t.context = bargein::ContextRegistry::Default().Find(context);
    *label = model->classifier.classify(t, nullptr) == bargein::BargeInLabel::kTrue
                 ? BG_TRUE_BARGE_IN
                 : BG_FALSE_BARGE_IN;
    return BG_OK;
  });
}

bg_status bg_metrics(const int *predictions, const int *truths, size_t n, double *avg_recall,
                     double *f1) {
  if ((!predictions || !truths) && n > 0) return Fail(BG_ERR_ARGUMENT, "null label array");
  if (!avg_recall || !f1) return Fail(BG_ERR_ARGUMENT, "null output");
  return Guard([&] {
    std::vector<bargein::BargeInLabel> p(n), t(n);
    for (size_t i = 0; i < n; ++i)
      if (!ToLabel(predictions[i], &p[i]) || !ToLabel(truths[i], &t[i]))
        throw bargein::ValidationError("labels must be 0 (true) or 1 (false)");
    const bargein::Metrics m = bargein::ComputeMetrics(p, t);
    *avg_recall = m.avg_recall;
    *f1 = m.f1;
    return BG_OK;
  });
}

}  // extern "C"
