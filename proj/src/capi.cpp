#include "nextcat.h"

#include <iostream>
#include <memory>
#include <string>

#include "nextcat/pipeline.hpp"

struct nc_session {
  std::unique_ptr<nextcat::Pipeline> pipeline;
  std::string last_error;
};

namespace {

nc_status status_of(const std::exception& e) {
  using namespace nextcat;
  if (dynamic_cast<const ConfigError*>(&e)) return NC_ERR_CONFIG;
  if (dynamic_cast<const PrerequisiteError*>(&e)) return NC_ERR_PREREQUISITE;
  if (dynamic_cast<const ParseError*>(&e)) return NC_ERR_PARSE;
  if (dynamic_cast<const IoError*>(&e)) return NC_ERR_IO;
  if (dynamic_cast<const DimensionError*>(&e)) return NC_ERR_DIMENSION;
  return NC_ERR_INTERNAL;
}

template <typename Fn>
nc_status guarded(nc_session* session, Fn&& fn) {
  if (!session) return NC_ERR_INVALID_ARG;
  session->last_error.clear();
  try {
    fn(*session->pipeline);
    return NC_OK;
  } catch (const std::exception& e) {
    session->last_error = e.what();
    return status_of(e);
  } catch (...) {
    session->last_error = "unknown error";
    return NC_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

nc_status nc_session_open(const char* config_path, const char* out_dir_override,
                          uint64_t seed_override, int has_seed,
                          nc_session** out) {
  if (!out) return NC_ERR_INVALID_ARG;
  *out = nullptr;
  auto session = std::make_unique<nc_session>();
  try {
    nextcat::RunConfig config = config_path
                                    ? nextcat::load_config(config_path)
                                    : nextcat::default_config();
    if (out_dir_override) config.out_dir = out_dir_override;
    if (has_seed) config.seed = seed_override;
    session->pipeline = std::make_unique<nextcat::Pipeline>(std::move(config));
  } catch (const std::exception& e) {
    std::cerr << "nextcat: " << e.what() << "\n";
    return status_of(e);
  }
  *out = session.release();
  return NC_OK;
}

void nc_session_close(nc_session* session) { delete session; }

const char* nc_last_error(const nc_session* session) {
  return session ? session->last_error.c_str() : "";
}

nc_status nc_gen_data(nc_session* s) {
  return guarded(s, [](nextcat::Pipeline& p) { p.gen_data(); });
}

nc_status nc_preprocess(nc_session* s) {
  return guarded(s, [](nextcat::Pipeline& p) { p.preprocess(); });
}

nc_status nc_make_instructions(nc_session* s) {
  return guarded(s, [](nextcat::Pipeline& p) { p.make_instructions(); });
}

nc_status nc_train(nc_session* s, const char* model) {
  if (!model) {
    if (s) s->last_error = "model name is NULL";
    return NC_ERR_INVALID_ARG;
  }
  std::string name = model;
  return guarded(s, [&name](nextcat::Pipeline& p) { p.train(name); });
}

nc_status nc_pretrain_lm(nc_session* s) {
  return guarded(s, [](nextcat::Pipeline& p) { p.pretrain_lm(); });
}

nc_status nc_finetune_lora(nc_session* s) {
  return guarded(s, [](nextcat::Pipeline& p) { p.finetune_lora(); });
}

nc_status nc_evaluate(nc_session* s) {
  return guarded(s, [](nextcat::Pipeline& p) { p.evaluate(); });
}

nc_status nc_report(nc_session* s) {
  return guarded(s, [](nextcat::Pipeline& p) { p.report(); });
}

nc_status nc_run_all(nc_session* s) {
  return guarded(s, [](nextcat::Pipeline& p) { p.run_all(); });
}

nc_status nc_selftest(nc_session* s, int inject_fault) {
  return guarded(s, [inject_fault](nextcat::Pipeline&) {
    if (nextcat::selftest(inject_fault != 0, std::cerr) != 0)
      throw nextcat::Error("selftest failed");
  });
}

}  // extern "C"
