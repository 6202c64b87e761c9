// Command-line front end for the nextcat pipeline. Talks to the core only
// through the C API so it doubles as a smoke test of the shared library.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nextcat.h"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "JSON run configuration (defaults used when omitted)");
  cmd->add_option("--out", opts.out_dir, "Output directory override");
  cmd->add_option("--seed", opts.seed, "Seed override")
      ->each([&opts](const std::string&) { opts.has_seed = true; });
}

class Session {
public:
  explicit Session(const CommonOpts& opts) {
    nc_status st = nc_session_open(
        opts.config_path.empty() ? nullptr : opts.config_path.c_str(),
        opts.out_dir.empty() ? nullptr : opts.out_dir.c_str(), opts.seed,
        opts.has_seed ? 1 : 0, &handle_);
    if (st != NC_OK) throw std::runtime_error("could not open session");
  }
  ~Session() { nc_session_close(handle_); }
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  int run(const char* what, nc_status st) {
    if (st == NC_OK) {
      std::cerr << "nextcat: " << what << " done\n";
      return 0;
    }
    std::cerr << "nextcat: " << what << " failed: " << nc_last_error(handle_)
              << "\n";
    return 1;
  }

  nc_session* get() { return handle_; }

private:
  nc_session* handle_ = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic next-purchase-category benchmark pipeline"};
  app.require_subcommand(1);

  struct Cmd {
    CLI::App* sub;
    CommonOpts opts;
  };
  auto make = [&](const std::string& name, const std::string& desc) {
    auto cmd = std::make_shared<Cmd>();
    cmd->sub = app.add_subcommand(name, desc);
    add_common(cmd->sub, cmd->opts);
    return cmd;
  };

  auto gen = make("gen-data", "Generate the synthetic bank_a/bank_b datasets");
  auto pre = make("preprocess", "Filter users and consolidate categories");
  auto mki = make("make-instructions", "Serialize training windows to JSONL");
  auto trn = make("train", "Train one classical model");
  std::string train_model;
  trn->sub->add_option("model", train_model, "baseline | lstm | cnn")
      ->required();
  auto plm = make("pretrain-lm", "Pretrain the base language model");
  auto ftl = make("finetune-lora", "Fine-tune low-rank adapters");
  auto evl = make("evaluate", "Score every model on bank_b");
  auto rep = make("report", "Render report.md and report.csv from report.json");
  auto all = make("run-all", "Run the whole pipeline end to end");
  auto slf = make("selftest", "Run the built-in verification checks");
  bool inject_fault = false;
  slf->sub
      ->add_flag("--inject-fault", inject_fault,
                 "Deliberately corrupt one gradient (must make selftest fail)")
      ->group("");  // test hook, hidden from --help

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->sub->parsed()) {
      Session s(gen->opts);
      return s.run("gen-data", nc_gen_data(s.get()));
    }
    if (pre->sub->parsed()) {
      Session s(pre->opts);
      return s.run("preprocess", nc_preprocess(s.get()));
    }
    if (mki->sub->parsed()) {
      Session s(mki->opts);
      return s.run("make-instructions", nc_make_instructions(s.get()));
    }
    if (trn->sub->parsed()) {
      Session s(trn->opts);
      return s.run(("train " + train_model).c_str(),
                   nc_train(s.get(), train_model.c_str()));
    }
    if (plm->sub->parsed()) {
      Session s(plm->opts);
      return s.run("pretrain-lm", nc_pretrain_lm(s.get()));
    }
    if (ftl->sub->parsed()) {
      Session s(ftl->opts);
      return s.run("finetune-lora", nc_finetune_lora(s.get()));
    }
    if (evl->sub->parsed()) {
      Session s(evl->opts);
      return s.run("evaluate", nc_evaluate(s.get()));
    }
    if (rep->sub->parsed()) {
      Session s(rep->opts);
      return s.run("report", nc_report(s.get()));
    }
    if (all->sub->parsed()) {
      Session s(all->opts);
      return s.run("run-all", nc_run_all(s.get()));
    }
    if (slf->sub->parsed()) {
      Session s(slf->opts);
      return s.run("selftest", nc_selftest(s.get(), inject_fault ? 1 : 0));
    }
  } catch (const std::exception& e) {
    std::cerr << "nextcat: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
