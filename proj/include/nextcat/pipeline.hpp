#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nextcat/runconfig.hpp"

namespace nextcat {

// Drives the train-on-A / test-on-B flow stage by stage. Every stage reads
// its inputs from files under out_dir, so commands are idempotent and can be
// re-run individually; a manifest tracks a content hash for every artifact.
class Pipeline {
public:
  explicit Pipeline(RunConfig config);

  const RunConfig& config() const { return config_; }

  void gen_data();
  void preprocess();
  void make_instructions();
  void train(const std::string& model);  // "baseline" | "lstm" | "cnn"
  void pretrain_lm();
  void finetune_lora();
  void evaluate();
  void report();
  void run_all();

  // Absolute location of a named artifact under out_dir.
  std::string path(const std::string& artifact) const;

private:
  void require_artifact(const std::string& artifact,
                        const std::string& producing_command) const;
  void record(const std::vector<std::string>& artifacts) const;

  RunConfig config_;
};

// Fast built-in verification: gradient checks, the baseline counting oracle,
// the adapter-at-zero identity, and a metrics self-consistency check.
// Returns 0 when everything passes. `inject_fault` corrupts one analytic
// gradient on purpose; a correct build must then return nonzero.
int selftest(bool inject_fault, std::ostream& log);

}  // namespace nextcat
