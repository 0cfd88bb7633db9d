#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "digitforge/pipeline.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kGateFailure = 1;
constexpr int kUsageError = 2;
constexpr int kInternalError = 3;

int classify(const df::Error& e) {
  switch (e.kind()) {
    case df::Err::InvalidArgument:
      return kUsageError;
    default:
      return kInternalError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"digitforge: CT volume to prosthetic finger mould geometry"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;

  const std::vector<std::string> stages = {"phantom", "ingest",  "mesh", "mirror",
                                           "register", "sleeve", "mould", "export"};
  std::vector<CLI::App*> subs;
  CLI::App* run = app.add_subcommand("run", "run the full pipeline");
  subs.push_back(run);
  for (const auto& s : stages) subs.push_back(app.add_subcommand(s, "run the " + s + " stage"));
  for (CLI::App* sub : subs) {
    sub->add_option("--config", config_path, "pipeline configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
      seed_set = true;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kUsageError;
  }

  try {
    df::PipelineConfig cfg = df::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed_set) cfg.phantom.seed = seed;

    if (run->parsed()) {
      df::PipelineResult res = df::run_pipeline(cfg);
      std::cout << "manifest: " << res.manifest_path.string() << "\n";
      if (!res.gates_passed) {
        std::cerr << "validation gates failed\n";
        return kGateFailure;
      }
      return kOk;
    }
    for (size_t i = 0; i < stages.size(); ++i) {
      if (subs[i + 1]->parsed()) {
        df::run_stage(cfg, stages[i]);
        return kOk;
      }
    }
    return kUsageError;
  } catch (const df::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}
