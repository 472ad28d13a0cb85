// xag: synthetic cross-modal matching with attack-node implantation.
//
// Subcommands: gen-data, train, eval, ablate, gradcheck. All numeric
// parameters come from a key=value config file; flags select paths and
// stages. Exit codes: 0 ok, 2 config error, 3 state error, 4 integrity
// error, 5 check failure, 1 anything else.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "xag/config.hpp"
#include "xag/data.hpp"
#include "xag/errors.hpp"
#include "xag/eval.hpp"
#include "xag/gradcheck.hpp"
#include "xag/log.hpp"
#include "xag/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitState = 3;
constexpr int kExitIntegrity = 4;
constexpr int kExitCheckFailure = 5;

void write_config_echo(const xag::RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  std::ofstream os(cfg.output_dir / "config.txt", std::ios::binary);
  if (!os) throw xag::StateError("cannot write config echo");
  os << xag::config_echo(cfg);
}

fs::path dataset_path(const xag::RunConfig& cfg, xag::Split split) {
  return cfg.output_dir / (xag::split_name(split) + ".xagd");
}

fs::path checkpoint_path(const xag::RunConfig& cfg, int stage) {
  if (stage == 0) return cfg.output_dir / "baseline.xagc";
  return cfg.output_dir / ("stage" + std::to_string(stage) + ".xagc");
}

xag::DatasetFile load_split(const xag::RunConfig& cfg, xag::Split split) {
  fs::path path = dataset_path(cfg, split);
  if (!fs::exists(path))
    throw xag::StateError("dataset " + path.string() + " not found; run gen-data first");
  return xag::read_dataset_file(path);
}

void check_bundle_config(const xag::CheckpointBundle& bundle, const xag::RunConfig& cfg) {
  if (bundle.config_hash != xag::config_hash(cfg))
    throw xag::IntegrityError("checkpoint was produced by a different config");
}

int cmd_gen_data(const xag::RunConfig& cfg) {
  write_config_echo(cfg);
  xag::DatasetTriplet sets = xag::generate(cfg.data);
  xag::write_dataset_file(dataset_path(cfg, xag::Split::Train), sets.train);
  xag::write_dataset_file(dataset_path(cfg, xag::Split::Val), sets.val);
  xag::write_dataset_file(dataset_path(cfg, xag::Split::Test), sets.test);
  std::printf("wrote %s, %s, %s\n", dataset_path(cfg, xag::Split::Train).string().c_str(),
              dataset_path(cfg, xag::Split::Val).string().c_str(),
              dataset_path(cfg, xag::Split::Test).string().c_str());
  return kExitOk;
}

int cmd_train(const xag::RunConfig& cfg, int stage, const std::string& from) {
  write_config_echo(cfg);
  xag::DatasetFile train = load_split(cfg, xag::Split::Train);
  xag::StageConfig stage_cfg = xag::stage_config(cfg, stage);
  xag::TrainHistory history;
  xag::CheckpointBundle bundle;

  if (stage == 1) {
    bundle = xag::train_stage1(stage_cfg, xag::model_dims(cfg), train, xag::config_hash(cfg),
                               &history);
  } else {
    fs::path parent_path = from.empty() ? checkpoint_path(cfg, stage - 1) : fs::path(from);
    if (!fs::exists(parent_path))
      throw xag::StateError("parent checkpoint " + parent_path.string() +
                            " not found; train the previous stage first");
    xag::CheckpointBundle parent = xag::load_checkpoint(parent_path);
    check_bundle_config(parent, cfg);
    if (stage == 2) {
      bundle = xag::train_stage2(stage_cfg, train, parent, &history);
    } else {
      bundle = xag::train_stage3(stage_cfg, train, parent, &history);
    }
  }
  fs::path out = checkpoint_path(cfg, stage);
  xag::save_checkpoint(out, bundle);
  xag::write_history(cfg.output_dir / ("stage" + std::to_string(stage) + "_history.csv"),
                     history);
  std::printf("wrote %s\n", out.string().c_str());
  return kExitOk;
}

int cmd_eval(const xag::RunConfig& cfg, const std::string& checkpoint,
             const std::string& variant, const std::string& split) {
  write_config_echo(cfg);
  xag::Split sp = xag::Split::Test;
  if (split == "train") sp = xag::Split::Train;
  else if (split == "val") sp = xag::Split::Val;
  else if (split != "test") throw xag::ConfigError("unknown split '" + split + "'");

  xag::EvalVariant ev;
  if (variant == "clean") ev = xag::EvalVariant::Clean;
  else if (variant == "attacked") ev = xag::EvalVariant::Attacked;
  else throw xag::ConfigError("unknown variant '" + variant + "'");

  xag::DatasetFile data = load_split(cfg, sp);
  if (!fs::exists(checkpoint))
    throw xag::StateError("checkpoint " + checkpoint + " not found");
  xag::CheckpointBundle bundle = xag::load_checkpoint(checkpoint);
  check_bundle_config(bundle, cfg);

  xag::CmcReport report = xag::evaluate_retrieval(data, bundle, ev);
  fs::path out = cfg.output_dir / ("eval_" + variant + ".txt");
  xag::write_report(out, report);
  std::printf("split=%s variant=%s rank1=%.4f rank5=%.4f rank10=%.4f queries=%d\n",
              split.c_str(), variant.c_str(), report.rank1, report.rank5, report.rank10,
              report.num_queries);
  std::printf("wrote %s\n", out.string().c_str());
  return kExitOk;
}

int cmd_ablate(const xag::RunConfig& cfg) {
  write_config_echo(cfg);
  if (!fs::exists(dataset_path(cfg, xag::Split::Train))) {
    xag::log_info("datasets missing; generating them first");
    cmd_gen_data(cfg);
  }
  xag::DatasetFile train = load_split(cfg, xag::Split::Train);
  xag::DatasetFile test = load_split(cfg, xag::Split::Test);
  xag::Sha256 hash = xag::config_hash(cfg);
  xag::ModelDims dims = xag::model_dims(cfg);

  xag::log_info("ablate: training baseline");
  xag::CheckpointBundle baseline =
      xag::train_baseline(xag::stage_config(cfg, 0), dims, train, hash);
  xag::log_info("ablate: training stage I");
  xag::CheckpointBundle scfc =
      xag::train_stage1(xag::stage_config(cfg, 1), dims, train, hash);
  xag::log_info("ablate: training stage II");
  xag::CheckpointBundle anl = xag::train_stage2(xag::stage_config(cfg, 2), train, scfc);
  xag::log_info("ablate: training stage III");
  xag::CheckpointBundle at = xag::train_stage3(xag::stage_config(cfg, 3), train, anl);

  xag::save_checkpoint(checkpoint_path(cfg, 0), baseline);
  xag::save_checkpoint(checkpoint_path(cfg, 1), scfc);
  xag::save_checkpoint(checkpoint_path(cfg, 2), anl);
  xag::save_checkpoint(checkpoint_path(cfg, 3), at);

  xag::AblationTable table = xag::ablation_report(test, baseline, scfc, anl, at);
  xag::write_ablation(cfg.output_dir / "ablation.txt", table);
  std::fputs(xag::format_ablation(table).c_str(), stdout);
  if (!table.pattern_ok) {
    std::fprintf(stderr, "ablation pattern check failed\n");
    return kExitCheckFailure;
  }
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed) {
  auto results = xag::run_gradcheck(seed);
  bool ok = xag::all_passed(results);
  for (const auto& r : results)
    std::printf("%-32s %s  max_rel_err=%.3e\n", r.op.c_str(), r.pass ? "PASS" : "FAIL",
                r.max_rel_err);
  std::printf("gradcheck seed=%llu: %s\n", static_cast<unsigned long long>(seed),
              ok ? "all ops passed" : "FAILURES PRESENT");
  return ok ? kExitOk : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic cross-modal matching with attack-node implantation"};
  app.require_subcommand(1);

  std::string config_path, from, checkpoint, variant = "clean", split = "test";
  std::uint64_t gradcheck_seed = 1;
  int stage = 1;

  CLI::App* gen = app.add_subcommand("gen-data", "generate dataset splits");
  gen->add_option("--config", config_path, "run config file")->required();

  CLI::App* train = app.add_subcommand("train", "train one pipeline stage");
  train->add_option("--config", config_path, "run config file")->required();
  train->add_option("--stage", stage, "stage to train (1, 2, or 3)")
      ->required()
      ->check(CLI::Range(1, 3));
  train->add_option("--from", from, "parent checkpoint (defaults to the previous stage)");

  CLI::App* eval = app.add_subcommand("eval", "evaluate retrieval for a checkpoint");
  eval->add_option("--config", config_path, "run config file")->required();
  eval->add_option("--checkpoint", checkpoint, "checkpoint to evaluate")->required();
  eval->add_option("--variant", variant, "clean or attacked")
      ->check(CLI::IsMember({"clean", "attacked"}));
  eval->add_option("--split", split, "dataset split")
      ->check(CLI::IsMember({"train", "val", "test"}));

  CLI::App* ablate = app.add_subcommand("ablate", "run the four-configuration comparison");
  ablate->add_option("--config", config_path, "run config file")->required();

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gradcheck->add_option("--seed", gradcheck_seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_seed);
    xag::RunConfig cfg = xag::parse_run_config(config_path);
    if (gen->parsed()) return cmd_gen_data(cfg);
    if (train->parsed()) return cmd_train(cfg, stage, from);
    if (eval->parsed()) return cmd_eval(cfg, checkpoint, variant, split);
    if (ablate->parsed()) return cmd_ablate(cfg);
  } catch (const xag::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const xag::DimensionError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const xag::ContractError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const xag::StateError& e) {
    std::fprintf(stderr, "state error: %s\n", e.what());
    return kExitState;
  } catch (const xag::IntegrityError& e) {
    std::fprintf(stderr, "integrity error: %s\n", e.what());
    return kExitIntegrity;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitOther;
  }
  return kExitOther;
}
