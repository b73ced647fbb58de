// beamcrb: precoder design, bound evaluation and Monte Carlo experiments.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "beamcrb/experiment/runner.hpp"

namespace ex = beamcrb::experiment;

namespace {

int fail(int code, const std::string& kind, const std::string& msg) {
  nlohmann::json e{{"error", kind}, {"message", msg}, {"exit_code", code}};
  std::cerr << e.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam training design from estimation error bounds"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string variant;
  bool refine = false;
  std::string precoders;
  bool renormalize = false;
  std::string axis;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment configuration (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--variant", variant, "design variant")
        ->check(CLI::IsMember({"aod", "aoa", "both"}));
  };
  auto* design = app.add_subcommand("design", "solve the design and recover the precoders");
  common(design);
  auto* evaluate = app.add_subcommand("evaluate", "worst-case bounds of a precoder file");
  common(evaluate);
  evaluate->add_option("--precoders", precoders, "precoder CSV (re/im column pairs)")->required();
  evaluate->add_flag("--renormalize", renormalize, "rescale columns to unit norm");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo MLE errors against the bounds");
  common(simulate);
  simulate->add_flag("--refine-mle", refine, "refine the grid search locally");
  auto* sweep = app.add_subcommand("sweep", "parameter sweeps");
  common(sweep);
  sweep->add_option("--axis", axis, "sweep axis")
      ->required()
      ->check(CLI::IsMember(ex::sweep_axes()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "usage", e.what());
  }

  try {
    auto cfg = ex::load_config(config_path);
    ex::RunOptions opt;
    auto* sub = app.get_subcommands().front();
    if (!out_dir.empty()) opt.out = out_dir;
    if (sub->count("--seed")) opt.seed = seed;
    if (!variant.empty()) opt.variant = ex::parse_variant(variant);
    opt.refine_mle = refine;
    ex::apply_options(cfg, opt);

    ex::CommandResult res;
    if (sub == design) res = ex::cmd_design(cfg);
    else if (sub == evaluate) res = ex::cmd_evaluate(cfg, precoders, renormalize);
    else if (sub == simulate) res = ex::cmd_simulate(cfg);
    else res = ex::cmd_sweep(cfg, axis);

    for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
    beamcrb::io::write_artifacts(cfg.output_dir, res.files);
    std::cout << cfg.output_dir.string() << '\n';
    return 0;
  } catch (const ex::ConfigError& e) {
    return fail(2, "config", e.what());
  } catch (const beamcrb::RankExceedsPrecoders& e) {
    return fail(1, "rank_exceeds_precoders", e.what());
  } catch (const beamcrb::InfeasibleError& e) {
    return fail(1, "infeasible", e.what());
  } catch (const beamcrb::SolverFailure& e) {
    return fail(3, "solver_failure", e.what());
  } catch (const beamcrb::DomainError& e) {
    return fail(2, "invalid_input", e.what());
  } catch (const beamcrb::DimensionError& e) {
    return fail(2, "invalid_input", e.what());
  } catch (const beamcrb::io::IoError& e) {
    return fail(3, "io", e.what());
  } catch (const std::exception& e) {
    return fail(3, "internal", e.what());
  }
}
