// Command-line entry point. Every subcommand runs one pipeline stage over
// the run directory; `run` chains them.

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "calmath/export.hpp"
#include "calmath/jsonl.hpp"
#include "calmath/pipeline.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string run_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<std::size_t> bins;
  std::optional<std::size_t> parallelism;
  std::string train_group;
  std::vector<std::string> eval_groups;
  std::vector<std::string> setups;
  std::string decoding;
  std::vector<std::size_t> fewshot_k;
  bool dump_prompts = false;
  bool no_cache = false;
};

calmath::ExperimentConfig resolve(const Overrides& o) {
  nlohmann::json j = o.config_path.empty() ? nlohmann::json::object()
                                           : nlohmann::json::parse(calmath::read_text(o.config_path));
  if (!o.run_dir.empty()) j["run_dir"] = o.run_dir;
  if (o.seed) j["seed"] = *o.seed;
  if (o.samples) j["samples_per_subtask"] = *o.samples;
  if (o.bins) j["bins_k"] = *o.bins;
  if (o.parallelism) j["parallelism"] = *o.parallelism;
  if (!o.train_group.empty()) j["train_group"] = o.train_group;
  if (!o.eval_groups.empty()) j["eval_groups"] = o.eval_groups;
  if (!o.setups.empty()) j["setups"] = o.setups;
  if (!o.decoding.empty()) j["decoding"] = o.decoding;
  if (!o.fewshot_k.empty()) j["fewshot_k"] = o.fewshot_k;
  if (o.dump_prompts) j["dump_prompts"] = true;
  if (o.no_cache) j["use_cache"] = false;
  return calmath::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration experiments on arithmetic questions"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides o;
  app.add_option("-c,--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("-r,--run-dir", o.run_dir, "Directory for all artifacts");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--samples-per-subtask", o.samples, "Questions per sub-task");
  app.add_option("--bins", o.bins, "Equal-mass bins for MAD");
  app.add_option("--parallelism", o.parallelism, "Requests in flight");
  app.add_option("--train-group", o.train_group, "AddSub, MultDiv or Multi");
  app.add_option("--eval-groups", o.eval_groups, "Evaluation groups");
  app.add_option("--setups", o.setups, "verbal-number, verbal-word, answer-logit, indirect-logit");
  app.add_option("--decoding", o.decoding, "greedy or ev, for verbalized setups");
  app.add_option("--fewshot-k", o.fewshot_k, "Exemplar counts for the fewshot stage");
  app.add_flag("--dump-prompts", o.dump_prompts, "Write rendered prompts under prompts/");
  app.add_flag("--no-cache", o.no_cache, "Do not read or write the response cache");

  using Stage = void (calmath::Pipeline::*)();
  const std::vector<std::pair<std::string, std::pair<Stage, std::string>>> stages = {
      {"gen", {&calmath::Pipeline::gen, "Generate questions"}},
      {"collect", {&calmath::Pipeline::collect, "Collect zero-shot answers"}},
      {"grade", {&calmath::Pipeline::grade, "Grade answers"}},
      {"label", {&calmath::Pipeline::label, "Estimate sub-task accuracy and build labels"}},
      {"export-finetune", {&calmath::Pipeline::export_finetune, "Write finetuning datasets"}},
      {"eval", {&calmath::Pipeline::eval, "Collect and score confidences on the eval groups"}},
      {"baseline", {&calmath::Pipeline::baseline, "Constant and heuristic-regression baselines"}},
      {"probe", {&calmath::Pipeline::probe, "Linear probe and 2-d projection on embeddings"}},
      {"fewshot", {&calmath::Pipeline::fewshot, "Stochastic k-shot verbalized confidence"}},
  };
  std::optional<Stage> chosen;
  for (const auto& [name, entry] : stages) {
    auto* sub = app.add_subcommand(name, entry.second);
    sub->callback([&chosen, stage = entry.first] { chosen = stage; });
  }
  bool do_report = false, do_run = false, do_show = false;
  app.add_subcommand("report", "Score everything and write the report")->callback([&] { do_report = true; });
  app.add_subcommand("run", "All stages in order")->callback([&] { do_run = true; });
  app.add_subcommand("show-config", "Print the resolved config")->callback([&] { do_show = true; });

  std::string trace_path;
  std::size_t patience = 3;
  bool do_early_stop = false;
  auto* es = app.add_subcommand("early-stop", "Early-stopping checkpoint from a CSV trace");
  es->add_option("trace", trace_path, "CSV of n_examples,proxy_loss,per_sample_mse")
      ->required()
      ->check(CLI::ExistingFile);
  es->add_option("--patience", patience, "Non-improving checkpoints tolerated");
  es->callback([&] { do_early_stop = true; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (do_early_stop) {
      const auto trace = calmath::parse_early_stop_csv(calmath::read_text(trace_path));
      std::cout << calmath::early_stop_index(trace, patience) << "\n";
      return 0;
    }
    auto config = resolve(o);
    if (do_show) {
      auto j = config.to_json();
      j["run_dir"] = config.run_dir.string();
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    calmath::Pipeline pipeline(std::move(config));
    if (do_run) std::cout << pipeline.run_all();
    else if (do_report) std::cout << pipeline.report();
    else if (chosen) (pipeline.**chosen)();
  } catch (const std::exception& e) {
    std::cerr << "calmath: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
