#include "calmath/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "calmath/baselines.hpp"
#include "calmath/export.hpp"
#include "calmath/http_backend.hpp"
#include "calmath/jsonl.hpp"
#include "calmath/prompting.hpp"
#include "calmath/report.hpp"
#include "calmath/rng.hpp"
#include "calmath/simulator.hpp"
#include "calmath/templates.hpp"

namespace calmath {
namespace {

using json = nlohmann::json;

Group require_group(const std::string& name) {
  auto g = parse_group(name);
  if (!g) throw std::invalid_argument("unknown group " + name);
  return *g;
}

ConfidenceKind require_kind(const std::string& name) {
  auto k = parse_kind(name);
  if (!k) throw std::invalid_argument("unknown setup " + name);
  return *k;
}

Decoding require_decoding(const std::string& name) {
  auto d = parse_decoding(name);
  if (!d) throw std::invalid_argument("unknown decoding " + name);
  return *d;
}

std::array<std::string, 5> scale_words(const json& j) {
  if (j.is_string()) {
    if (j == "names") return WordScale::names().words();
    if (j == "ordered") return WordScale::ordered().words();
    throw std::invalid_argument("word_scale must be \"names\", \"ordered\" or a list of five words");
  }
  return WordScale(j.get<std::array<std::string, 5>>()).words();
}

bool in_groups(const std::vector<Group>& groups, Group g) {
  return std::find(groups.begin(), groups.end(), g) != groups.end();
}

std::vector<GradedQuestion> filter_groups(const std::vector<GradedQuestion>& all, const std::vector<Group>& groups) {
  std::vector<GradedQuestion> out;
  for (const auto& g : all)
    if (in_groups(groups, g.question.subtask.group)) out.push_back(g);
  return out;
}

std::string qa_text(const GradedQuestion& g) {
  return std::string(kQuestionPrefix) + g.question.prompt_text + "\n" + std::string(kAnswerPrefix) + " " +
         g.answer_text;
}

std::string stage_hint(const std::filesystem::path& file, const char* stage) {
  return file.string() + " is missing; run the `" + stage + "` stage first";
}

std::vector<json> read_stage(const std::filesystem::path& file, const char* stage) {
  if (!std::filesystem::exists(file)) throw IoError(stage_hint(file, stage));
  return read_jsonl(file);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (eval_groups.empty()) throw std::invalid_argument("eval_groups is empty");
  if (in_groups(eval_groups, train_group))
    throw std::invalid_argument("train group " + std::string(group_name(train_group)) + " is also an eval group");
  if (samples_per_subtask == 0) throw std::invalid_argument("samples_per_subtask must be at least 1");
  if (bins_k == 0) throw std::invalid_argument("bins_k must be at least 1");
  if (parallelism == 0) throw std::invalid_argument("parallelism must be at least 1");
  if (!backend.is_object() || !backend.contains("type")) throw std::invalid_argument("backend.type is required");
  if (!setup_backends.is_object()) throw std::invalid_argument("setup_backends must be an object");
  for (const auto& [name, _] : setup_backends.items()) require_kind(name);
  for (std::size_t i = 0; i < setups.size(); ++i)
    for (std::size_t j = i + 1; j < setups.size(); ++j)
      if (setups[i] == setups[j]) throw std::invalid_argument("duplicate setup " + std::string(kind_name(setups[i])));
  WordScale{word_scale};
}

json ExperimentConfig::to_json() const {
  json evals = json::array(), kinds = json::array();
  for (auto g : eval_groups) evals.push_back(group_name(g));
  for (auto k : setups) kinds.push_back(kind_name(k));
  return json{{"train_group", group_name(train_group)},
              {"eval_groups", evals},
              {"setups", kinds},
              {"samples_per_subtask", samples_per_subtask},
              {"bins_k", bins_k},
              {"seed", seed},
              {"decoding", decoding_name(decoding)},
              {"word_scale", word_scale},
              {"parallelism", parallelism},
              {"backend", backend},
              {"setup_backends", setup_backends},
              {"fewshot_k", fewshot_k},
              {"fewshot_decoding", decoding_name(fewshot_decoding)},
              {"baselines", baselines},
              {"probe", probe},
              {"projection_epochs", projection_epochs},
              {"embeddings_file", embeddings_file},
              {"dump_prompts", dump_prompts},
              {"use_cache", use_cache}};
}

std::string ExperimentConfig::hash() const { return sha256_hex(to_json().dump()); }

ExperimentConfig config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "run_dir",  "train_group", "eval_groups",      "setups",   "samples_per_subtask", "bins_k",
      "seed",     "decoding",    "word_scale",       "parallelism", "backend",          "setup_backends",
      "fewshot_k", "fewshot_decoding", "baselines",  "probe",    "projection_epochs",   "embeddings_file",
      "dump_prompts", "use_cache"};
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw std::invalid_argument("unknown config key " + key);

  ExperimentConfig c;
  if (j.contains("run_dir")) c.run_dir = j.at("run_dir").get<std::string>();
  if (j.contains("train_group")) c.train_group = require_group(j.at("train_group").get<std::string>());
  if (j.contains("eval_groups")) {
    c.eval_groups.clear();
    for (const auto& g : j.at("eval_groups")) c.eval_groups.push_back(require_group(g.get<std::string>()));
  }
  if (j.contains("setups")) {
    c.setups.clear();
    for (const auto& s : j.at("setups")) c.setups.push_back(require_kind(s.get<std::string>()));
  }
  c.samples_per_subtask = j.value("samples_per_subtask", c.samples_per_subtask);
  c.bins_k = j.value("bins_k", c.bins_k);
  c.seed = j.value("seed", c.seed);
  if (j.contains("decoding")) c.decoding = require_decoding(j.at("decoding").get<std::string>());
  if (j.contains("word_scale")) c.word_scale = scale_words(j.at("word_scale"));
  c.parallelism = j.value("parallelism", c.parallelism);
  if (j.contains("backend")) c.backend = j.at("backend");
  if (j.contains("setup_backends")) c.setup_backends = j.at("setup_backends");
  if (j.contains("fewshot_k")) c.fewshot_k = j.at("fewshot_k").get<std::vector<std::size_t>>();
  if (j.contains("fewshot_decoding")) c.fewshot_decoding = require_decoding(j.at("fewshot_decoding").get<std::string>());
  c.baselines = j.value("baselines", c.baselines);
  c.probe = j.value("probe", c.probe);
  c.projection_epochs = j.value("projection_epochs", c.projection_epochs);
  c.embeddings_file = j.value("embeddings_file", c.embeddings_file);
  c.dump_prompts = j.value("dump_prompts", c.dump_prompts);
  c.use_cache = j.value("use_cache", c.use_cache);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(json::parse(read_text(path)));
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void to_json(json& j, const ScoreRow& r) {
  j = {{"id", r.id},
       {"subtask", r.subtask.key()},
       {"group", group_name(r.subtask.group)},
       {"probability", r.probability},
       {"correct", r.correct},
       {"parse_ok", r.parse_ok}};
}

void from_json(const json& j, ScoreRow& r) {
  j.at("id").get_to(r.id);
  const auto key = j.at("subtask").get<std::string>();
  auto subtask = subtask_from_key(key);
  if (!subtask) throw IoError("unknown sub-task " + key);
  r.subtask = *subtask;
  j.at("probability").get_to(r.probability);
  j.at("correct").get_to(r.correct);
  r.parse_ok = j.value("parse_ok", true);
}

std::string setup_display_name(const std::string& setup) {
  static const std::map<std::string, std::string> names = {
      {"verbal-number", "Verbalized numbers"}, {"verbal-word", "Verbalized words"},
      {"answer-logit", "Answer logit"},        {"indirect-logit", "Indirect logit"},
      {"constant", "Constant baseline"},       {"heuristic-lr", "Heuristic regression"},
      {"probe", "Linear probe"}};
  if (auto it = names.find(setup); it != names.end()) return it->second;
  if (setup.starts_with("fewshot-k")) return "Few-shot (k=" + setup.substr(9) + ")";
  return setup;
}

// ---------------------------------------------------------------------------
// Pipeline plumbing

Pipeline::Pipeline(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  std::filesystem::create_directories(config_.run_dir);
}

Pipeline::~Pipeline() = default;

const std::vector<QuestionInstance>& Pipeline::questions() {
  if (!questions_) {
    const auto file = path("questions.jsonl");
    if (!std::filesystem::exists(file)) throw IoError(stage_hint(file, "gen"));
    questions_ = read_questions(file);
  }
  return *questions_;
}

std::vector<GradedQuestion> Pipeline::load_graded() {
  std::vector<GradedQuestion> out;
  for (const auto& row : read_stage(path("graded.jsonl"), "grade")) out.push_back(row.get<GradedQuestion>());
  return out;
}

std::shared_ptr<Backend> Pipeline::backend_for(std::optional<ConfidenceKind> setup) {
  json spec = config_.backend;
  if (setup) {
    const std::string name(kind_name(*setup));
    if (config_.setup_backends.contains(name)) spec.merge_patch(config_.setup_backends.at(name));
  }
  const auto type = spec.value("type", std::string());
  if (type == "simulator") {
    if (setup == ConfidenceKind::VerbalWord && !spec.contains("verbal_style")) spec["verbal_style"] = "word";
    if (!spec.contains("seed")) spec["seed"] = config_.seed;
    if (!spec.contains("scale")) spec["scale"] = config_.word_scale;
    json sim = spec;
    sim.erase("type");
    sim.erase("profile");
    auto cfg = sim.get<SimulatedModelConfig>();
    // "profile": false leaves unlisted sub-tasks at default_accuracy.
    const auto profile = spec.value("profile", json::object());
    if (profile.is_object()) {
      for (const auto& [subtask, a] :
           default_accuracy_profile(profile.value("addsub_median", 0.21), profile.value("multdiv_median", 0.40),
                                    profile.value("multi_median", 0.65)))
        cfg.per_subtask_accuracy.try_emplace(subtask, a);
    } else if (profile != false) {
      throw std::invalid_argument("backend profile must be an object or false");
    }
    return std::make_shared<SimulatorBackend>(std::move(cfg), questions());
  }
  if (type == "http") {
    HttpBackendConfig hc;
    hc.base_url = spec.value("base_url", hc.base_url);
    hc.completions_path = spec.value("completions_path", hc.completions_path);
    hc.embeddings_path = spec.value("embeddings_path", hc.embeddings_path);
    hc.model = spec.value("model", hc.model);
    hc.embedding_model = spec.value("embedding_model", hc.embedding_model);
    hc.timeout = std::chrono::seconds(spec.value("timeout_s", 60));
    const auto key_env = spec.value("api_key_env", std::string("OPENAI_API_KEY"));
    if (const char* key = std::getenv(key_env.c_str())) hc.api_key = key;
    if (hc.model.empty()) throw std::invalid_argument("http backend needs a model");
    return std::make_shared<HttpBackend>(std::move(hc));
  }
  throw std::invalid_argument("unknown backend type '" + type + "'");
}

ModelClient& Pipeline::client_for(std::optional<ConfidenceKind> setup) {
  const std::string name = setup ? std::string(kind_name(*setup)) : "base";
  auto& slot = clients_[name];
  if (!slot) {
    if (!cache_) {
      cache_ = config_.use_cache ? std::make_shared<ResponseCache>(path("cache.jsonl"))
                                 : std::make_shared<ResponseCache>();
    }
    slot = std::make_unique<ModelClient>(backend_for(setup), cache_);
  }
  return *slot;
}

void Pipeline::record_stage(const std::string& stage, const json& info) {
  const auto file = path("manifest.json");
  json manifest = std::filesystem::exists(file) ? json::parse(read_text(file)) : json::object();
  manifest["config"] = config_.to_json();
  manifest["config_hash"] = config_.hash();
  manifest["template_version"] = kTemplateVersion;
  manifest["stages"][stage] = info;
  write_text(file, manifest.dump(2) + "\n");
}

void Pipeline::write_scores(const std::string& name, const std::vector<ScoreRow>& rows) {
  std::vector<json> out(rows.begin(), rows.end());
  write_jsonl(path("scores/" + name + ".jsonl"), out);
}

void Pipeline::dump_prompts(const std::string& name, const std::vector<std::string>& ids,
                            const std::vector<CompletionRequest>& requests) {
  if (!config_.dump_prompts) return;
  std::vector<json> rows;
  for (std::size_t i = 0; i < requests.size(); ++i) rows.push_back({{"id", ids[i]}, {"prompt", requests[i].prompt}});
  write_jsonl(path("prompts/" + name + ".jsonl"), rows);
}

// ---------------------------------------------------------------------------
// Stages

void Pipeline::gen() {
  std::vector<Group> groups{config_.train_group};
  groups.insert(groups.end(), config_.eval_groups.begin(), config_.eval_groups.end());
  std::vector<QuestionInstance> qs;
  json counts = json::object();
  for (auto g : all_groups()) {
    if (!in_groups(groups, g)) continue;
    std::size_t n = 0;
    for (const auto& subtask : enumerate_subtasks(g)) {
      auto batch = generate_questions(subtask, config_.samples_per_subtask, derive_seed(config_.seed, "questions"));
      n += batch.size();
      qs.insert(qs.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
    }
    counts[group_name(g)] = n;
  }
  write_questions(path("questions.jsonl"), qs);
  questions_ = std::move(qs);
  clients_.clear();
  record_stage("gen", {{"questions", counts}});
}

void Pipeline::collect() {
  const auto& qs = questions();
  const bool want_logit =
      std::find(config_.setups.begin(), config_.setups.end(), ConfidenceKind::AnswerLogit) != config_.setups.end();
  std::vector<CompletionRequest> requests;
  std::vector<std::string> ids;
  for (const auto& q : qs) {
    CompletionRequest r;
    r.prompt = render_qa_prompt(q);
    r.want_top_logprobs = want_logit ? 1 : 0;
    requests.push_back(std::move(r));
    ids.push_back(q.id);
  }
  dump_prompts("answers", ids, requests);

  auto& client = client_for(std::nullopt);
  bool logprobs_ok = want_logit;
  std::vector<std::optional<CompletionResponse>> responses;
  try {
    responses = complete_all(client, requests, config_.parallelism);
  } catch (const LogprobsUnavailable&) {
    logprobs_ok = false;
    for (auto& r : requests) r.want_top_logprobs = 0;
    responses = complete_all(client, requests, config_.parallelism);
  }

  std::vector<json> rows;
  std::size_t uncollected = 0;
  for (std::size_t i = 0; i < qs.size(); ++i) {
    json row = {{"id", qs[i].id}, {"collected", responses[i].has_value()}};
    if (responses[i]) row["response"] = *responses[i];
    else ++uncollected;
    rows.push_back(std::move(row));
  }
  write_jsonl(path("answers.jsonl"), rows);
  record_stage("collect", {{"backend", client.backend().id()},
                           {"collected", qs.size() - uncollected},
                           {"uncollected", uncollected},
                           {"answer_logprobs", logprobs_ok}});
}

void Pipeline::grade() {
  std::map<std::string, const QuestionInstance*> by_id;
  for (const auto& q : questions()) by_id[q.id] = &q;
  std::vector<json> rows;
  std::map<Group, std::pair<std::size_t, std::size_t>> tally;
  std::size_t skipped = 0;
  for (const auto& row : read_stage(path("answers.jsonl"), "collect")) {
    if (!row.value("collected", false)) {
      ++skipped;
      continue;
    }
    auto it = by_id.find(row.at("id").get<std::string>());
    if (it == by_id.end()) throw IoError("answers.jsonl mentions unknown question " + row.at("id").dump());
    GradedQuestion g{*it->second, normalize_answer_text(row.at("response").at("text").get<std::string>()), false};
    g.correct = calmath::grade(g.question, g.answer_text).correct;
    auto& t = tally[g.question.subtask.group];
    ++t.first;
    t.second += g.correct;
    rows.push_back(g);
  }
  write_jsonl(path("graded.jsonl"), rows);

  // Median sub-task accuracy per group, the headline statistic of the benchmark.
  std::vector<GradedQuestion> all;
  for (const auto& r : rows) all.push_back(r.get<GradedQuestion>());
  json info = {{"uncollected", skipped}, {"groups", json::object()}};
  if (!all.empty()) {
    std::map<Group, std::vector<double>> per_group;
    for (const auto& s : estimate_subtask_accuracy(all)) per_group[s.subtask.group].push_back(s.p_hat());
    for (auto& [g, v] : per_group) {
      std::sort(v.begin(), v.end());
      const double median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
      const auto& t = tally[g];
      info["groups"][group_name(g)] = {{"graded", t.first},
                                       {"accuracy", static_cast<double>(t.second) / static_cast<double>(t.first)},
                                       {"median_subtask_accuracy", median}};
    }
  }
  record_stage("grade", info);
}

void Pipeline::label() {
  const auto train = filter_groups(load_graded(), {config_.train_group});
  if (train.empty()) throw IoError("no graded questions in the train group");
  const auto stats = estimate_subtask_accuracy(train);
  write_jsonl(path("stats.jsonl"), std::vector<json>(stats.begin(), stats.end()));

  // Number labels are always written: they seed the few-shot pool.
  std::vector<ConfidenceKind> kinds{ConfidenceKind::VerbalNumber};
  for (auto k : config_.setups)
    if (k != ConfidenceKind::AnswerLogit && k != ConfidenceKind::VerbalNumber) kinds.push_back(k);
  json info = {{"subtasks", stats.size()}, {"labels", json::object()}};
  for (auto k : kinds) {
    const auto labeled = make_labels(stats, train, k);
    write_jsonl(path("labels/" + std::string(kind_name(k)) + ".jsonl"),
                std::vector<json>(labeled.begin(), labeled.end()));
    info["labels"][kind_name(k)] = labeled.size();
  }
  record_stage("label", info);
}

void Pipeline::export_finetune() {
  const WordScale scale(config_.word_scale);
  json info = json::object();
  for (auto k : config_.setups) {
    if (k == ConfidenceKind::AnswerLogit) continue;
    const std::string name(kind_name(k));
    std::vector<LabeledExample> examples;
    for (const auto& row : read_stage(path("labels/" + name + ".jsonl"), "label"))
      examples.push_back(row.get<LabeledExample>());
    const auto out = export_finetune_dataset(path("finetune/" + name + ".jsonl"), examples, k,
                                             derive_seed(config_.seed, "shuffle/" + name), scale);
    info[name] = {{"records", out.records}, {"file", "finetune/" + name + ".jsonl"}};
  }
  record_stage("export-finetune", info);
}

void Pipeline::eval() {
  const auto eval_set = filter_groups(load_graded(), config_.eval_groups);
  const WordScale scale(config_.word_scale);
  json info = json::object();

  for (auto kind : config_.setups) {
    const std::string name(kind_name(kind));
    std::vector<ScoreRow> rows;
    std::size_t parse_failures = 0, uncollected = 0, unavailable = 0;

    if (kind == ConfidenceKind::AnswerLogit) {
      std::map<std::string, CompletionResponse> answers;
      for (const auto& row : read_stage(path("answers.jsonl"), "collect"))
        if (row.value("collected", false))
          answers[row.at("id").get<std::string>()] = row.at("response").get<CompletionResponse>();
      for (const auto& g : eval_set) {
        try {
          const auto est = answer_logit_probability(answers.at(g.question.id));
          rows.push_back({g.question.id, g.question.subtask, est.probability, g.correct, true});
        } catch (const UnavailableConfidence&) {
          ++unavailable;
        }
      }
    } else {
      std::vector<CompletionRequest> requests;
      std::vector<std::string> ids;
      for (const auto& g : eval_set) {
        CompletionRequest r;
        if (kind == ConfidenceKind::IndirectLogit) {
          r = indirect_logit_request(g.question, g.answer_text);
        } else {
          r.prompt = render_confidence_prompt(g.question, g.answer_text, kind);
          r.max_tokens = 4;
          r.want_top_logprobs = config_.decoding == Decoding::ExpectedValue ? kMaxTopLogprobs : 0;
        }
        requests.push_back(std::move(r));
        ids.push_back(g.question.id);
      }
      dump_prompts("eval-" + name, ids, requests);
      std::vector<std::optional<CompletionResponse>> responses;
      try {
        responses = complete_all(client_for(kind), requests, config_.parallelism);
      } catch (const LogprobsUnavailable& e) {
        info[name] = {{"unavailable", std::string(e.what())}};
        continue;
      }
      for (std::size_t i = 0; i < eval_set.size(); ++i) {
        const auto& g = eval_set[i];
        if (!responses[i]) {
          ++uncollected;
          continue;
        }
        try {
          ConfidenceEstimate est;
          if (kind == ConfidenceKind::IndirectLogit) est = indirect_logit_from_response(*responses[i]);
          else if (kind == ConfidenceKind::VerbalNumber) est = parse_verbal_number(*responses[i], config_.decoding);
          else est = parse_verbal_word(*responses[i], scale, config_.decoding);
          parse_failures += !est.parse_ok;
          rows.push_back({g.question.id, g.question.subtask, est.probability, g.correct, est.parse_ok});
        } catch (const UnavailableConfidence&) {
          ++unavailable;
        }
      }
    }
    write_scores(name, rows);
    info[name] = {{"scored", rows.size()},
                  {"parse_failures", parse_failures},
                  {"uncollected", uncollected},
                  {"unavailable", unavailable}};
  }
  record_stage("eval", info);
}

void Pipeline::baseline() {
  const auto all = load_graded();
  const auto train = filter_groups(all, {config_.train_group});
  const auto eval_set = filter_groups(all, config_.eval_groups);
  if (train.empty()) throw IoError("no graded questions in the train group");

  const double c = constant_baseline(train);
  std::vector<ScoreRow> rows;
  for (const auto& g : eval_set) rows.push_back({g.question.id, g.question.subtask, c, g.correct, true});
  write_scores("constant", rows);

  std::map<SubTaskSpec, double> p_hat;
  for (const auto& s : estimate_subtask_accuracy(train)) p_hat[s.subtask] = s.p_hat();
  Matrix x;
  std::vector<double> targets;
  for (const auto& g : train) {
    x.push_back(heuristic_features(g.question.subtask).vector());
    targets.push_back(p_hat.at(g.question.subtask));
  }
  const auto model = fit_logistic(x, targets, {}, std::string(group_name(config_.train_group)));
  save_model(path("models/heuristic-lr.json"), model);
  rows.clear();
  for (const auto& g : eval_set)
    rows.push_back({g.question.id, g.question.subtask, model.predict(heuristic_features(g.question.subtask).vector()),
                    g.correct, true});
  write_scores("heuristic-lr", rows);
  record_stage("baseline", {{"constant", c}, {"heuristic_lr_epochs", model.epochs}});
}

void Pipeline::probe() {
  const auto all = load_graded();
  const auto train = filter_groups(all, {config_.train_group});
  const auto eval_set = filter_groups(all, config_.eval_groups);
  if (train.empty()) throw IoError("no graded questions in the train group");

  std::shared_ptr<Backend> file_backend;
  std::unique_ptr<ModelClient> file_client;
  if (!config_.embeddings_file.empty()) {
    file_backend = std::make_shared<FileEmbeddingBackend>(config_.embeddings_file);
    file_client = std::make_unique<ModelClient>(file_backend);
  }
  ModelClient& client = file_client ? *file_client : client_for(std::nullopt);
  auto embed_all = [&](const std::vector<GradedQuestion>& set, Matrix& x, std::vector<bool>& y) {
    for (const auto& g : set) {
      x.push_back(client.embed(qa_text(g)));
      y.push_back(g.correct);
    }
  };
  Matrix x_train, x_eval;
  std::vector<bool> y_train, y_eval;
  embed_all(train, x_train, y_train);
  embed_all(eval_set, x_eval, y_eval);

  const std::string train_name(group_name(config_.train_group));
  const auto model = fit_probe(x_train, y_train, {}, train_name);
  save_model(path("models/probe.json"), model);
  std::vector<ScoreRow> rows;
  for (std::size_t i = 0; i < eval_set.size(); ++i)
    rows.push_back({eval_set[i].question.id, eval_set[i].question.subtask, model.predict(x_eval[i]), y_eval[i], true});
  write_scores("probe", rows);

  TrainingParams params;
  params.seed = derive_seed(config_.seed, "projection");
  const auto fit = fit_projection_2d(x_train, y_train, config_.projection_epochs, params, train_name);
  save_projection(path("models/projection-2d.json"), fit.model);
  write_text(path("probe/projection.csv"), projection_dump_csv(fit));
  for (std::size_t e = 0; e < fit.dumps.size(); ++e)
    write_text(path("probe/projection-epoch" + std::to_string(e) + ".svg"),
               scatter_svg(fit.dumps[e], "Projected embeddings, epoch " + std::to_string(e)));

  json info = {{"train_accuracy", accuracy(model, x_train, y_train)}, {"epochs", model.epochs},
               {"projection_losses", fit.losses}};
  if (!x_eval.empty()) info["eval_accuracy"] = accuracy(model, x_eval, y_eval);
  record_stage("probe", info);
}

void Pipeline::fewshot() {
  std::vector<LabeledExample> pool;
  for (const auto& row : read_stage(path("labels/verbal-number.jsonl"), "label"))
    pool.push_back(row.get<LabeledExample>());
  const auto eval_set = filter_groups(load_graded(), config_.eval_groups);
  const WordScale scale(config_.word_scale);
  json info = json::object();
  for (auto k : config_.fewshot_k) {
    const std::string name = "fewshot-k" + std::to_string(k);
    FewShotConfig fs{k, pool, true, derive_seed(config_.seed, name)};
    std::vector<CompletionRequest> requests;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < eval_set.size(); ++i) {
      CompletionRequest r;
      r.prompt = build_fewshot_context(fs, eval_set[i].question, eval_set[i].answer_text, i, scale);
      r.max_tokens = 4;
      r.want_top_logprobs = config_.fewshot_decoding == Decoding::ExpectedValue ? kMaxTopLogprobs : 0;
      requests.push_back(std::move(r));
      ids.push_back(eval_set[i].question.id);
    }
    dump_prompts(name, ids, requests);
    const auto responses = complete_all(client_for(std::nullopt), requests, config_.parallelism);
    std::vector<ScoreRow> rows;
    std::size_t parse_failures = 0, uncollected = 0;
    for (std::size_t i = 0; i < eval_set.size(); ++i) {
      if (!responses[i]) {
        ++uncollected;
        continue;
      }
      const auto est = parse_verbal_number(*responses[i], config_.fewshot_decoding);
      parse_failures += !est.parse_ok;
      rows.push_back({eval_set[i].question.id, eval_set[i].question.subtask, est.probability, eval_set[i].correct,
                      est.parse_ok});
    }
    write_scores(name, rows);
    info[name] = {{"scored", rows.size()}, {"parse_failures", parse_failures}, {"uncollected", uncollected}};
  }
  record_stage("fewshot", info);
}

std::vector<std::string> Pipeline::score_names() const {
  std::vector<std::string> names;
  for (auto k : config_.setups) names.emplace_back(kind_name(k));
  for (auto k : config_.fewshot_k) names.push_back("fewshot-k" + std::to_string(k));
  names.insert(names.end(), {"constant", "heuristic-lr", "probe"});
  return names;
}

std::string Pipeline::report() {
  std::vector<ReportEntry> entries;
  std::string notes;
  json info = json::object();
  for (const auto& name : score_names()) {
    const auto file = path("scores/" + name + ".jsonl");
    if (!std::filesystem::exists(file)) continue;
    std::vector<ScoreRow> rows;
    for (const auto& row : read_jsonl(file)) rows.push_back(row.get<ScoreRow>());
    for (auto g : config_.eval_groups) {
      std::vector<ScoredSample> samples;
      std::size_t failures = 0;
      for (const auto& r : rows) {
        if (r.subtask.group != g) continue;
        samples.push_back({r.probability, r.correct, r.subtask});
        failures += !r.parse_ok;
      }
      const std::string eval_name(group_display_name(g));
      if (samples.size() < config_.bins_k) {
        notes += "  " + setup_display_name(name) + " / " + eval_name + ": " + std::to_string(samples.size()) +
                 " scored, fewer than K; omitted\n";
        continue;
      }
      auto rep = score(samples, config_.bins_k, failures);
      info[name][group_name(g)] = {{"mse", rep.mse}, {"mad", rep.mad}, {"n", rep.n}, {"parse_failures", failures}};
      if (failures > 0)
        notes += "  " + setup_display_name(name) + " / " + eval_name + ": " + std::to_string(failures) + " of " +
                 std::to_string(rep.n) + " confidences unparsed\n";
      write_text(path("curves/" + slug(name) + "-" + slug(eval_name) + ".svg"),
                 reliability_svg(rep.bins, setup_display_name(name) + " on " + eval_name));
      entries.push_back({setup_display_name(name), eval_name, std::move(rep)});
    }
  }
  if (entries.empty()) throw IoError("no score files under " + path("scores").string() + "; run `eval` first");

  std::string text = "config " + config_.hash() + "\n";
  text += "templates " + std::string(kTemplateVersion) + "\n";
  text += "K " + std::to_string(config_.bins_k) + " equal-mass bins; scores in percent\n\n";
  text += format_report_table(entries);
  text += "\nParse failures and omissions:\n";
  text += notes.empty() ? "  none\n" : notes;
  write_text(path("report.txt"), text);
  write_text(path("bins.csv"), format_bins_csv(entries));
  record_stage("report", info);
  return text;
}

std::string Pipeline::run_all() {
  gen();
  collect();
  grade();
  label();
  export_finetune();
  eval();
  if (config_.baselines) baseline();
  if (config_.probe) probe();
  if (!config_.fewshot_k.empty()) fewshot();
  return report();
}

}  // namespace calmath
