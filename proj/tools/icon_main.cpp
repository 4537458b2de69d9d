// Command-line entry point: data generation, training, evaluation, and
// prompt inspection as subcommands. Exit codes: 0 success, 2 usage/config
// error, 3 runtime (numerical or file-format) error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "icon/dataset.hpp"
#include "icon/evaluator.hpp"
#include "icon/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

// ---- small parsers ----

// "1,3,5-9" -> {1,3,5,6,7,8,9}
std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    const std::string tok = s.substr(pos, comma - pos);
    const std::size_t dash = tok.find('-', tok.empty() || tok[0] == '-' ? 1 : 0);
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoi(tok));
      } else {
        const int lo = std::stoi(tok.substr(0, dash));
        const int hi = std::stoi(tok.substr(dash + 1));
        if (hi < lo) throw icon::InvalidInputError("descending range: " + tok);
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      }
    } catch (const std::logic_error&) {
      throw icon::InvalidInputError("cannot parse integer list entry: " + tok);
    }
    pos = comma + 1;
  }
  if (out.empty()) throw icon::InvalidInputError("empty integer list");
  return out;
}

// "lo:hi:step" -> inclusive series
std::vector<double> parse_series(const std::string& s) {
  double lo = 0, hi = 0, step = 0;
  if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0)
    throw icon::InvalidInputError("expected lo:hi:step, got " + s);
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = lo + i * step;
    if (v > hi + 0.5 * step) break;
    out.push_back(std::min(v, hi));
  }
  return out;
}

// Resolve an output path against the ICON_OUT_ROOT environment variable.
std::string resolve_out(const std::string& path) {
  if (path.empty()) throw icon::InvalidInputError("output directory required");
  const char* root = std::getenv("ICON_OUT_ROOT");
  if (root && *root && fs::path(path).is_relative())
    return (fs::path(root) / path).string();
  return path;
}

// ---- config resolution ----
// Precedence: built-in defaults < profile < --config file < explicit CLI
// flags < --set overrides. Unknown keys are rejected.

void merge_known(json& cfg, const json& src, const std::string& origin) {
  if (!src.is_object())
    throw icon::InvalidInputError(origin + ": expected a JSON object");
  for (const auto& [key, value] : src.items()) {
    if (!cfg.contains(key))
      throw icon::InvalidInputError(origin + ": unknown key '" + key + "'");
    cfg[key] = value;
  }
}

void apply_config_sources(json& cfg, const std::string& config_path,
                          const std::vector<std::string>& sets) {
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw icon::InvalidInputError("cannot open config file " + config_path);
    json file_cfg;
    try {
      file_cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw icon::InvalidInputError("bad config file: " + std::string(e.what()));
    }
    merge_known(cfg, file_cfg, config_path);
  }
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw icon::InvalidInputError("--set expects key=value, got " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // plain string
    }
    merge_known(cfg, json{{key, value}}, "--set");
  }
}

// Echo the fully resolved config to stdout and into the output directory.
void echo_config(const json& cfg, const std::string& out_dir) {
  std::cout << "config: " << cfg.dump() << "\n";
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "config_echo.json");
  out << cfg.dump(2) << "\n";
}

icon::ModelConfig model_from_json(const json& cfg) {
  icon::ModelConfig m;
  m.d_model = cfg.at("d_model");
  m.n_heads = cfg.at("n_heads");
  m.n_enc_layers = cfg.at("n_enc_layers");
  m.n_dec_layers = cfg.at("n_dec_layers");
  m.d_ff = cfg.at("d_ff");
  return m;
}

std::string checkpoint_dtype(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw icon::InvalidInputError("cannot open " + path);
  std::string header;
  std::getline(f, header);
  try {
    return json::parse(header).value("dtype", "");
  } catch (const json::exception&) {
    throw icon::FormatError(icon::FormatError::Kind::SchemaViolation,
                            "bad checkpoint header in " + path);
  }
}

// ---- datagen ----

int cmd_datagen(json cfg) {
  const std::string out = resolve_out(cfg.at("out"));
  echo_config(cfg, out);
  const std::vector<int> families = parse_int_list(cfg.at("families"));
  const icon::DatasetManifest man = icon::generate_dataset(
      families, cfg.at("M"), cfg.at("N"), cfg.at("seed").get<std::uint64_t>(), out);
  std::cout << "manifest: " << (fs::path(out) / "manifest.json").string() << "\n";
  for (const auto& e : man.entries)
    std::cout << "family " << e.family << ": " << e.record_count << " records in "
              << e.file << " (crc32 " << e.crc32_hex << ")\n";
  return 0;
}

// ---- train ----

template <typename S>
int run_train(const json& cfg, const std::string& out) {
  const std::vector<icon::FamilyData> dataset =
      icon::load_dataset(resolve_out(cfg.at("data")));

  icon::TrainConfig tcfg;
  tcfg.batch_size = cfg.at("batch_size");
  tcfg.steps = cfg.at("steps");
  tcfg.peak_lr = cfg.at("peak_lr");
  tcfg.warmup_steps = cfg.at("warmup_steps");
  tcfg.seed = cfg.at("seed").get<std::uint64_t>();
  tcfg.log_every = cfg.at("log_every");
  tcfg.checkpoint_every = cfg.at("checkpoint_every");
  tcfg.out_dir = out;
  if (cfg.at("families").get<std::string>() == "all") {
    for (const auto& f : dataset) tcfg.families.push_back(f.family);
  } else {
    tcfg.families = parse_int_list(cfg.at("families"));
  }

  icon::ModelConfig mcfg = model_from_json(cfg);
  icon::ModelParams<S> params;
  icon::AdamState<S> adam;
  long long start_step = 0;
  const std::string resume = cfg.at("resume");
  if (!resume.empty()) {
    start_step = icon::load_checkpoint<S>(resume, mcfg, params, &adam);
    std::cout << "resumed from " << resume << " at step " << start_step << "\n";
  } else {
    icon::Rng init_rng = icon::SeedTree(tcfg.seed).child("init").rng();
    params = icon::init_params<S>(mcfg, init_rng);
    adam.setup(mcfg);
  }

  const icon::TrainResult res =
      icon::train<S>(dataset, tcfg, mcfg, params, adam, start_step);
  std::cout << "final loss: " << res.final_loss << "\n";
  std::cout << "metrics: " << res.metrics_csv << "\n";
  std::cout << "checkpoint: " << res.final_checkpoint << "\n";
  return 0;
}

int cmd_train(json cfg) {
  const std::string out = resolve_out(cfg.at("out"));
  echo_config(cfg, out);
  const std::string precision = cfg.at("precision");
  if (precision == "f32") return run_train<float>(cfg, out);
  if (precision == "f64") return run_train<double>(cfg, out);
  throw icon::InvalidInputError("precision must be f32 or f64");
}

// ---- eval ----

template <typename S>
int run_eval(const json& cfg, const std::string& protocol, const std::string& out) {
  icon::ModelConfig mcfg;
  icon::ModelParams<S> params;
  const std::string ckpt = cfg.at("checkpoint");
  if (!ckpt.empty()) {
    icon::load_checkpoint<S>(ckpt, mcfg, params, nullptr);
  } else {
    // Only the model-free baseline can run without a checkpoint.
    if (!(protocol == "newode" &&
          cfg.at("mode").get<std::string>() == "wrong_operator"))
      throw icon::InvalidInputError("--checkpoint required for this protocol");
    icon::Rng r(0);
    params = icon::init_params<S>(mcfg, r);
  }

  icon::EvalOptions opt;
  opt.operators = cfg.at("operators");
  opt.cases_per_operator = cfg.at("cases_per_operator");
  opt.seed = cfg.at("seed").get<std::uint64_t>();

  std::vector<icon::EvalRow> rows;
  if (protocol == "ind" || protocol == "demos") {
    const auto dataset = icon::load_dataset(resolve_out(cfg.at("data")));
    const std::vector<int> families = parse_int_list(cfg.at("families"));
    const std::vector<int> j_values =
        protocol == "demos" ? std::vector<int>{1, 2, 3, 4, 5}
                            : parse_int_list(cfg.at("J"));
    rows = icon::eval_in_distribution(mcfg, params, dataset, families, j_values, opt);
  } else if (protocol == "resolution") {
    const auto dataset = icon::load_dataset(resolve_out(cfg.at("data")));
    rows = icon::eval_resolution(mcfg, params, dataset, cfg.at("family"),
                                 parse_int_list(cfg.at("counts")),
                                 cfg.at("J_fixed"), opt);
  } else if (protocol == "ood") {
    const int family = cfg.at("family");
    icon::OodRegion region = icon::default_ood_region(family);
    const std::string reg = cfg.at("region");
    if (!reg.empty() &&
        std::sscanf(reg.c_str(), "%lf:%lf,%lf:%lf", &region.lo0, &region.hi0,
                    &region.lo1, &region.hi1) != 4)
      throw icon::InvalidInputError("expected --region lo:hi,lo:hi, got " + reg);
    const std::string grid = cfg.at("grid");
    if (std::sscanf(grid.c_str(), "%dx%d", &region.cells0, &region.cells1) != 2 ||
        region.cells0 < 1 || region.cells1 < 1)
      throw icon::InvalidInputError("expected --grid CxC, got " + grid);
    rows = icon::eval_ood(mcfg, params, family, region, cfg.at("J_fixed"), opt);
  } else if (protocol == "newode") {
    const std::string mode_s = cfg.at("mode");
    icon::NewOdeMode mode;
    if (mode_s == "correct_demos") mode = icon::NewOdeMode::CorrectDemos;
    else if (mode_s == "wrong_operator") mode = icon::NewOdeMode::WrongOperator;
    else if (mode_s == "wrong_demos") mode = icon::NewOdeMode::WrongDemos;
    else throw icon::InvalidInputError("unknown mode " + mode_s);
    rows = icon::eval_new_equation(mcfg, params, parse_series(cfg.at("b")), mode,
                                   cfg.at("J_fixed"), opt);
  } else {
    throw icon::InvalidInputError("unknown protocol " + protocol);
  }

  const std::string csv = (fs::path(out) / ("report_" + protocol + ".csv")).string();
  const std::string js = (fs::path(out) / ("report_" + protocol + ".json")).string();
  icon::write_report_csv(csv, rows);
  icon::write_report_json(js, rows);
  std::cout << "rows: " << rows.size() << "\n";
  std::cout << "report: " << csv << "\n";
  std::cout << "report: " << js << "\n";
  return 0;
}

int cmd_eval(json cfg, const std::string& protocol) {
  const std::string out = resolve_out(cfg.at("out"));
  cfg["protocol"] = protocol;
  echo_config(cfg, out);
  const std::string ckpt = cfg.at("checkpoint");
  const std::string dtype = ckpt.empty() ? "f64" : checkpoint_dtype(ckpt);
  if (dtype == "f32") return run_eval<float>(cfg, protocol, out);
  if (dtype == "f64") return run_eval<double>(cfg, protocol, out);
  throw icon::FormatError(icon::FormatError::Kind::SchemaViolation,
                          "unknown checkpoint dtype '" + dtype + "'");
}

// ---- inspect ----

int cmd_inspect(const json& cfg) {
  const auto dataset = icon::load_dataset(resolve_out(cfg.at("data")));
  const int family = cfg.at("family");
  const icon::FamilyData* fam = nullptr;
  for (const auto& f : dataset)
    if (f.family == family) fam = &f;
  if (!fam) throw icon::InvalidInputError("family not present in dataset");
  const int op = cfg.at("operator");
  if (op < 0 || op >= fam->M) throw icon::InvalidInputError("operator index out of range");
  const std::vector<int> demo_pairs = parse_int_list(cfg.at("demos"));
  const int question = cfg.at("question");
  for (int p : demo_pairs)
    if (p < 0 || p >= fam->N) throw icon::InvalidInputError("demo pair index out of range");
  if (question < 0 || question >= fam->N)
    throw icon::InvalidInputError("question pair index out of range");

  const auto& schema = icon::family_schema(family);
  const int count = cfg.at("count");
  icon::Rng rng(cfg.at("seed").get<std::uint64_t>());
  std::vector<icon::CondQoIRecord> recs;
  for (int p : demo_pairs) {
    recs.push_back(count > 0 ? icon::trim_record(fam->record(op, p), schema, count, rng)
                             : fam->record(op, p));
  }
  recs.push_back(count > 0
                     ? icon::trim_record(fam->record(op, question), schema, count, rng)
                     : fam->record(op, question));
  std::vector<const icon::CondQoIRecord*> demos;
  for (std::size_t i = 0; i + 1 < recs.size(); ++i) demos.push_back(&recs[i]);
  const icon::PromptMatrix prompt = icon::build_prompt(demos, recs.back().condition);

  if (cfg.at("format") == "json") {
    json doc;
    doc["family"] = family;
    doc["operator"] = op;
    doc["demo_pairs"] = demo_pairs;
    doc["question_pair"] = question;
    doc["columns"] = prompt.cols();
    doc["rows"] = json::array();
    const std::vector<std::string> names{"term", "time", "space", "value", "idx1",
                                         "idx2", "idx3", "idx4", "idx5", "idxQ"};
    for (int r = 0; r < icon::PromptMatrix::rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < prompt.cols(); ++c) row.push_back(prompt.data(r, c));
      doc["rows"].push_back({{"name", names[std::size_t(r)]}, {"values", row}});
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "family " << family << " (" << schema.name << "), operator " << op
              << ", demos";
    for (int p : demo_pairs) std::cout << ' ' << p;
    std::cout << ", question " << question << "\n";
    std::cout << icon::prompt_debug_dump(prompt);
  }
  return 0;
}

// ---- profiles ----

void apply_profile(json& cfg, const std::string& profile, const std::string& sub) {
  if (profile.empty()) return;
  json p;
  if (profile == "smoke") {
    if (sub == "datagen") p = {{"families", "1"}, {"M", 8}, {"N", 12}};
    if (sub == "train")
      p = {{"families", "1"}, {"steps", 200}, {"batch_size", 8},
           {"warmup_steps", 50}, {"checkpoint_every", 100}};
    if (sub == "eval") p = {{"operators", 4}, {"cases_per_operator", 2}};
  } else if (profile == "desk") {
    if (sub == "datagen") p = {{"families", "1-2"}, {"M", 100}, {"N", 50}};
    if (sub == "train") p = {{"families", "1-2"}};
  } else if (profile == "paper") {
    // Full-scale settings for documentation; running them is out of scope
    // for a desktop box. Batch/steps are our defaults scaled up: the source
    // experiments do not report their absolute values.
    if (sub == "datagen") p = {{"families", "1-19"}, {"M", 1000}, {"N", 100}};
    if (sub == "train")
      p = {{"families", "1-19"}, {"steps", 100000}, {"batch_size", 64}};
  } else {
    throw icon::InvalidInputError("unknown profile " + profile);
  }
  merge_known(cfg, p, "profile " + profile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context operator learning toolkit"};
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads, "worker thread count for linear algebra");

  std::string config_path, profile;
  std::vector<std::string> sets;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--profile", profile, "config bundle: smoke, desk, or paper");
    sub->add_option("--set", sets, "override a config key: key=value");
  };

  // datagen
  json dg{{"families", "1-19"}, {"M", 100},  {"N", 50},
          {"seed", 0},          {"out", ""}};
  CLI::App* datagen = app.add_subcommand("datagen", "generate ground-truth data files");
  add_common(datagen);
  std::string dg_families;
  int dg_M = 0, dg_N = 0;
  std::uint64_t dg_seed = 0;
  std::string dg_out;
  datagen->add_option("--families", dg_families, "family ids, e.g. 1,2 or 1-19");
  datagen->add_option("--M", dg_M, "operators per family");
  datagen->add_option("--N", dg_N, "condition/QoI pairs per operator");
  datagen->add_option("--seed", dg_seed, "generation seed");
  datagen->add_option("--out", dg_out, "output directory");

  // train
  json tr{{"data", ""},        {"out", ""},          {"seed", 0},
          {"families", "all"}, {"steps", 20000},     {"batch_size", 32},
          {"peak_lr", 1e-3},   {"warmup_steps", 500},{"log_every", 100},
          {"checkpoint_every", 5000},                {"precision", "f32"},
          {"resume", ""},      {"d_model", 64},      {"n_heads", 4},
          {"n_enc_layers", 3}, {"n_dec_layers", 3},  {"d_ff", 256}};
  CLI::App* train = app.add_subcommand("train", "train the model on a dataset");
  add_common(train);
  std::string tr_data, tr_out, tr_families, tr_precision, tr_resume;
  int tr_steps = 0, tr_batch = 0;
  std::uint64_t tr_seed = 0;
  train->add_option("--data", tr_data, "dataset directory (with manifest.json)");
  train->add_option("--out", tr_out, "run output directory");
  train->add_option("--seed", tr_seed, "training seed");
  train->add_option("--families", tr_families, "family whitelist or 'all'");
  train->add_option("--steps", tr_steps, "optimizer steps");
  train->add_option("--batch", tr_batch, "batch size");
  train->add_option("--precision", tr_precision, "f32 or f64");
  train->add_option("--resume", tr_resume, "checkpoint to continue from");

  // eval
  json ev{{"checkpoint", ""}, {"data", ""},      {"out", ""},
          {"seed", 0},        {"families", "1-19"}, {"J", "1-5"},
          {"J_fixed", 5},     {"family", 17},    {"counts", "10,20,50,100,200,500"},
          {"region", ""},     {"grid", "10x10"}, {"b", "-0.3:0.3:0.1"},
          {"mode", "correct_demos"},             {"operators", 100},
          {"cases_per_operator", 5}};
  CLI::App* eval_cmd = app.add_subcommand("eval", "run an evaluation protocol");
  add_common(eval_cmd);
  std::string protocol;
  eval_cmd->add_option("protocol", protocol, "ind, demos, resolution, ood, or newode")
      ->required()
      ->check(CLI::IsMember({"ind", "demos", "resolution", "ood", "newode"}));
  std::string ev_ckpt, ev_data, ev_out, ev_families, ev_J, ev_counts, ev_region,
      ev_grid, ev_b, ev_mode;
  int ev_family = 0, ev_Jfix = 0;
  std::uint64_t ev_seed = 0;
  eval_cmd->add_option("--checkpoint", ev_ckpt, "model checkpoint");
  eval_cmd->add_option("--data", ev_data, "dataset directory");
  eval_cmd->add_option("--out", ev_out, "report output directory");
  eval_cmd->add_option("--seed", ev_seed, "evaluation seed");
  eval_cmd->add_option("--families", ev_families, "families for ind");
  eval_cmd->add_option("--J", ev_J, "demo counts for ind, e.g. 1-5");
  eval_cmd->add_option("--J-fixed", ev_Jfix, "demo count for other protocols");
  eval_cmd->add_option("--family", ev_family, "family for resolution/ood");
  eval_cmd->add_option("--counts", ev_counts, "key-value counts for resolution");
  eval_cmd->add_option("--region", ev_region, "ood sweep region lo:hi,lo:hi");
  eval_cmd->add_option("--grid", ev_grid, "ood cell grid, e.g. 10x10");
  eval_cmd->add_option("--b", ev_b, "extra-term series lo:hi:step for newode");
  eval_cmd->add_option("--mode", ev_mode,
                       "newode mode: correct_demos, wrong_operator, wrong_demos");

  // inspect
  json in{{"data", ""}, {"family", 1},  {"operator", 0}, {"demos", "0"},
          {"question", 1}, {"count", 0}, {"seed", 0},    {"format", "text"}};
  CLI::App* inspect = app.add_subcommand("inspect", "print one prompt matrix");
  add_common(inspect);
  std::string in_data, in_demos, in_format;
  int in_family = 0, in_op = 0, in_question = 0, in_count = 0;
  inspect->add_option("--data", in_data, "dataset directory");
  inspect->add_option("--family", in_family, "family id");
  inspect->add_option("--operator", in_op, "operator index");
  inspect->add_option("--demos", in_demos, "demo pair indices, e.g. 0,1");
  inspect->add_option("--question", in_question, "question pair index");
  inspect->add_option("--count", in_count, "key-value pairs per function (0 = all)");
  inspect->add_option("--format", in_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    Eigen::setNbThreads(threads);

    const auto flag = [&](CLI::App* sub, const std::string& name) {
      return sub->count("--" + name) > 0;
    };

    if (datagen->parsed()) {
      apply_profile(dg, profile, "datagen");
      apply_config_sources(dg, config_path, sets);
      if (flag(datagen, "families")) dg["families"] = dg_families;
      if (flag(datagen, "M")) dg["M"] = dg_M;
      if (flag(datagen, "N")) dg["N"] = dg_N;
      if (flag(datagen, "seed")) dg["seed"] = dg_seed;
      if (flag(datagen, "out")) dg["out"] = dg_out;
      return cmd_datagen(dg);
    }
    if (train->parsed()) {
      apply_profile(tr, profile, "train");
      apply_config_sources(tr, config_path, sets);
      if (flag(train, "data")) tr["data"] = tr_data;
      if (flag(train, "out")) tr["out"] = tr_out;
      if (flag(train, "seed")) tr["seed"] = tr_seed;
      if (flag(train, "families")) tr["families"] = tr_families;
      if (flag(train, "steps")) tr["steps"] = tr_steps;
      if (flag(train, "batch")) tr["batch_size"] = tr_batch;
      if (flag(train, "precision")) tr["precision"] = tr_precision;
      if (flag(train, "resume")) tr["resume"] = tr_resume;
      return cmd_train(tr);
    }
    if (eval_cmd->parsed()) {
      apply_profile(ev, profile, "eval");
      apply_config_sources(ev, config_path, sets);
      if (flag(eval_cmd, "checkpoint")) ev["checkpoint"] = ev_ckpt;
      if (flag(eval_cmd, "data")) ev["data"] = ev_data;
      if (flag(eval_cmd, "out")) ev["out"] = ev_out;
      if (flag(eval_cmd, "seed")) ev["seed"] = ev_seed;
      if (flag(eval_cmd, "families")) ev["families"] = ev_families;
      if (flag(eval_cmd, "J")) ev["J"] = ev_J;
      if (flag(eval_cmd, "J-fixed")) ev["J_fixed"] = ev_Jfix;
      if (flag(eval_cmd, "family")) ev["family"] = ev_family;
      if (flag(eval_cmd, "counts")) ev["counts"] = ev_counts;
      if (flag(eval_cmd, "region")) ev["region"] = ev_region;
      if (flag(eval_cmd, "grid")) ev["grid"] = ev_grid;
      if (flag(eval_cmd, "b")) ev["b"] = ev_b;
      if (flag(eval_cmd, "mode")) ev["mode"] = ev_mode;
      return cmd_eval(ev, protocol);
    }
    if (inspect->parsed()) {
      apply_config_sources(in, config_path, sets);
      if (flag(inspect, "data")) in["data"] = in_data;
      if (flag(inspect, "family")) in["family"] = in_family;
      if (flag(inspect, "operator")) in["operator"] = in_op;
      if (flag(inspect, "demos")) in["demos"] = in_demos;
      if (flag(inspect, "question")) in["question"] = in_question;
      if (flag(inspect, "count")) in["count"] = in_count;
      if (flag(inspect, "format")) in["format"] = in_format;
      return cmd_inspect(in);
    }
  } catch (const icon::InvalidInputError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const icon::FormatError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const icon::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
