#pragma once

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "icon/dataset.hpp"
#include "icon/model.hpp"
#include "icon/prompt.hpp"
#include "json.hpp"

namespace icon {

struct TrainConfig {
  int batch_size = 32;
  int steps = 20000;
  double peak_lr = 1e-3;
  int warmup_steps = 500;
  double clip_norm = 1.0;
  int j_min = 1, j_max = 5;    // demos per prompt
  int kv_min = 41, kv_max = 50;  // key-value pairs per function
  std::uint64_t seed = 0;
  int log_every = 100;
  int checkpoint_every = 5000;
  std::vector<int> families;   // whitelist; indices into the loaded dataset
  std::string out_dir;

  void validate() const {
    if (batch_size < 1 || steps < 1) throw InvalidInputError("TrainConfig: batch/steps");
    if (j_min < 1 || j_max > kDemoCapacity || j_min > j_max)
      throw InvalidInputError("TrainConfig: J range outside [1, capacity]");
    if (kv_min < 2 || kv_min > kv_max)
      throw InvalidInputError("TrainConfig: bad key-value range");
    if (families.empty()) throw InvalidInputError("TrainConfig: empty family whitelist");
  }
};

// Linear warmup to peak_lr, then cosine decay to zero at `steps`.
inline double learning_rate(const TrainConfig& cfg, int step) {
  if (step < cfg.warmup_steps) return cfg.peak_lr * double(step + 1) / cfg.warmup_steps;
  const double progress =
      double(step - cfg.warmup_steps) / std::max(1, cfg.steps - cfg.warmup_steps);
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, progress)));
}

// Masked mean squared error over valid query positions, pooled across the
// batch elements.
inline double mse_loss(const std::vector<Eigen::VectorXd>& preds,
                       const std::vector<LabelVector>& labels) {
  if (preds.size() != labels.size() || preds.empty())
    throw InvalidInputError("mse_loss: batch size mismatch");
  double sum = 0.0;
  long long count = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != labels[i].values.size())
      throw InvalidInputError("mse_loss: length mismatch");
    for (Eigen::Index q = 0; q < preds[i].size(); ++q) {
      if (!labels[i].mask[q]) continue;
      const double d = preds[i][q] - labels[i].values[q];
      sum += d * d;
      ++count;
    }
  }
  if (count == 0) throw InvalidInputError("mse_loss: all positions masked");
  return sum / double(count);
}

struct BatchElementInfo {
  int family = 0;
  int operator_index = 0;
  int j = 0;
  std::vector<int> demo_pairs;
  int question_pair = 0;
};

struct TrainingBatch {
  Batch batch;
  std::vector<BatchElementInfo> info;
};

// Trim one record to the per-prompt key-value count n. ODE families use the
// prefix rule (first n-1 pairs of c, first n of u); other families draw a
// uniform subset per function, with count clamped to the stored size.
inline CondQoIRecord trim_record(const CondQoIRecord& rec, const FamilySchema& schema,
                                 int n, Rng& rng) {
  CondQoIRecord out = rec;
  if (schema.prefix_subsample) {
    for (std::size_t t = 0; t < out.condition.size(); ++t) {
      const TermSchema& term = schema.condition_terms[t];
      const int keep = term.name == "c" ? n - 1 : std::min(n, int(term.count));
      if (keep < out.condition[t].size())
        out.condition[t] =
            subsample_pairs(out.condition[t], keep, rng, SubsampleScheme::Prefix);
    }
    const int keep = schema.qoi.name == "c" ? n - 1 : n;
    if (keep < out.qoi.size())
      out.qoi = subsample_pairs(out.qoi, keep, rng, SubsampleScheme::Prefix);
  } else {
    for (auto& f : out.condition) {
      const int keep = std::min(n, f.size());
      if (keep < f.size())
        f = subsample_pairs(f, keep, rng, SubsampleScheme::UniformRandom);
    }
    const int keep = std::min(n, int(out.qoi.size()));
    if (keep < out.qoi.size())
      out.qoi = subsample_pairs(out.qoi, keep, rng, SubsampleScheme::UniformRandom);
  }
  return out;
}

// Draw k distinct values from [0, n).
inline std::vector<int> sample_distinct(int k, int n, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < k; ++i)
    std::swap(idx[i], idx[i + int(rng.below(std::uint64_t(n - i)))]);
  idx.resize(k);
  return idx;
}

// One prompt/queries/labels element from a chosen operator: J demo pairs
// plus a distinct question pair, each trimmed to a fresh key-value count.
inline void assemble_element(const FamilyData& fam, const TrainConfig& cfg, int op,
                             const std::vector<int>& pair_idx, Rng& rng,
                             std::vector<PromptMatrix>& prompts,
                             std::vector<QueryMatrix>& queries,
                             std::vector<LabelVector>& labels) {
  const FamilySchema& schema = family_schema(fam.family);
  const int j = int(pair_idx.size()) - 1;
  std::vector<CondQoIRecord> trimmed;
  trimmed.reserve(pair_idx.size());
  for (int idx : pair_idx) {
    const int n = cfg.kv_min + int(rng.below(std::uint64_t(cfg.kv_max - cfg.kv_min + 1)));
    trimmed.push_back(trim_record(fam.record(op, idx), schema, n, rng));
  }
  std::vector<const CondQoIRecord*> demos;
  for (int d = 0; d < j; ++d) demos.push_back(&trimmed[std::size_t(d)]);
  prompts.push_back(build_prompt(demos, trimmed.back().condition));
  auto [q, l] = build_queries_and_labels(trimmed.back().qoi);
  queries.push_back(std::move(q));
  labels.push_back(std::move(l));
}

inline TrainingBatch make_training_batch(const std::vector<FamilyData>& dataset,
                                         const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<const FamilyData*> pool;
  for (int f : cfg.families) {
    const FamilyData* found = nullptr;
    for (const FamilyData& d : dataset)
      if (d.family == f) found = &d;
    if (!found) throw InvalidInputError("make_training_batch: family not in dataset");
    pool.push_back(found);
  }
  TrainingBatch out;
  std::vector<PromptMatrix> prompts;
  std::vector<QueryMatrix> queries;
  std::vector<LabelVector> labels;
  for (int b = 0; b < cfg.batch_size; ++b) {
    BatchElementInfo info;
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      const FamilyData& fam = *pool[rng.below(pool.size())];
      const int j = cfg.j_min + int(rng.below(std::uint64_t(cfg.j_max - cfg.j_min + 1)));
      if (fam.N < j + 1) continue;  // operator cannot host J demos + question
      const int op = int(rng.below(std::uint64_t(fam.M)));
      std::vector<int> picks = sample_distinct(j + 1, fam.N, rng);
      assemble_element(fam, cfg, op, picks, rng, prompts, queries, labels);
      info.family = fam.family;
      info.operator_index = op;
      info.j = j;
      info.demo_pairs.assign(picks.begin(), picks.end() - 1);
      info.question_pair = picks.back();
      placed = true;
    }
    if (!placed)
      throw InvalidInputError("make_training_batch: no operator with enough pairs");
    out.info.push_back(std::move(info));
  }
  out.batch = pad_and_batch(std::move(prompts), std::move(queries), std::move(labels));
  return out;
}

// --- optimizer ---

template <typename S>
struct AdamState {
  ModelParams<S> m, v;
  long long t = 0;

  void setup(const ModelConfig& cfg) {
    m.setup(cfg);
    m.set_zero();
    v.setup(cfg);
    v.set_zero();
    t = 0;
  }
};

template <typename S>
double global_grad_norm(ModelParams<S>& grads) {
  double sq = 0.0;
  grads.visit([&](const std::string&, Eigen::Index r, Eigen::Index c, S* p) {
    for (Eigen::Index i = 0; i < r * c; ++i) sq += double(p[i]) * double(p[i]);
  });
  return std::sqrt(sq);
}

// One Adam update (beta1=0.9, beta2=0.999, eps=1e-8) with global-norm
// clipping applied to the gradients first. Pure in (params, grads, state).
template <typename S>
void adam_step(ModelParams<S>& params, ModelParams<S>& grads, AdamState<S>& state,
               double lr, double clip_norm) {
  const double norm = global_grad_norm(grads);
  const S scale = S(norm > clip_norm ? clip_norm / norm : 1.0);
  state.t += 1;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double bc1 = 1.0 - std::pow(b1, double(state.t));
  const double bc2 = 1.0 - std::pow(b2, double(state.t));

  std::vector<S*> mp, vp;
  state.m.visit([&](const std::string&, Eigen::Index, Eigen::Index, S* p) { mp.push_back(p); });
  state.v.visit([&](const std::string&, Eigen::Index, Eigen::Index, S* p) { vp.push_back(p); });
  std::vector<S*> pp;
  params.visit([&](const std::string&, Eigen::Index, Eigen::Index, S* p) { pp.push_back(p); });
  std::size_t blk = 0;
  grads.visit([&](const std::string&, Eigen::Index r, Eigen::Index c, S* g) {
    S* m = mp[blk];
    S* v = vp[blk];
    S* w = pp[blk];
    for (Eigen::Index i = 0; i < r * c; ++i) {
      const S gi = g[i] * scale;
      m[i] = S(b1) * m[i] + S(1 - b1) * gi;
      v[i] = S(b2) * v[i] + S(1 - b2) * gi * gi;
      const double mhat = double(m[i]) / bc1;
      const double vhat = double(v[i]) / bc2;
      w[i] = S(double(w[i]) - lr * mhat / (std::sqrt(vhat) + eps));
    }
    ++blk;
  });
}

// --- checkpoints ---
// JSON header line (format/version/dtype/model config/training state),
// then per-parameter length-prefixed native-precision blocks in visit
// order: params, adam m, adam v. CRC-32 footer over the payload.

namespace detail_ckpt {

template <typename S>
void put_blocks(std::string& out, ModelParams<S>& p) {
  p.visit([&](const std::string&, Eigen::Index r, Eigen::Index c, S* data) {
    const std::uint32_t n = std::uint32_t(r * c);
    for (int i = 0; i < 4; ++i) out.push_back(char((n >> (8 * i)) & 0xff));
    const std::size_t pos = out.size();
    out.resize(pos + sizeof(S) * n);
    std::memcpy(out.data() + pos, data, sizeof(S) * n);
  });
}

template <typename S>
void get_blocks(const unsigned char*& p, std::size_t& left, ModelParams<S>& out) {
  out.visit([&](const std::string& name, Eigen::Index r, Eigen::Index c, S* data) {
    if (left < 4) throw FormatError(FormatError::Kind::Truncated, "checkpoint truncated");
    std::uint32_t n = 0;
    for (int i = 0; i < 4; ++i) n |= std::uint32_t(p[i]) << (8 * i);
    p += 4;
    left -= 4;
    if (n != std::uint32_t(r * c))
      throw FormatError(FormatError::Kind::SchemaViolation,
                        "checkpoint block size mismatch at " + name);
    if (left < sizeof(S) * n)
      throw FormatError(FormatError::Kind::Truncated, "checkpoint truncated");
    std::memcpy(data, p, sizeof(S) * n);
    p += sizeof(S) * n;
    left -= sizeof(S) * n;
  });
}

}  // namespace detail_ckpt

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"d_model", c.d_model},        {"n_heads", c.n_heads},
       {"n_enc_layers", c.n_enc_layers}, {"n_dec_layers", c.n_dec_layers},
       {"d_ff", c.d_ff},              {"prompt_rows", c.prompt_rows},
       {"query_rows", c.query_rows},  {"out_dim", c.out_dim}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c.d_model = j.at("d_model");
  c.n_heads = j.at("n_heads");
  c.n_enc_layers = j.at("n_enc_layers");
  c.n_dec_layers = j.at("n_dec_layers");
  c.d_ff = j.at("d_ff");
  c.prompt_rows = j.at("prompt_rows");
  c.query_rows = j.at("query_rows");
  c.out_dim = j.at("out_dim");
}

template <typename S>
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     ModelParams<S>& params, AdamState<S>* adam, long long step) {
  nlohmann::json header = {{"format", "iccp"},
                           {"version", 1},
                           {"dtype", sizeof(S) == 4 ? "f32" : "f64"},
                           {"model", cfg},
                           {"step", step},
                           {"adam", adam != nullptr},
                           {"adam_t", adam ? adam->t : 0}};
  std::string out = header.dump();
  out.push_back('\n');
  const std::size_t payload_start = out.size();
  detail_ckpt::put_blocks(out, params);
  if (adam) {
    detail_ckpt::put_blocks(out, adam->m);
    detail_ckpt::put_blocks(out, adam->v);
  }
  const std::uint32_t crc =
      crc32(reinterpret_cast<const unsigned char*>(out.data()) + payload_start,
            out.size() - payload_start);
  for (int i = 0; i < 4; ++i) out.push_back(char((crc >> (8 * i)) & 0xff));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidInputError("cannot write " + path);
  f.write(out.data(), std::streamsize(out.size()));
  if (!f) throw InvalidInputError("write failed: " + path);
}

template <typename S>
long long load_checkpoint(const std::string& path, ModelConfig& cfg,
                          ModelParams<S>& params, AdamState<S>* adam) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidInputError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string::npos)
    throw FormatError(FormatError::Kind::Truncated, "checkpoint missing header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::SchemaViolation,
                      std::string("bad checkpoint header: ") + e.what());
  }
  if (header.value("format", "") != "iccp")
    throw FormatError(FormatError::Kind::SchemaViolation, "not a checkpoint file");
  if (header.value("version", 0) != 1)
    throw FormatError(FormatError::Kind::VersionMismatch, "unsupported checkpoint version");
  const std::string want_dtype = sizeof(S) == 4 ? "f32" : "f64";
  if (header.value("dtype", "") != want_dtype)
    throw FormatError(FormatError::Kind::SchemaViolation, "checkpoint dtype mismatch");
  cfg = header.at("model").get<ModelConfig>();

  if (bytes.size() < nl + 1 + 4)
    throw FormatError(FormatError::Kind::Truncated, "checkpoint missing footer");
  const std::size_t payload_len = bytes.size() - nl - 1 - 4;
  const unsigned char* payload =
      reinterpret_cast<const unsigned char*>(bytes.data()) + nl + 1;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= std::uint32_t((unsigned char)bytes[bytes.size() - 4 + i]) << (8 * i);
  if (crc32(payload, payload_len) != stored)
    throw FormatError(FormatError::Kind::ChecksumFailure, "checkpoint checksum mismatch");

  params.setup(cfg);
  const unsigned char* p = payload;
  std::size_t left = payload_len;
  detail_ckpt::get_blocks(p, left, params);
  const bool has_adam = header.value("adam", false);
  if (adam) {
    if (!has_adam)
      throw FormatError(FormatError::Kind::SchemaViolation,
                        "checkpoint has no optimizer state");
    adam->setup(cfg);
    detail_ckpt::get_blocks(p, left, adam->m);
    detail_ckpt::get_blocks(p, left, adam->v);
    adam->t = header.value("adam_t", 0ll);
  }
  return header.value("step", 0ll);
}

// --- training loop ---

struct TrainResult {
  std::string final_checkpoint;
  std::string metrics_csv;
  double final_loss = 0.0;
  long long steps_run = 0;
};

// Algorithm: per step, assemble a fresh random batch, take one clipped Adam
// step on the masked MSE. Deterministic per (configs, seed) at 64-bit.
// Throws NumericalError on a non-finite loss after dumping the offending
// batch description.
template <typename S>
TrainResult train(const std::vector<FamilyData>& dataset, const TrainConfig& tcfg,
                  const ModelConfig& mcfg, ModelParams<S>& params, AdamState<S>& adam,
                  long long start_step = 0) {
  tcfg.validate();
  mcfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(tcfg.out_dir);
  const fs::path metrics_path = fs::path(tcfg.out_dir) / "metrics.csv";
  std::ofstream metrics(metrics_path,
                        start_step == 0 ? std::ios::trunc : std::ios::app);
  if (start_step == 0) metrics << "step,loss,lr,elapsed_s\n";

  const SeedTree root(tcfg.seed);
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult res;
  res.metrics_csv = metrics_path.string();
  double loss = 0.0;
  for (long long step = start_step; step < tcfg.steps; ++step) {
    Rng rng = root.child("batch", std::uint64_t(step)).rng();
    TrainingBatch tb = make_training_batch(dataset, tcfg, rng);
    ModelParams<S> grads;
    grads.setup(mcfg);
    grads.set_zero();
    loss = double(loss_and_gradients<S>(mcfg, params, tb.batch, grads));
    if (!std::isfinite(loss)) {
      const fs::path dump = fs::path(tcfg.out_dir) / "nan_batch.json";
      nlohmann::json j = nlohmann::json::array();
      for (const BatchElementInfo& e : tb.info)
        j.push_back({{"family", e.family}, {"operator", e.operator_index},
                     {"j", e.j}, {"question_pair", e.question_pair}});
      std::ofstream(dump) << j.dump(2) << "\n";
      throw NumericalError("train: non-finite loss at step " + std::to_string(step) +
                           "; batch dumped to " + dump.string());
    }
    adam_step(params, grads, adam, learning_rate(tcfg, int(step)), tcfg.clip_norm);

    if (step % tcfg.log_every == 0 || step + 1 == tcfg.steps) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      metrics << step << ',' << loss << ',' << learning_rate(tcfg, int(step)) << ','
              << elapsed << '\n';
      metrics.flush();
    }
    const bool at_cadence =
        tcfg.checkpoint_every > 0 && (step + 1) % tcfg.checkpoint_every == 0;
    if (at_cadence || step + 1 == tcfg.steps) {
      const fs::path ck =
          fs::path(tcfg.out_dir) / ("checkpoint_" + std::to_string(step + 1) + ".iccp");
      save_checkpoint(ck.string(), mcfg, params, &adam, step + 1);
      res.final_checkpoint = ck.string();
    }
  }
  res.final_loss = loss;
  res.steps_run = tcfg.steps - start_step;
  return res;
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  bool pass = false;
};

// Central-difference check on a small random model/batch; `corrupt`
// perturbs one analytic gradient as a negative control.
GradCheckReport grad_check(const ModelConfig& cfg, int n_sampled, double tolerance,
                           std::uint64_t seed = 29, bool corrupt = false);

}  // namespace icon
