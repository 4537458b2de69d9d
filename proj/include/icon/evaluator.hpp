#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "icon/dataset.hpp"
#include "icon/model.hpp"
#include "icon/ode_solvers.hpp"
#include "icon/trainer.hpp"

namespace icon {

struct CasePrediction {
  Eigen::VectorXd pred, truth;
};

// Pooled error metric: abs = mean |pred - truth| over every value of every
// case; rel = abs / mean |truth| pooled the same way.
std::pair<double, double> relative_error(const std::vector<CasePrediction>& cases);

struct EvalRow {
  std::string protocol;  // ind | resolution | ood | newode
  int family = 0;
  int j = 0;
  int resolution = 0;              // resolution protocol
  double cell_lo0 = 0, cell_hi0 = 0, cell_lo1 = 0, cell_hi1 = 0;  // ood cell
  std::string mode;                // newode mode
  double b_param = 0;              // newode b
  double abs_err = 0, rel_err = 0;
  int cases = 0;
  bool full_budget = true;  // false when stored data limited the case count
  double runtime_s = 0;
};

void write_report_csv(const std::string& path, const std::vector<EvalRow>& rows);
void write_report_json(const std::string& path, const std::vector<EvalRow>& rows);

struct EvalOptions {
  int operators = 100;    // operators per (family, J) or per cell
  int cases_per_operator = 5;
  int kv_min = 41, kv_max = 50;
  std::uint64_t seed = 0;
};

namespace detail_eval {

// J demo pair indices plus a question pair index, all distinct; one
// evaluation case. Pairs are never reused across the cases of one operator
// within a protocol run.
struct CaseIndices {
  int operator_index = 0;
  std::vector<int> demo_pairs;
  int question_pair = 0;
};

// Carve `cases` disjoint (J+1)-tuples out of an operator's N pairs.
inline std::vector<CaseIndices> carve_cases(int op, int n_pairs, int j, int cases,
                                            Rng& rng) {
  const int need = cases * (j + 1);
  if (need > n_pairs)
    throw InvalidInputError("carve_cases: operator has too few pairs");
  const std::vector<int> picks = sample_distinct(need, n_pairs, rng);
  std::vector<CaseIndices> out;
  for (int c = 0; c < cases; ++c) {
    CaseIndices ci;
    ci.operator_index = op;
    ci.demo_pairs.assign(picks.begin() + c * (j + 1), picks.begin() + c * (j + 1) + j);
    ci.question_pair = picks[std::size_t(c * (j + 1) + j)];
    for (int d : ci.demo_pairs)
      if (d == ci.question_pair)
        throw InvalidInputError("carve_cases: question pair reused as demo");
    out.push_back(std::move(ci));
  }
  return out;
}

}  // namespace detail_eval

// Run the model on one assembled case and return (pred, truth) at the
// question QoI keys. `question` may be trimmed or full-resolution.
template <typename S>
CasePrediction predict_case(const ModelConfig& mcfg, ModelParams<S>& params,
                            const std::vector<const CondQoIRecord*>& demos,
                            const CondQoIRecord& question) {
  PromptMatrix prompt = build_prompt(demos, question.condition);
  auto [queries, labels] = build_queries_and_labels(question.qoi);
  const auto pred = model_forward<S>(
      mcfg, params, prompt.data.template cast<S>().eval(), prompt.col_mask,
      queries.data.template cast<S>().eval());
  CasePrediction cp;
  cp.pred = pred.row(0).transpose().template cast<double>();
  cp.truth = labels.values;
  return cp;
}

// In-distribution protocol: per (family, J), `operators` x `cases_per_operator`
// cases with demo/question pairs disjoint within each operator.
template <typename S>
std::vector<EvalRow> eval_in_distribution(const ModelConfig& mcfg, ModelParams<S>& params,
                                          const std::vector<FamilyData>& dataset,
                                          const std::vector<int>& families,
                                          const std::vector<int>& j_values,
                                          const EvalOptions& opt) {
  std::vector<EvalRow> rows;
  const SeedTree root(opt.seed);
  for (int family : families) {
    const FamilyData* fam = nullptr;
    for (const FamilyData& d : dataset)
      if (d.family == family) fam = &d;
    if (!fam) throw InvalidInputError("eval_in_distribution: family not in dataset");
    const FamilySchema& schema = family_schema(family);
    for (int j : j_values) {
      const auto t0 = std::chrono::steady_clock::now();
      EvalRow row;
      row.protocol = "ind";
      row.family = family;
      row.j = j;
      const int ops = std::min(opt.operators, fam->M);
      const int per_op = std::min(opt.cases_per_operator, fam->N / (j + 1));
      if (per_op < 1)
        throw InvalidInputError("eval_in_distribution: too few pairs per operator");
      row.full_budget = (ops == opt.operators && per_op == opt.cases_per_operator);
      std::vector<CasePrediction> preds;
      for (int op = 0; op < ops; ++op) {
        const SeedTree opb = root.child("ind").child("family", std::uint64_t(family))
                                 .child("j", std::uint64_t(j))
                                 .child("operator", std::uint64_t(op));
        Rng rng = opb.rng();
        const auto cases = detail_eval::carve_cases(op, fam->N, j, per_op, rng);
        for (const auto& ci : cases) {
          std::vector<CondQoIRecord> trimmed;
          for (int d : ci.demo_pairs) {
            const int n = opt.kv_min +
                          int(rng.below(std::uint64_t(opt.kv_max - opt.kv_min + 1)));
            trimmed.push_back(trim_record(fam->record(op, d), schema, n, rng));
          }
          const int nq = opt.kv_min +
                         int(rng.below(std::uint64_t(opt.kv_max - opt.kv_min + 1)));
          trimmed.push_back(
              trim_record(fam->record(op, ci.question_pair), schema, nq, rng));
          std::vector<const CondQoIRecord*> demo_ptrs;
          for (int d = 0; d < j; ++d) demo_ptrs.push_back(&trimmed[std::size_t(d)]);
          preds.push_back(predict_case(mcfg, params, demo_ptrs, trimmed.back()));
        }
      }
      std::tie(row.abs_err, row.rel_err) = relative_error(preds);
      row.cases = int(preds.size());
      row.runtime_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(row);
    }
  }
  return rows;
}

// Resolution sweep on a dense space-time family: conditions and demo QoIs
// subsampled to `count` pairs, question queried on the full stored grid.
template <typename S>
std::vector<EvalRow> eval_resolution(const ModelConfig& mcfg, ModelParams<S>& params,
                                     const std::vector<FamilyData>& dataset, int family,
                                     const std::vector<int>& counts, int j,
                                     const EvalOptions& opt) {
  const FamilyData* fam = nullptr;
  for (const FamilyData& d : dataset)
    if (d.family == family) fam = &d;
  if (!fam) throw InvalidInputError("eval_resolution: family not in dataset");
  const FamilySchema& schema = family_schema(family);
  if (schema.prefix_subsample)
    throw InvalidInputError("eval_resolution: needs a dense-grid family");
  int min_size = schema.qoi.count;
  for (const TermSchema& t : schema.condition_terms) min_size = std::min(min_size, t.count);

  std::vector<EvalRow> rows;
  const SeedTree root(opt.seed);
  for (int count : counts) {
    if (count < 1 || count > min_size)
      throw InvalidInputError("eval_resolution: count exceeds stored grid");
    const auto t0 = std::chrono::steady_clock::now();
    EvalRow row;
    row.protocol = "resolution";
    row.family = family;
    row.j = j;
    row.resolution = count;
    const int ops = std::min(opt.operators, fam->M);
    const int per_op = std::min(opt.cases_per_operator, fam->N / (j + 1));
    if (per_op < 1) throw InvalidInputError("eval_resolution: too few pairs");
    row.full_budget = (ops == opt.operators && per_op == opt.cases_per_operator);
    std::vector<CasePrediction> preds;
    for (int op = 0; op < ops; ++op) {
      const SeedTree opb = root.child("resolution").child("count", std::uint64_t(count))
                               .child("operator", std::uint64_t(op));
      Rng rng = opb.rng();
      const auto cases = detail_eval::carve_cases(op, fam->N, j, per_op, rng);
      for (const auto& ci : cases) {
        std::vector<CondQoIRecord> trimmed;
        for (int d : ci.demo_pairs)
          trimmed.push_back(trim_record(fam->record(op, d), schema, count, rng));
        // Question: condition at `count` pairs, QoI on the full stored grid.
        CondQoIRecord question = fam->record(op, ci.question_pair);
        for (auto& f : question.condition)
          if (count < f.size())
            f = subsample_pairs(f, count, rng, SubsampleScheme::UniformRandom);
        std::vector<const CondQoIRecord*> demo_ptrs;
        for (int d = 0; d < j; ++d) demo_ptrs.push_back(&trimmed[std::size_t(d)]);
        preds.push_back(predict_case(mcfg, params, demo_ptrs, question));
      }
    }
    std::tie(row.abs_err, row.rel_err) = relative_error(preds);
    row.cases = int(preds.size());
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  return rows;
}

struct OodRegion {
  std::string param0, param1;  // swept scalar parameter names
  double lo0 = 0.1, hi0 = 3.0;
  double lo1 = -3.0, hi1 = 3.0;
  int cells0 = 10, cells1 = 10;
};

// Default swept parameters per family: the coefficient pair the training
// intervals of which the sweep region extends.
inline OodRegion default_ood_region(int family) {
  OodRegion r;
  switch (family) {
    case 5:
    case 6:
      r.param0 = "a2";  // training U(0.5,1.5)
      r.param1 = "a1";  // training U(-1,1)
      break;
    case 11:
    case 12:
      r.param0 = "a";  // training U(0.5,1.5)
      r.param1 = "c";  // training U(-2,2)
      break;
    default:
      throw InvalidInputError("default_ood_region: unsupported family");
  }
  return r;
}

// Out-of-distribution sweep: fresh operators generated uniformly inside
// each parameter cell; J fixed, key-value count fixed at kv_max.
template <typename S>
std::vector<EvalRow> eval_ood(const ModelConfig& mcfg, ModelParams<S>& params, int family,
                              const OodRegion& region, int j, const EvalOptions& opt) {
  const FamilySchema& schema = family_schema(family);
  std::vector<EvalRow> rows;
  const int pairs_per_op = opt.cases_per_operator * (j + 1);
  for (int c0 = 0; c0 < region.cells0; ++c0)
    for (int c1 = 0; c1 < region.cells1; ++c1) {
      const auto t0 = std::chrono::steady_clock::now();
      EvalRow row;
      row.protocol = "ood";
      row.family = family;
      row.j = j;
      row.cell_lo0 = region.lo0 + (region.hi0 - region.lo0) * c0 / region.cells0;
      row.cell_hi0 = region.lo0 + (region.hi0 - region.lo0) * (c0 + 1) / region.cells0;
      row.cell_lo1 = region.lo1 + (region.hi1 - region.lo1) * c1 / region.cells1;
      row.cell_hi1 = region.lo1 + (region.hi1 - region.lo1) * (c1 + 1) / region.cells1;
      ParamOverride ov;
      ov.ranges[region.param0] = {row.cell_lo0, row.cell_hi0};
      ov.ranges[region.param1] = {row.cell_lo1, row.cell_hi1};
      const std::uint64_t cell_seed =
          SeedTree(opt.seed).child("ood", std::uint64_t(c0 * region.cells1 + c1)).seed();
      FamilyData fam;
      try {
        fam = generate_family(family, opt.operators, pairs_per_op, cell_seed, &ov);
      } catch (const NumericalError& e) {
        throw NumericalError("ood cell (" + std::to_string(c0) + "," +
                             std::to_string(c1) + "): " + e.what());
      }
      std::vector<CasePrediction> preds;
      const SeedTree root(cell_seed);
      for (int op = 0; op < fam.M; ++op) {
        Rng rng = root.child("cases", std::uint64_t(op)).rng();
        const auto cases =
            detail_eval::carve_cases(op, fam.N, j, opt.cases_per_operator, rng);
        for (const auto& ci : cases) {
          std::vector<CondQoIRecord> trimmed;
          for (int d : ci.demo_pairs)
            trimmed.push_back(trim_record(fam.record(op, d), schema, opt.kv_max, rng));
          trimmed.push_back(
              trim_record(fam.record(op, ci.question_pair), schema, opt.kv_max, rng));
          std::vector<const CondQoIRecord*> demo_ptrs;
          for (int d = 0; d < j; ++d) demo_ptrs.push_back(&trimmed[std::size_t(d)]);
          preds.push_back(predict_case(mcfg, params, demo_ptrs, trimmed.back()));
        }
      }
      std::tie(row.abs_err, row.rel_err) = relative_error(preds);
      row.cases = int(preds.size());
      row.runtime_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rows.push_back(row);
    }
  return rows;
}

enum class NewOdeMode { CorrectDemos, WrongOperator, WrongDemos };

inline std::string to_string(NewOdeMode m) {
  switch (m) {
    case NewOdeMode::CorrectDemos: return "correct_demos";
    case NewOdeMode::WrongOperator: return "wrong_operator";
    case NewOdeMode::WrongDemos: return "wrong_demos";
  }
  return "?";
}

// New-equation study: questions always come from the held-out ODE family
// (id 20) at a fixed b. correct_demos uses matching demos; wrong_demos uses
// demos from the trained forward family (id 3) with the same (a1, a2);
// wrong_operator skips the model and applies the id-3 solver directly.
template <typename S>
std::vector<EvalRow> eval_new_equation(const ModelConfig& mcfg, ModelParams<S>& params,
                                       const std::vector<double>& b_values,
                                       NewOdeMode mode, int j, const EvalOptions& opt) {
  const FamilySchema& new_schema = family_schema(20);
  const FamilySchema& base_schema = family_schema(3);
  std::vector<EvalRow> rows;
  for (double b : b_values) {
    const auto t0 = std::chrono::steady_clock::now();
    EvalRow row;
    row.protocol = "newode";
    row.family = 20;
    row.j = j;
    row.mode = to_string(mode);
    row.b_param = b;
    ParamOverride ov;
    ov.fixed["b"] = b;
    const std::uint64_t b_seed =
        SeedTree(opt.seed).child("newode").child("b", std::uint64_t(std::llround((b + 1.0) * 1e6))).seed();
    const int pairs_per_op = opt.cases_per_operator * (j + 1);
    FamilyData fam = generate_family(20, opt.operators, pairs_per_op, b_seed, &ov);
    std::vector<CasePrediction> preds;
    const SeedTree root(b_seed);
    for (int op = 0; op < fam.M; ++op) {
      Rng rng = root.child("cases", std::uint64_t(op)).rng();
      const auto cases =
          detail_eval::carve_cases(op, fam.N, j, opt.cases_per_operator, rng);
      // Demos from the trained family when the mode asks for wrong demos.
      OperatorSpec base_op;
      base_op.family = 3;
      base_op.scalars["a1"] = fam.operators[std::size_t(op)].scalars.at("a1");
      base_op.scalars["a2"] = fam.operators[std::size_t(op)].scalars.at("a2");
      for (const auto& ci : cases) {
        const int nq =
            opt.kv_min + int(rng.below(std::uint64_t(opt.kv_max - opt.kv_min + 1)));
        const CondQoIRecord question =
            trim_record(fam.record(op, ci.question_pair), new_schema, nq, rng);
        if (mode == NewOdeMode::WrongOperator) {
          // Apply the trained-family solver to the question condition.
          OdeParams p;
          p.family = OdeFamily::Ode2;
          p.a1 = base_op.scalars.at("a1");
          p.a2 = base_op.scalars.at("a2");
          const CondQoIRecord full = fam.record(op, ci.question_pair);
          const Grid1D grid(full.condition[0].size(), 0.0, 1.0);
          const Eigen::VectorXd u =
              solve_ode_forward(p, full.condition[1].v[0], full.condition[0].v, grid);
          CasePrediction cp;
          cp.truth = question.qoi.v;
          cp.pred.resize(question.qoi.size());
          // The trimmed QoI keeps prefix order, so sample the solve at the
          // same leading grid points.
          for (int i = 0; i < question.qoi.size(); ++i) cp.pred[i] = u[i];
          preds.push_back(std::move(cp));
          continue;
        }
        std::vector<CondQoIRecord> demos;
        for (std::size_t d = 0; d < ci.demo_pairs.size(); ++d) {
          const int n =
              opt.kv_min + int(rng.below(std::uint64_t(opt.kv_max - opt.kv_min + 1)));
          if (mode == NewOdeMode::CorrectDemos) {
            demos.push_back(
                trim_record(fam.record(op, ci.demo_pairs[d]), new_schema, n, rng));
          } else {
            Rng drng = root.child("wrong_demo", std::uint64_t(op))
                           .child("pair", std::uint64_t(ci.demo_pairs[d])).rng();
            CondQoIRecord rec = generate_pair(base_op, op, ci.demo_pairs[d], drng);
            demos.push_back(trim_record(rec, base_schema, n, rng));
          }
        }
        std::vector<const CondQoIRecord*> demo_ptrs;
        for (const auto& d : demos) demo_ptrs.push_back(&d);
        preds.push_back(predict_case(mcfg, params, demo_ptrs, question));
      }
    }
    std::tie(row.abs_err, row.rel_err) = relative_error(preds);
    row.cases = int(preds.size());
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace icon
