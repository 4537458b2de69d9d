#include "icon/prompt.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

namespace icon {

namespace {

void fill_columns(Eigen::MatrixXd& m, int& col, const KeyValueFunction& f,
                  int index_row, double index_sign) {
  f.validate();
  for (int i = 0; i < f.size(); ++i, ++col) {
    m(0, col) = double(f.term_id);
    m(1, col) = f.t[i];
    m(2, col) = f.x[i];
    m(3, col) = f.v[i];
    m(index_row, col) = index_sign;
  }
}

}  // namespace

PromptMatrix build_prompt(const std::vector<const CondQoIRecord*>& demos,
                          const std::vector<KeyValueFunction>& question_cond,
                          int j_max) {
  if (j_max < 1 || j_max > kDemoCapacity)
    throw InvalidInputError("build_prompt: demo capacity out of range");
  if (demos.empty() || int(demos.size()) > j_max)
    throw InvalidInputError("build_prompt: need 1.." + std::to_string(j_max) + " demos");
  if (question_cond.empty())
    throw InvalidInputError("build_prompt: empty question condition");
  const std::size_t n_terms = demos[0]->condition.size();
  for (const CondQoIRecord* d : demos)
    if (d->condition.size() != n_terms)
      throw InvalidInputError("build_prompt: demos have mixed term schemas");
  if (question_cond.size() != n_terms)
    throw InvalidInputError("build_prompt: question condition term count mismatch");

  int cols = 0;
  for (const CondQoIRecord* d : demos) {
    for (const KeyValueFunction& f : d->condition) cols += f.size();
    cols += d->qoi.size();
  }
  for (const KeyValueFunction& f : question_cond) cols += f.size();

  PromptMatrix p;
  p.data = Eigen::MatrixXd::Zero(PromptMatrix::rows(), cols);
  p.col_mask = Eigen::VectorXi::Ones(cols);
  int col = 0;
  for (std::size_t j = 0; j < demos.size(); ++j) {
    const int index_row = 4 + int(j);
    for (const KeyValueFunction& f : demos[j]->condition)
      fill_columns(p.data, col, f, index_row, 1.0);
    fill_columns(p.data, col, demos[j]->qoi, index_row, -1.0);
  }
  for (const KeyValueFunction& f : question_cond)
    fill_columns(p.data, col, f, 4 + kDemoCapacity, 1.0);
  return p;
}

std::pair<QueryMatrix, LabelVector> build_queries_and_labels(
    const KeyValueFunction& question_qoi) {
  question_qoi.validate();
  const int n = question_qoi.size();
  QueryMatrix q;
  q.data.resize(3, n);
  q.col_mask = Eigen::VectorXi::Ones(n);
  LabelVector l;
  l.values.resize(n);
  l.mask = Eigen::VectorXi::Ones(n);
  for (int i = 0; i < n; ++i) {
    q.data(0, i) = double(question_qoi.term_id);
    q.data(1, i) = question_qoi.t[i];
    q.data(2, i) = question_qoi.x[i];
    l.values[i] = question_qoi.v[i];
  }
  return {std::move(q), std::move(l)};
}

KeyValueFunction subsample_pairs(const KeyValueFunction& fn, int n, Rng& rng,
                                 SubsampleScheme scheme) {
  fn.validate();
  if (n < 1 || n > fn.size())
    throw InvalidInputError("subsample_pairs: n out of range");
  std::vector<int> keep;
  if (scheme == SubsampleScheme::Prefix) {
    keep.resize(n);
    std::iota(keep.begin(), keep.end(), 0);
  } else {
    // Partial Fisher-Yates, then restore original order.
    std::vector<int> idx(fn.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < n; ++i)
      std::swap(idx[i], idx[i + int(rng.below(std::uint64_t(fn.size() - i)))]);
    keep.assign(idx.begin(), idx.begin() + n);
    std::sort(keep.begin(), keep.end());
  }
  KeyValueFunction out;
  out.term_id = fn.term_id;
  out.t.resize(n);
  out.x.resize(n);
  out.v.resize(n);
  for (int i = 0; i < n; ++i) {
    out.t[i] = fn.t[keep[i]];
    out.x[i] = fn.x[keep[i]];
    out.v[i] = fn.v[keep[i]];
  }
  return out;
}

Batch pad_and_batch(std::vector<PromptMatrix> prompts, std::vector<QueryMatrix> queries,
                    std::vector<LabelVector> labels) {
  if (prompts.empty() || prompts.size() != queries.size() ||
      prompts.size() != labels.size())
    throw InvalidInputError("pad_and_batch: empty or mismatched batch");
  int max_p = 0, max_q = 0;
  for (const PromptMatrix& p : prompts) max_p = std::max(max_p, p.cols());
  for (const QueryMatrix& q : queries) max_q = std::max(max_q, q.cols());
  for (PromptMatrix& p : prompts) {
    const int c = p.cols();
    p.data.conservativeResize(Eigen::NoChange, max_p);
    p.data.rightCols(max_p - c).setZero();
    p.col_mask.conservativeResize(max_p);
    p.col_mask.tail(max_p - c).setZero();
  }
  for (std::size_t i = 0; i < queries.size(); ++i) {
    QueryMatrix& q = queries[i];
    LabelVector& l = labels[i];
    if (l.values.size() != q.cols())
      throw InvalidInputError("pad_and_batch: label/query length mismatch");
    const int c = q.cols();
    q.data.conservativeResize(Eigen::NoChange, max_q);
    q.data.rightCols(max_q - c).setZero();
    q.col_mask.conservativeResize(max_q);
    q.col_mask.tail(max_q - c).setZero();
    l.values.conservativeResize(max_q);
    l.values.tail(max_q - c).setZero();
    l.mask.conservativeResize(max_q);
    l.mask.tail(max_q - c).setZero();
  }
  Batch b;
  b.prompts = std::move(prompts);
  b.queries = std::move(queries);
  b.labels = std::move(labels);
  return b;
}

std::string prompt_debug_dump(const PromptMatrix& prompt) {
  static const char* row_names[PromptMatrix::rows()] = {
      "term", "t", "x", "value", "idx1", "idx2", "idx3", "idx4", "idx5", "idxQ"};
  std::string out;
  char buf[32];
  for (int r = 0; r < PromptMatrix::rows(); ++r) {
    std::snprintf(buf, sizeof buf, "%-5s |", row_names[r]);
    out += buf;
    for (int c = 0; c < prompt.cols(); ++c) {
      std::snprintf(buf, sizeof buf, " %8.4f", prompt.data(r, c));
      out += buf;
    }
    out += '\n';
  }
  std::snprintf(buf, sizeof buf, "%-5s |", "mask");
  out += buf;
  for (int c = 0; c < prompt.cols(); ++c) {
    std::snprintf(buf, sizeof buf, " %8d", prompt.col_mask[c]);
    out += buf;
  }
  out += '\n';
  return out;
}

}  // namespace icon
