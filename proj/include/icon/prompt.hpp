#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "icon/kv.hpp"
#include "icon/rng.hpp"

namespace icon {

// Demo capacity J_m: up to 5 demos plus the question condition.
constexpr int kDemoCapacity = 5;

// Prompt encoding, one column per key-value pair:
//   row 0      term indicator
//   row 1      time coordinate
//   row 2      space coordinate
//   row 3      value
//   rows 4..9  index vector: e_j for demo-j condition, -e_j for demo-j QoI,
//              e_6 for the question condition
struct PromptMatrix {
  Eigen::MatrixXd data;      // (4 + kDemoCapacity + 1) x columns
  Eigen::VectorXi col_mask;  // 1 = real column, 0 = padding

  int cols() const { return int(data.cols()); }
  static constexpr int rows() { return 4 + kDemoCapacity + 1; }
};

// Query encoding: the keys where the question QoI is requested.
// Rows are [term, time, space], matching prompt rows 0..2.
struct QueryMatrix {
  Eigen::MatrixXd data;  // 3 x columns
  Eigen::VectorXi col_mask;

  int cols() const { return int(data.cols()); }
};

// Ground-truth values aligned with query columns.
struct LabelVector {
  Eigen::VectorXd values;
  Eigen::VectorXi mask;
};

// Encode demos followed by the question condition. Demo j contributes its
// condition columns then its QoI columns; the question condition comes last.
PromptMatrix build_prompt(const std::vector<const CondQoIRecord*>& demos,
                          const std::vector<KeyValueFunction>& question_cond,
                          int j_max = kDemoCapacity);

std::pair<QueryMatrix, LabelVector> build_queries_and_labels(
    const KeyValueFunction& question_qoi);

enum class SubsampleScheme { Prefix, UniformRandom };

// Keep n of the key-value pairs: the first n (Prefix) or a uniform draw
// without replacement, original order preserved (UniformRandom).
KeyValueFunction subsample_pairs(const KeyValueFunction& fn, int n, Rng& rng,
                                 SubsampleScheme scheme);

// A batch padded to common column counts, masks marking real columns.
struct Batch {
  std::vector<PromptMatrix> prompts;
  std::vector<QueryMatrix> queries;
  std::vector<LabelVector> labels;

  int size() const { return int(prompts.size()); }
  int prompt_cols() const { return prompts.empty() ? 0 : prompts[0].cols(); }
  int query_cols() const { return queries.empty() ? 0 : queries[0].cols(); }
};

Batch pad_and_batch(std::vector<PromptMatrix> prompts, std::vector<QueryMatrix> queries,
                    std::vector<LabelVector> labels);

// Aligned text table of a prompt, for the CLI inspect command.
std::string prompt_debug_dump(const PromptMatrix& prompt);

}  // namespace icon
