#pragma once

#include <Eigen/Core>
#include <vector>

#include "icon/errors.hpp"

namespace icon {

// A sampled function as key-value pairs: keys are (t, x) coordinates (an
// unused coordinate is exactly 0), values are scalars. The universal
// condition/QoI representation.
struct KeyValueFunction {
  int term_id = 0;
  Eigen::VectorXd t, x, v;

  int size() const { return int(v.size()); }

  void validate() const {
    if (v.size() < 1) throw InvalidInputError("KeyValueFunction: empty");
    if (t.size() != v.size() || x.size() != v.size())
      throw InvalidInputError("KeyValueFunction: key/value length mismatch");
    if (!t.allFinite() || !x.allFinite() || !v.allFinite())
      throw InvalidInputError("KeyValueFunction: non-finite entries");
  }
};

// One condition/QoI pair under one operator; the dataset atom.
struct CondQoIRecord {
  int operator_index = 0;
  int pair_index = 0;
  std::vector<KeyValueFunction> condition;
  KeyValueFunction qoi;
};

}  // namespace icon
