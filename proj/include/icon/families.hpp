#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icon/kv.hpp"
#include "icon/rng.hpp"

namespace icon {

// One function term in a condition (or the QoI): name, stored sample count,
// and which key coordinates it uses.
struct TermSchema {
  std::string name;
  int count = 0;
  bool has_time = false;
  bool has_space = false;
};

// Static description of one problem family: ids 1..19 follow the problem
// table, id 20 is the held-out ODE with the extra linear term.
struct FamilySchema {
  int id = 0;
  std::string name;
  std::vector<TermSchema> condition_terms;
  TermSchema qoi;
  std::vector<std::string> scalar_param_names;
  std::string param_function_name;  // "" when the operator has no function parameter
  int param_function_size = 0;
  bool prefix_subsample = false;  // ODE rule: first n-1 / first n pairs
};

const FamilySchema& family_schema(int id);
const std::vector<int>& all_family_ids();  // 1..20

// Problem family tag + sampled parameters: the hidden operator identity.
struct OperatorSpec {
  int family = 0;
  std::map<std::string, double> scalars;
  Eigen::VectorXd param_function;  // g or rho0 for the MFC families
};

// Overrides for out-of-distribution sweeps: fixed values or replacement
// sampling intervals for named scalar parameters.
struct ParamOverride {
  std::map<std::string, double> fixed;
  std::map<std::string, std::pair<double, double>> ranges;
};

// Draw one operator from the per-family parameter distributions. Scalars
// and parameter functions are rounded to 32-bit storage precision before
// use, so regeneration from stored data is bit-exact.
OperatorSpec sample_operator(int family, Rng& rng, const ParamOverride* override_ = nullptr);

// Generate one condition/QoI pair for the operator: sample the condition
// realization, run the matching solver, slice per the family schema.
CondQoIRecord generate_pair(const OperatorSpec& spec, int operator_index, int pair_index,
                            Rng& rng);

}  // namespace icon
