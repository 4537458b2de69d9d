#include "icon/evaluator.hpp"

#include <fstream>

#include "json.hpp"

namespace icon {

std::pair<double, double> relative_error(const std::vector<CasePrediction>& cases) {
  if (cases.empty()) throw InvalidInputError("relative_error: no cases");
  double err_sum = 0.0, truth_sum = 0.0;
  std::int64_t count = 0;
  for (const CasePrediction& c : cases) {
    if (c.pred.size() != c.truth.size() || c.pred.size() == 0)
      throw InvalidInputError("relative_error: pred/truth size mismatch");
    err_sum += (c.pred - c.truth).cwiseAbs().sum();
    truth_sum += c.truth.cwiseAbs().sum();
    count += c.pred.size();
  }
  const double abs_err = err_sum / double(count);
  const double truth_mean = truth_sum / double(count);
  if (truth_mean == 0.0)
    throw InvalidInputError("relative_error: ground truth identically zero");
  return {abs_err, abs_err / truth_mean};
}

namespace {

nlohmann::json row_to_json(const EvalRow& r) {
  nlohmann::json j{{"protocol", r.protocol}, {"family", r.family},
                   {"j", r.j},               {"abs_err", r.abs_err},
                   {"rel_err", r.rel_err},   {"cases", r.cases},
                   {"full_budget", r.full_budget}, {"runtime_s", r.runtime_s}};
  if (r.protocol == "resolution") j["resolution"] = r.resolution;
  if (r.protocol == "ood") {
    j["cell"] = {{"lo0", r.cell_lo0}, {"hi0", r.cell_hi0},
                 {"lo1", r.cell_lo1}, {"hi1", r.cell_hi1}};
  }
  if (r.protocol == "newode") {
    j["mode"] = r.mode;
    j["b"] = r.b_param;
  }
  return j;
}

}  // namespace

void write_report_csv(const std::string& path, const std::vector<EvalRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInputError("write_report_csv: cannot open " + path);
  out << "protocol,family,j,resolution,cell_lo0,cell_hi0,cell_lo1,cell_hi1,"
         "mode,b,abs_err,rel_err,cases,full_budget,runtime_s\n";
  out.precision(17);
  for (const EvalRow& r : rows) {
    out << r.protocol << ',' << r.family << ',' << r.j << ',' << r.resolution << ','
        << r.cell_lo0 << ',' << r.cell_hi0 << ',' << r.cell_lo1 << ',' << r.cell_hi1
        << ',' << r.mode << ',' << r.b_param << ',' << r.abs_err << ',' << r.rel_err
        << ',' << r.cases << ',' << (r.full_budget ? 1 : 0) << ',' << r.runtime_s
        << '\n';
  }
  if (!out) throw InvalidInputError("write_report_csv: write failed: " + path);
}

void write_report_json(const std::string& path, const std::vector<EvalRow>& rows) {
  nlohmann::json doc = nlohmann::json::array();
  for (const EvalRow& r : rows) doc.push_back(row_to_json(r));
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInputError("write_report_json: cannot open " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw InvalidInputError("write_report_json: write failed: " + path);
}

}  // namespace icon
