#include "icon/families.hpp"

#include <cmath>

#include "icon/grid.hpp"
#include "icon/mfc.hpp"
#include "icon/ode_solvers.hpp"
#include "icon/stochastic.hpp"

namespace icon {

namespace {

constexpr int kOdePoints = 50;    // equidistant samples for ODE u and c
constexpr int kPdePoints = 100;   // oscillator / PDE / MFC spatial samples
constexpr int kMfcNt = 51;

// Round through 32-bit storage precision. Applied to every sampled input
// before it reaches a solver, so a reload-and-resolve reproduces stored
// QoIs bitwise.
double q32(double v) { return double(float(v)); }

Eigen::VectorXd q32(const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = q32(v[i]);
  return out;
}

std::vector<FamilySchema> build_schemas() {
  std::vector<FamilySchema> fams;
  const TermSchema ode_c{"c", kOdePoints, true, false};
  const TermSchema ode_u{"u", kOdePoints, true, false};
  const TermSchema ode_u0{"u0", 1, true, false};
  const TermSchema osc_half{"u", kPdePoints, true, false};
  const TermSchema pde_c{"c", kPdePoints, false, true};
  const TermSchema pde_u{"u", kPdePoints, false, true};
  const TermSchema pde_k{"k", kPdePoints, false, true};
  const TermSchema mfc_rho0{"rho0", kPdePoints, true, true};
  const TermSchema mfc_rho1{"rho1", kPdePoints, true, true};
  const TermSchema mfc_rho_early{"rho_early", 25 * kPdePoints, true, true};
  const TermSchema mfc_rho_late{"rho_late", 26 * kPdePoints, true, true};
  const TermSchema mfc_g{"g", kPdePoints, false, true};

  const auto add = [&](FamilySchema f) { fams.push_back(std::move(f)); };

  add({1, "ode1_forward", {ode_c, ode_u0}, ode_u, {"a1", "a2"}, "", 0, true});
  add({2, "ode1_inverse", {ode_u}, ode_c, {"a1", "a2"}, "", 0, true});
  add({3, "ode2_forward", {ode_c, ode_u0}, ode_u, {"a1", "a2"}, "", 0, true});
  add({4, "ode2_inverse", {ode_u}, ode_c, {"a1", "a2"}, "", 0, true});
  add({5, "ode3_forward", {ode_c, ode_u0}, ode_u, {"a1", "a2", "a3"}, "", 0, true});
  add({6, "ode3_inverse", {ode_u}, ode_c, {"a1", "a2", "a3"}, "", 0, true});
  add({7, "oscillator_forward", {osc_half}, osc_half, {"k"}, "", 0, false});
  add({8, "oscillator_inverse", {osc_half}, osc_half, {"k"}, "", 0, false});
  add({9, "poisson_forward", {pde_c}, pde_u, {"u0", "u1"}, "", 0, false});
  add({10, "poisson_inverse", {pde_u}, pde_c, {"u0", "u1"}, "", 0, false});
  add({11, "linear_rd_forward", {pde_k}, pde_u, {"u0", "u1", "a", "c"}, "", 0, false});
  add({12, "linear_rd_inverse", {pde_u}, pde_k, {"u0", "u1", "a", "c"}, "", 0, false});
  add({13, "nonlinear_rd_forward", {pde_c}, pde_u, {"u0", "u1", "a", "k"}, "", 0, false});
  add({14, "nonlinear_rd_inverse", {pde_u}, pde_c, {"u0", "u1", "a", "k"}, "", 0, false});
  add({15, "mfc_g_1d_1d", {mfc_rho0}, mfc_rho1, {}, "g", kPdePoints, false});
  add({16, "mfc_g_1d_2d", {mfc_rho0}, mfc_rho_late, {}, "g", kPdePoints, false});
  add({17, "mfc_g_2d_2d", {mfc_rho_early}, mfc_rho_late, {}, "g", kPdePoints, false});
  add({18, "mfc_rho0_1d_1d", {mfc_g}, mfc_rho1, {}, "rho0", kPdePoints, false});
  add({19, "mfc_rho0_1d_2d", {mfc_g}, mfc_rho_late, {}, "rho0", kPdePoints, false});
  add({20, "new_ode_forward", {ode_c, ode_u0}, ode_u, {"a1", "a2", "b"}, "", 0, true});
  return fams;
}

const std::vector<FamilySchema>& schemas() {
  static const std::vector<FamilySchema> fams = build_schemas();
  return fams;
}

double draw_scalar(const std::string& name, double lo, double hi, Rng& rng,
                   const ParamOverride* ov) {
  if (ov) {
    if (auto it = ov->fixed.find(name); it != ov->fixed.end()) return q32(it->second);
    if (auto it = ov->ranges.find(name); it != ov->ranges.end())
      return q32(sample_uniform(it->second.first, it->second.second, rng));
  }
  return q32(sample_uniform(lo, hi, rng));
}

GpSpec ode_gp() { return {KernelKind::Rbf, 1.0, 0.5, 0.0}; }
GpSpec poisson_gp() { return {KernelKind::Rbf, 2.0, 0.5, 0.0}; }
GpSpec rbf_unit_gp() { return {KernelKind::Rbf, 1.0, 0.5, 0.0}; }
GpSpec mfc_gp() { return {KernelKind::Periodic, 1.0, 1.0, 0.0}; }

KeyValueFunction time_function(int term_id, const Eigen::VectorXd& ts,
                               const Eigen::VectorXd& vs) {
  KeyValueFunction f;
  f.term_id = term_id;
  f.t = ts;
  f.x = Eigen::VectorXd::Zero(ts.size());
  f.v = vs;
  return f;
}

KeyValueFunction space_function(int term_id, const Eigen::VectorXd& xs,
                                const Eigen::VectorXd& vs) {
  KeyValueFunction f;
  f.term_id = term_id;
  f.t = Eigen::VectorXd::Zero(xs.size());
  f.x = xs;
  f.v = vs;
  return f;
}

// Flatten rho rows [row_lo, row_hi] of the space-time grid, row-major.
KeyValueFunction rho_block(int term_id, const Eigen::MatrixXd& rho, int row_lo, int row_hi,
                           double dt, const Eigen::VectorXd& xs) {
  const int nrows = row_hi - row_lo + 1;
  const int nx = int(xs.size());
  KeyValueFunction f;
  f.term_id = term_id;
  f.t.resize(nrows * nx);
  f.x.resize(nrows * nx);
  f.v.resize(nrows * nx);
  int k = 0;
  for (int j = row_lo; j <= row_hi; ++j)
    for (int i = 0; i < nx; ++i, ++k) {
      f.t[k] = dt * j;
      f.x[k] = xs[i];
      f.v[k] = rho(j, i);
    }
  return f;
}

const Grid1D& ode_grid() {
  static const Grid1D g(kOdePoints, 0, 1);
  return g;
}
const Grid1D& pde_grid() {
  static const Grid1D g(kPdePoints, 0, 1);
  return g;
}
const PeriodicGrid1D& mfc_grid() {
  static const PeriodicGrid1D g(kPdePoints, 0, 1);
  return g;
}

// Oscillator time grids: 100 samples on [0,0.5) and 100 on [0.5,1].
Eigen::VectorXd osc_early_times() {
  Eigen::VectorXd t(kPdePoints);
  for (int i = 0; i < kPdePoints; ++i) t[i] = 0.5 * i / kPdePoints;
  return t;
}
Eigen::VectorXd osc_late_times() {
  Eigen::VectorXd t(kPdePoints);
  for (int i = 0; i < kPdePoints; ++i) t[i] = 0.5 + 0.5 * i / (kPdePoints - 1);
  return t;
}

OdeParams ode_params_from_spec(const OperatorSpec& spec) {
  OdeParams p;
  switch (spec.family) {
    case 1:
    case 2:
      p.family = OdeFamily::Ode1;
      break;
    case 3:
    case 4:
      p.family = OdeFamily::Ode2;
      break;
    case 5:
    case 6:
      p.family = OdeFamily::Ode3;
      break;
    case 20:
      p.family = OdeFamily::NewOde;
      break;
    default:
      throw InvalidInputError("not an ODE family");
  }
  p.a1 = spec.scalars.at("a1");
  p.a2 = spec.scalars.at("a2");
  if (spec.family == 5 || spec.family == 6) p.a3 = spec.scalars.at("a3");
  if (spec.family == 20) p.b = spec.scalars.at("b");
  return p;
}

}  // namespace

const FamilySchema& family_schema(int id) {
  if (id < 1 || id > int(schemas().size()))
    throw InvalidInputError("family_schema: unknown family id " + std::to_string(id));
  return schemas()[id - 1];
}

const std::vector<int>& all_family_ids() {
  static const std::vector<int> ids = [] {
    std::vector<int> v;
    for (const auto& f : schemas()) v.push_back(f.id);
    return v;
  }();
  return ids;
}

OperatorSpec sample_operator(int family, Rng& rng, const ParamOverride* ov) {
  const FamilySchema& schema = family_schema(family);
  OperatorSpec spec;
  spec.family = family;
  const auto draw = [&](const std::string& name, double lo, double hi) {
    spec.scalars[name] = draw_scalar(name, lo, hi, rng, ov);
  };
  switch (family) {
    case 1:
    case 2:
    case 3:
    case 4:
      draw("a1", 0.5, 1.5);
      draw("a2", -1.0, 1.0);
      break;
    case 5:
    case 6:
      draw("a1", -1.0, 1.0);
      draw("a2", 0.5, 1.5);
      draw("a3", -1.0, 1.0);
      break;
    case 7:
    case 8:
      draw("k", 0.0, 2.0);
      break;
    case 9:
    case 10:
      draw("u0", -1.0, 1.0);
      draw("u1", -1.0, 1.0);
      break;
    case 11:
    case 12:
      draw("u0", -1.0, 1.0);
      draw("u1", -1.0, 1.0);
      draw("a", 0.5, 1.5);
      draw("c", -2.0, 2.0);
      break;
    case 13:
    case 14:
      draw("u0", -1.0, 1.0);
      draw("u1", -1.0, 1.0);
      draw("a", 0.5, 1.5);
      draw("k", 0.5, 1.5);
      break;
    case 15:
    case 16:
    case 17: {
      Eigen::VectorXd ghat = sample_gp(mfc_grid().points(), mfc_gp(), rng);
      spec.param_function = q32(zero_mean(ghat, mfc_grid().dx(), true));
      break;
    }
    case 18:
    case 19: {
      Eigen::VectorXd rhat = sample_gp(mfc_grid().points(), mfc_gp(), rng);
      spec.param_function =
          q32(normalize_density(softplus(rhat), mfc_grid().dx(), true));
      break;
    }
    case 20:
      draw("a1", 0.5, 1.5);
      draw("a2", -1.0, 1.0);
      draw("b", -0.3, 0.3);
      break;
    default:
      throw InvalidInputError("sample_operator: unknown family");
  }
  (void)schema;
  return spec;
}

namespace {

CondQoIRecord generate_pair_impl(const OperatorSpec& spec, int operator_index,
                                 int pair_index, Rng& rng) {
  CondQoIRecord rec;
  rec.operator_index = operator_index;
  rec.pair_index = pair_index;
  const int family = spec.family;

  if (family <= 6 || family == 20) {
    const Grid1D& grid = ode_grid();
    const Eigen::VectorXd ts = grid.points();
    const Eigen::VectorXd c = q32(sample_gp(ts, ode_gp(), rng));
    const double u0 = q32(sample_uniform(-1.0, 1.0, rng));
    const Eigen::VectorXd u =
        q32(solve_ode_forward(ode_params_from_spec(spec), u0, c, grid));
    const bool forward = (family % 2 == 1) || family == 20;
    if (forward) {
      rec.condition.push_back(time_function(0, ts, c));
      Eigen::VectorXd t0(1), v0(1);
      t0 << 0.0;
      v0 << u0;
      rec.condition.push_back(time_function(1, t0, v0));
      rec.qoi = time_function(0, ts, u);
    } else {
      rec.condition.push_back(time_function(0, ts, u));
      rec.qoi = time_function(0, ts, c);
    }
    return rec;
  }

  if (family == 7 || family == 8) {
    OscParams p;
    p.amplitude = q32(sample_uniform(0.5, 1.5, rng));
    p.period = q32(sample_uniform(0.1, 0.2, rng));
    p.phase = q32(sample_uniform(0.0, 2.0 * M_PI, rng));
    p.damping = spec.scalars.at("k");
    const Eigen::VectorXd te = osc_early_times();
    const Eigen::VectorXd tl = osc_late_times();
    const Eigen::VectorXd ue = q32(oscillator(p, te));
    const Eigen::VectorXd ul = q32(oscillator(p, tl));
    if (family == 7) {
      rec.condition.push_back(time_function(0, te, ue));
      rec.qoi = time_function(0, tl, ul);
    } else {
      rec.condition.push_back(time_function(0, tl, ul));
      rec.qoi = time_function(0, te, ue);
    }
    return rec;
  }

  if (family >= 9 && family <= 14) {
    const Grid1D& grid = pde_grid();
    const Eigen::VectorXd xs = grid.points();
    if (family == 9 || family == 10) {
      const Eigen::VectorXd c = q32(sample_gp(xs, poisson_gp(), rng));
      const Eigen::VectorXd u =
          q32(solve_poisson(c, grid, spec.scalars.at("u0"), spec.scalars.at("u1")));
      rec.condition.push_back(space_function(0, xs, family == 9 ? c : u));
      rec.qoi = space_function(0, xs, family == 9 ? u : c);
      return rec;
    }
    if (family == 11 || family == 12) {
      BvpParams p;
      p.family = BvpFamily::LinearRd;
      p.u0 = spec.scalars.at("u0");
      p.u1 = spec.scalars.at("u1");
      p.a = spec.scalars.at("a");
      p.c_const = spec.scalars.at("c");
      const Eigen::VectorXd k = q32(softplus(sample_gp(xs, rbf_unit_gp(), rng)));
      const Eigen::VectorXd u = q32(solve_linear_rd(k, grid, p));
      rec.condition.push_back(space_function(0, xs, family == 11 ? k : u));
      rec.qoi = space_function(0, xs, family == 11 ? u : k);
      return rec;
    }
    BvpParams p;
    p.family = BvpFamily::NonlinearRd;
    p.u0 = spec.scalars.at("u0");
    p.u1 = spec.scalars.at("u1");
    p.a = spec.scalars.at("a");
    p.k_const = spec.scalars.at("k");
    const Eigen::VectorXd uhat = q32(sample_gp(xs, rbf_unit_gp(), rng));
    auto [u, c] = nonlinear_rd_construct(uhat, grid, p);
    u = q32(u);
    c = q32(c);
    rec.condition.push_back(space_function(0, xs, family == 13 ? c : u));
    rec.qoi = space_function(0, xs, family == 13 ? u : c);
    return rec;
  }

  if (family >= 15 && family <= 19) {
    const PeriodicGrid1D& xg = mfc_grid();
    const Eigen::VectorXd xs = xg.points();
    MfcProblem prob;
    prob.n_t = kMfcNt;
    prob.n_x = kPdePoints;
    Eigen::VectorXd g, rho0;
    if (family <= 17) {
      g = spec.param_function;
      rho0 = q32(normalize_density(softplus(sample_gp(xs, mfc_gp(), rng)), xg.dx(), true));
    } else {
      rho0 = spec.param_function;
      g = q32(zero_mean(sample_gp(xs, mfc_gp(), rng), xg.dx(), true));
    }
    prob.g = g;
    // rho0 goes in at storage precision: reloading the file and re-running
    // the solver then reproduces stored QoIs bitwise.
    prob.rho0 = rho0;
    const MfcSolution sol = solve_mfc(prob);
    const double dt = prob.dt();

    const auto q32_fn = [&](KeyValueFunction f) {
      f.v = q32(f.v);
      return f;
    };
    switch (family) {
      case 15:
        rec.condition.push_back(q32_fn(rho_block(0, sol.rho, 0, 0, dt, xs)));
        rec.qoi = q32_fn(rho_block(0, sol.rho, kMfcNt - 1, kMfcNt - 1, dt, xs));
        break;
      case 16:
        rec.condition.push_back(q32_fn(rho_block(0, sol.rho, 0, 0, dt, xs)));
        rec.qoi = q32_fn(rho_block(0, sol.rho, 25, kMfcNt - 1, dt, xs));
        break;
      case 17:
        rec.condition.push_back(q32_fn(rho_block(0, sol.rho, 0, 24, dt, xs)));
        rec.qoi = q32_fn(rho_block(0, sol.rho, 25, kMfcNt - 1, dt, xs));
        break;
      case 18:
        rec.condition.push_back(space_function(0, xs, g));
        rec.qoi = q32_fn(rho_block(0, sol.rho, kMfcNt - 1, kMfcNt - 1, dt, xs));
        break;
      case 19:
        rec.condition.push_back(space_function(0, xs, g));
        rec.qoi = q32_fn(rho_block(0, sol.rho, 25, kMfcNt - 1, dt, xs));
        break;
    }
    return rec;
  }

  throw InvalidInputError("generate_pair: unknown family " + std::to_string(family));
}

}  // namespace

CondQoIRecord generate_pair(const OperatorSpec& spec, int operator_index, int pair_index,
                            Rng& rng) {
  CondQoIRecord rec = generate_pair_impl(spec, operator_index, pair_index, rng);
  // Keys are rounded to storage precision as well, so a serialized record
  // deserializes to exactly the in-memory one.
  const auto quantize_keys = [](KeyValueFunction& f) {
    f.t = q32(f.t);
    f.x = q32(f.x);
  };
  for (KeyValueFunction& f : rec.condition) quantize_keys(f);
  quantize_keys(rec.qoi);
  return rec;
}

}  // namespace icon
