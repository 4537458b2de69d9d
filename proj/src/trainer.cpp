#include "icon/trainer.hpp"

namespace icon {

GradCheckReport grad_check(const ModelConfig& cfg, int n_sampled, double tolerance,
                           std::uint64_t seed, bool corrupt) {
  cfg.validate();
  Rng init_rng(seed);
  ModelParams<double> params = init_params<double>(cfg, init_rng);

  // Small synthetic prompt/query batch with random index rows.
  Rng drng(seed + 1);
  const auto rand_example = [&](int np, int nq, PromptMatrix& p, QueryMatrix& q,
                                LabelVector& l) {
    p.data.setZero(PromptMatrix::rows(), np);
    for (int c = 0; c < np; ++c) {
      for (int r = 0; r < 4; ++r) p.data(r, c) = drng.uniform(-1, 1);
      p.data(4 + int(drng.below(6)), c) = drng.uniform01() < 0.5 ? 1.0 : -1.0;
    }
    p.col_mask = Eigen::VectorXi::Ones(np);
    q.data.setZero(3, nq);
    for (int c = 0; c < nq; ++c)
      for (int r = 0; r < 3; ++r) q.data(r, c) = drng.uniform(-1, 1);
    q.col_mask = Eigen::VectorXi::Ones(nq);
    l.values.setZero(nq);
    for (int c = 0; c < nq; ++c) l.values[c] = drng.uniform(-1, 1);
    l.mask = Eigen::VectorXi::Ones(nq);
  };
  PromptMatrix p1, p2;
  QueryMatrix q1, q2;
  LabelVector l1, l2;
  rand_example(6, 4, p1, q1, l1);
  rand_example(5, 3, p2, q2, l2);
  const Batch batch = pad_and_batch({p1, p2}, {q1, q2}, {l1, l2});

  ModelParams<double> grads;
  grads.setup(cfg);
  grads.set_zero();
  loss_and_gradients(cfg, params, batch, grads);

  std::vector<double*> pptr, gptr;
  std::vector<long long> sizes;
  params.visit([&](const std::string&, Eigen::Index r, Eigen::Index c, double* p) {
    pptr.push_back(p);
    sizes.push_back(r * c);
  });
  grads.visit([&](const std::string&, Eigen::Index r, Eigen::Index c, double* g) {
    gptr.push_back(g);
    (void)r;
    (void)c;
  });
  long long total = 0;
  for (long long s : sizes) total += s;

  const auto loss_at = [&]() {
    ModelParams<double> scratch;
    scratch.setup(cfg);
    scratch.set_zero();
    return double(loss_and_gradients(cfg, params, batch, scratch));
  };

  Rng pick(seed + 2);
  const double h = 1e-5;
  GradCheckReport report;
  for (int s = 0; s < n_sampled; ++s) {
    long long flat = (long long)pick.below(std::uint64_t(total));
    std::size_t blk = 0;
    while (flat >= sizes[blk]) {
      flat -= sizes[blk];
      ++blk;
    }
    double* slot = pptr[blk] + flat;
    const double saved = *slot;
    *slot = saved + h;
    const double lp = loss_at();
    *slot = saved - h;
    const double lm = loss_at();
    *slot = saved;
    const double fd = (lp - lm) / (2 * h);
    double an = gptr[blk][flat];
    if (corrupt && s == 0) an += 1.0;
    const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  report.pass = report.max_rel_error < tolerance;
  return report;
}

}  // namespace icon
