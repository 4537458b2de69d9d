#include <Eigen/Core>

#include "doctest.h"
#include "icon/families.hpp"
#include "icon/model.hpp"
#include "icon/prompt.hpp"

using namespace icon;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_enc_layers = 2;
  cfg.n_dec_layers = 2;
  cfg.d_ff = 32;
  return cfg;
}

struct Example {
  PromptMatrix prompt;
  QueryMatrix queries;
  LabelVector labels;
};

Example ode_example(std::uint64_t seed, int n_demos) {
  Rng rng(seed);
  OperatorSpec spec = sample_operator(1, rng);
  std::vector<CondQoIRecord> recs;
  for (int j = 0; j <= n_demos; ++j) recs.push_back(generate_pair(spec, 0, j, rng));
  std::vector<const CondQoIRecord*> demos;
  for (int j = 0; j < n_demos; ++j) demos.push_back(&recs[j]);
  Example ex;
  ex.prompt = build_prompt(demos, recs.back().condition);
  std::tie(ex.queries, ex.labels) = build_queries_and_labels(recs.back().qoi);
  return ex;
}

Batch one_example_batch(const Example& ex) {
  return pad_and_batch({ex.prompt}, {ex.queries}, {ex.labels});
}

}  // namespace

TEST_CASE("parameter count matches the closed-form formula") {
  for (ModelConfig cfg : {ModelConfig{}, small_config()}) {
    Rng rng(1);
    ModelParams<double> p = init_params<double>(cfg, rng);
    CHECK(p.count() == cfg.param_count());
  }
  // Default config, hand-computed: embeddings 64*10+64 + 64*3+64, head 64+1,
  // final norms 2*128, six blocks of 4*(64*64+64) + (256*64+256+64*256+64) + 2*128.
  ModelConfig cfg;
  const long long expect = (64 * 10 + 64) + (64 * 3 + 64) + (64 + 1) + 2 * 128 +
                           6 * (4 * (64 * 64 + 64) + (256 * 64 + 256 + 64 * 256 + 64) +
                                2 * 128);
  CHECK(cfg.param_count() == expect);
}

TEST_CASE("initialization is deterministic per seed and outputs are finite") {
  ModelConfig cfg = small_config();
  Rng r1(7), r2(7), r3(8);
  ModelParams<double> a = init_params<double>(cfg, r1);
  ModelParams<double> b = init_params<double>(cfg, r2);
  ModelParams<double> c = init_params<double>(cfg, r3);
  bool equal = true, differs = false;
  a.visit([&](const std::string& n, Eigen::Index r, Eigen::Index cc, double* pa) {
    (void)n;
    (void)r;
    (void)cc;
    (void)pa;
  });
  std::vector<double> av, bv, cv;
  a.visit([&](const std::string&, Eigen::Index r, Eigen::Index cc, double* p) {
    av.insert(av.end(), p, p + r * cc);
  });
  b.visit([&](const std::string&, Eigen::Index r, Eigen::Index cc, double* p) {
    bv.insert(bv.end(), p, p + r * cc);
  });
  c.visit([&](const std::string&, Eigen::Index r, Eigen::Index cc, double* p) {
    cv.insert(cv.end(), p, p + r * cc);
  });
  equal = (av == bv);
  differs = (av != cv);
  CHECK(equal);
  CHECK(differs);

  Example ex = ode_example(3, 2);
  Mat pred = model_forward<double>(cfg, a, ex.prompt.data, ex.prompt.col_mask,
                                   ex.queries.data);
  CHECK(pred.rows() == 1);
  CHECK(pred.cols() == ex.queries.cols());
  CHECK(pred.allFinite());
}

TEST_CASE("prompt column permutation leaves predictions unchanged") {
  ModelConfig cfg = small_config();
  Rng rng(11);
  ModelParams<double> params = init_params<double>(cfg, rng);
  Example ex = ode_example(5, 3);
  Mat base = model_forward<double>(cfg, params, ex.prompt.data, ex.prompt.col_mask,
                                   ex.queries.data);

  Rng perm_rng(13);
  const int n = ex.prompt.cols();
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[int(perm_rng.below(std::uint64_t(i + 1)))]);
  Mat shuffled(ex.prompt.data.rows(), n);
  Eigen::VectorXi mask(n);
  for (int i = 0; i < n; ++i) {
    shuffled.col(i) = ex.prompt.data.col(perm[i]);
    mask[i] = ex.prompt.col_mask[perm[i]];
  }
  Mat permuted = model_forward<double>(cfg, params, shuffled, mask, ex.queries.data);
  CHECK((base - permuted).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("appending masked zero columns leaves predictions unchanged") {
  ModelConfig cfg = small_config();
  Rng rng(17);
  ModelParams<double> params = init_params<double>(cfg, rng);
  Example ex = ode_example(5, 2);
  Mat base = model_forward<double>(cfg, params, ex.prompt.data, ex.prompt.col_mask,
                                   ex.queries.data);

  const int n = ex.prompt.cols();
  Mat padded = Mat::Zero(ex.prompt.data.rows(), n + 10);
  padded.leftCols(n) = ex.prompt.data;
  Eigen::VectorXi mask = Eigen::VectorXi::Zero(n + 10);
  mask.head(n) = ex.prompt.col_mask;
  Mat with_pad = model_forward<double>(cfg, params, padded, mask, ex.queries.data);
  CHECK((base - with_pad).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("queries are independent: joint equals separate, duplicates identical") {
  ModelConfig cfg = small_config();
  Rng rng(19);
  ModelParams<double> params = init_params<double>(cfg, rng);
  Example ex = ode_example(5, 2);
  Mat joint = model_forward<double>(cfg, params, ex.prompt.data, ex.prompt.col_mask,
                                    ex.queries.data);
  for (int q = 0; q < ex.queries.cols(); ++q) {
    Mat single = ex.queries.data.col(q);
    Mat alone =
        model_forward<double>(cfg, params, ex.prompt.data, ex.prompt.col_mask, single);
    CHECK(std::abs(alone(0, 0) - joint(0, q)) <= 1e-10);
  }
  Mat dup(3, 2);
  dup.col(0) = ex.queries.data.col(0);
  dup.col(1) = ex.queries.data.col(0);
  Mat out = model_forward<double>(cfg, params, ex.prompt.data, ex.prompt.col_mask, dup);
  // Matrix-product panel blocking can round the two columns differently in
  // the last bit, so equality holds only to rounding error.
  CHECK(std::abs(out(0, 0) - out(0, 1)) <= 1e-12);
}

TEST_CASE("degenerate and malformed inputs raise errors") {
  ModelConfig cfg = small_config();
  Rng rng(23);
  ModelParams<double> params = init_params<double>(cfg, rng);
  Example ex = ode_example(5, 1);

  Eigen::VectorXi none = Eigen::VectorXi::Zero(ex.prompt.cols());
  CHECK_THROWS_AS(
      model_forward<double>(cfg, params, ex.prompt.data, none, ex.queries.data),
      InvalidInputError);
  Mat bad_rows = Mat::Zero(7, 5);
  CHECK_THROWS_AS(model_forward<double>(cfg, params, bad_rows,
                                        Eigen::VectorXi::Ones(5), ex.queries.data),
                  InvalidInputError);
  Mat bad_queries = Mat::Zero(4, 5);
  CHECK_THROWS_AS(model_forward<double>(cfg, params, ex.prompt.data,
                                        ex.prompt.col_mask, bad_queries),
                  InvalidInputError);

  // Single-column prompt is valid (attention over one key).
  Mat one = ex.prompt.data.col(0);
  Eigen::VectorXi m1 = Eigen::VectorXi::Ones(1);
  Mat out = model_forward<double>(cfg, params, one, m1, ex.queries.data);
  CHECK(out.allFinite());
}

TEST_CASE("analytic gradients match central finite differences") {
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.n_enc_layers = 1;
  cfg.n_dec_layers = 1;
  cfg.d_ff = 16;
  Rng rng(29);
  ModelParams<double> params = init_params<double>(cfg, rng);

  // Tiny synthetic batch: two elements with different lengths (mask active).
  Rng drng(31);
  auto rand_example = [&](int np, int nq) {
    PromptMatrix p;
    p.data.setZero(PromptMatrix::rows(), np);
    for (int c = 0; c < np; ++c) {
      for (int r = 0; r < 4; ++r) p.data(r, c) = drng.uniform(-1, 1);
      p.data(4 + int(drng.below(6)), c) = drng.uniform01() < 0.5 ? 1.0 : -1.0;
    }
    p.col_mask = Eigen::VectorXi::Ones(np);
    QueryMatrix q;
    q.data.setZero(3, nq);
    for (int c = 0; c < nq; ++c)
      for (int r = 0; r < 3; ++r) q.data(r, c) = drng.uniform(-1, 1);
    q.col_mask = Eigen::VectorXi::Ones(nq);
    LabelVector l;
    l.values.setZero(nq);
    for (int c = 0; c < nq; ++c) l.values[c] = drng.uniform(-1, 1);
    l.mask = Eigen::VectorXi::Ones(nq);
    return std::make_tuple(p, q, l);
  };
  auto [p1, q1, l1] = rand_example(6, 4);
  auto [p2, q2, l2] = rand_example(4, 3);
  Batch batch = pad_and_batch({p1, p2}, {q1, q2}, {l1, l2});

  ModelParams<double> grads;
  grads.setup(cfg);
  grads.set_zero();
  const double loss0 = loss_and_gradients(cfg, params, batch, grads);
  CHECK(std::isfinite(loss0));

  // Collect flat views of params and grads.
  std::vector<double*> pptr, gptr;
  std::vector<long long> sizes;
  params.visit([&](const std::string&, Eigen::Index r, Eigen::Index c, double* p) {
    pptr.push_back(p);
    sizes.push_back(r * c);
  });
  grads.visit([&](const std::string&, Eigen::Index r, Eigen::Index c, double* p) {
    gptr.push_back(p);
    (void)r;
    (void)c;
  });
  long long total = 0;
  for (long long s : sizes) total += s;

  const auto loss_at = [&]() {
    ModelParams<double> scratch;
    scratch.setup(cfg);
    scratch.set_zero();
    return loss_and_gradients(cfg, params, batch, scratch);
  };

  Rng pick(37);
  const double h = 1e-5;
  double max_rel = 0.0;
  for (int s = 0; s < 20; ++s) {
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
    const double an = gptr[blk][flat];
    const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("padded labels contribute nothing to loss or gradients") {
  ModelConfig cfg = small_config();
  Rng rng(41);
  ModelParams<double> params = init_params<double>(cfg, rng);
  Example full = ode_example(5, 1);
  Example trimmed = full;
  // Keep only the first 30 queries of the second element; padding restores
  // the column count, so lengths match but masks differ.
  trimmed.queries.data = full.queries.data.leftCols(30).eval();
  trimmed.queries.col_mask = Eigen::VectorXi::Ones(30);
  trimmed.labels.values = full.labels.values.head(30).eval();
  trimmed.labels.mask = Eigen::VectorXi::Ones(30);

  Batch b = pad_and_batch({full.prompt, trimmed.prompt}, {full.queries, trimmed.queries},
                          {full.labels, trimmed.labels});
  ModelParams<double> g1;
  g1.setup(cfg);
  g1.set_zero();
  const double loss_a = loss_and_gradients(cfg, params, b, g1);

  // Same batch with garbage in the padded label slots: must change nothing.
  Batch poisoned = b;
  poisoned.labels[1].values.tail(20).setConstant(1e6);
  ModelParams<double> g2;
  g2.setup(cfg);
  g2.set_zero();
  const double loss_b = loss_and_gradients(cfg, params, poisoned, g2);
  CHECK(loss_a == loss_b);
  std::vector<double> v1, v2;
  g1.visit([&](const std::string&, Eigen::Index r, Eigen::Index c, double* p) {
    v1.insert(v1.end(), p, p + r * c);
  });
  g2.visit([&](const std::string&, Eigen::Index r, Eigen::Index c, double* p) {
    v2.insert(v2.end(), p, p + r * c);
  });
  CHECK(v1 == v2);
}

TEST_CASE("32-bit instantiation runs and stays finite") {
  ModelConfig cfg = small_config();
  Rng rng(43);
  ModelParams<float> params = init_params<float>(cfg, rng);
  Example ex = ode_example(5, 2);
  Batch b = one_example_batch(ex);
  std::vector<Eigen::VectorXf> preds = forward_batch<float>(cfg, params, b);
  REQUIRE(preds.size() == 1);
  CHECK(preds[0].allFinite());
  ModelParams<float> grads;
  grads.setup(cfg);
  grads.set_zero();
  const float loss = loss_and_gradients<float>(cfg, params, b, grads);
  CHECK(std::isfinite(loss));
  CHECK(grads.all_finite());
}
