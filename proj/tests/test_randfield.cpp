#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "qcdiff/randfield.hpp"

using namespace qcdiff;

namespace {

Window unit_window() {
  WBox b;
  b.lo = {Scalar::exact(Rat(0))};
  b.hi = {Scalar::exact(Rat(1))};
  return Window::from_boxes(1, {b});
}

Window exact_interval(Rat lo, Rat hi) {
  WBox b;
  b.lo = {Scalar::exact(lo)};
  b.hi = {Scalar::exact(hi)};
  return Window::from_boxes(1, {b});
}

std::shared_ptr<const PointSet> fib_support(double radius, const Window& w) {
  Scheme fib = Scheme::fibonacci();
  return PointSet::build(enumerate_points(fib, w, Region::centered(1, radius)));
}

// mean of weights across seeds at one site, with plain MC error
struct SiteStat {
  double mean, se;
};
SiteStat site_mean(const FieldSampler& s, const Scheme& sch, const Window& w,
                   const PointSet& sup, std::size_t site, std::size_t seeds) {
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t k = 0; k < seeds; ++k) {
    auto wts = s.sample_weights(sch, w, sup, 1000 + k);
    double v = wts[site].real();
    sum += v;
    sumsq += v * v;
  }
  double m = sum / seeds;
  double var = std::max(0.0, sumsq / seeds - m * m);
  return {m, std::sqrt(var / seeds)};
}

} // namespace

TEST_CASE("dependency sets: validation and closure") {
  CHECK_THROWS(DependencySet::from_elems({{1, 1}, {-1, -1}}));      // missing 0
  CHECK_THROWS(DependencySet::from_elems({{0, 0}, {1, 1}}));        // not symmetric
  auto d = DependencySet::from_elems({{0, 0}, {1, 1}, {-1, -1}});
  CHECK(d.size() == 3);
  CHECK(d.contains({1, 1}));
  CHECK(!d.contains({2, 2}));
  CHECK(d.max_abs_coord() == 1);

  auto dc = DependencySet::difference_closure({{0, 0}, {1, 1}});
  CHECK(dc.size() == 3);
  CHECK(dc.contains({-1, -1}));
  auto single = DependencySet::difference_closure({{2, 5}});
  CHECK(single.size() == 1);
  CHECK(single.contains({0, 0}));
}

TEST_CASE("separation predicate on site packs") {
  auto d = DependencySet::difference_closure({{0, 0}, {1, 1}});
  CHECK(separation_check({{0, 0}}, {{2, 2}}, d));
  CHECK(!separation_check({{0, 0}}, {{1, 1}}, d));
  CHECK(!separation_check({{5, 3}, {0, 0}}, {{4, 2}}, d));
  CHECK(separation_check({{5, 3}}, {{1, 0}, {0, 2}}, d));
}

TEST_CASE("point set index finds coordinates") {
  auto sup = fib_support(10.0, unit_window());
  REQUIRE(sup->size() > 3);
  for (std::size_t i = 0; i < sup->size(); ++i) CHECK(sup->find((*sup)[i].coords) == i);
  CHECK(sup->find({999, 999}) == PointSet::npos);
}

TEST_CASE("site-keyed draws: determinism and support-order independence") {
  Window w = unit_window();
  Scheme fib = Scheme::fibonacci();
  auto sup = fib_support(30.0, w);

  auto rev_pts = sup->pts;
  std::reverse(rev_pts.begin(), rev_pts.end());
  auto sup_rev = PointSet::build(std::move(rev_pts));

  std::vector<std::unique_ptr<FieldSampler>> samplers;
  samplers.push_back(make_bernoulli(0.4));
  samplers.push_back(make_gaussian(1.0, 2.0));
  samplers.push_back(make_moving_average({{0, 0}, {1, 1}}, {1.0, -0.5}, 0.2));
  samplers.push_back(make_ou_path(1.0, 1.0, 0.0));

  for (const auto& s : samplers) {
    CAPTURE(s->kind());
    auto w1 = s->sample_weights(fib, w, *sup, 42);
    auto w2 = s->sample_weights(fib, w, *sup, 42);
    CHECK(w1 == w2);
    auto w3 = s->sample_weights(fib, w, *sup, 43);
    CHECK(w1 != w3);
    // same seed on the reversed support: weights follow the site, not the slot
    auto wr = s->sample_weights(fib, w, *sup_rev, 42);
    for (std::size_t i = 0; i < sup->size(); ++i) {
      std::size_t j = sup_rev->find((*sup)[i].coords);
      REQUIRE(j != PointSet::npos);
      CHECK(w1[i] == wr[j]);
    }
  }
}

TEST_CASE("sample wrapper records provenance and shares the support") {
  Window w = unit_window();
  Scheme fib = Scheme::fibonacci();
  auto sup = fib_support(10.0, w);
  auto comb = make_bernoulli(0.5)->sample(fib, w, sup, 7);
  CHECK(comb.support.get() == sup.get());
  CHECK(comb.weights.size() == sup->size());
  CHECK(comb.provenance == "bernoulli seed=7");
}

TEST_CASE("independent laws: mean and variance envelopes") {
  Window w = unit_window();
  Scheme fib = Scheme::fibonacci();

  auto env = make_bernoulli(0.5)->envelope(fib, w);
  REQUIRE(env);
  CHECK(std::abs(env->mean.eval(0.5) - cdouble(0.5)) < 1e-15);
  const PiecewiseFn* c0 = env->cov_for({0, 0});
  REQUIRE(c0);
  CHECK(std::abs(c0->eval(0.5) - cdouble(0.25)) < 1e-15);
  CHECK(env->dset.size() == 1);
  CHECK(env->dset.contains({0, 0}));
  CHECK(env->mean.eval(1.5) == cdouble(0.0)); // outside the window

  auto genv = make_gaussian(2.0, 0.5)->envelope(fib, w);
  REQUIRE(genv);
  CHECK(std::abs(genv->mean.eval(0.1) - cdouble(2.0)) < 1e-15);
  CHECK(std::abs(genv->cov_for({0, 0})->eval(0.9) - cdouble(0.25)) < 1e-15);

  auto denv = make_deterministic(0.8)->envelope(fib, w);
  REQUIRE(denv);
  CHECK(std::abs(denv->cov_for({0, 0})->eval(0.5)) == 0.0);

  CHECK(envelope_hermitian_defect(*env, fib) < 1e-12);
  CHECK_THROWS(make_bernoulli(1.5));
  CHECK_THROWS(make_gaussian(0.0, -1.0));
}

TEST_CASE("moving average: lag envelope lives on the window overlap") {
  Window w = unit_window();
  Scheme fib = Scheme::fibonacci();
  auto ma = make_moving_average({{0, 0}, {1, 1}}, {1.0, 1.0}, 0.0);

  auto ds = ma->dependency_set(fib);
  REQUIRE(ds);
  CHECK(ds->size() == 3);
  CHECK(ds->contains({-1, -1}));

  auto env = ma->envelope(fib, w);
  REQUIRE(env);
  const PiecewiseFn* c0 = env->cov_for({0, 0});
  REQUIRE(c0);
  CHECK(std::abs(c0->eval(0.5) - cdouble(2.0)) < 1e-15); // 1^2 + 1^2
  // star(1,1) = 2 - tau ~ 0.382: the lag envelope is 1 on [2-tau, 1), 0 before
  const PiecewiseFn* c1 = env->cov_for({1, 1});
  REQUIRE(c1);
  CHECK(std::abs(c1->eval(0.5) - cdouble(1.0)) < 1e-15);
  CHECK(std::abs(c1->eval(0.2)) == 0.0);
  const PiecewiseFn* cm1 = env->cov_for({-1, -1});
  REQUIRE(cm1);
  CHECK(std::abs(cm1->eval(0.2) - cdouble(1.0)) < 1e-15);
  CHECK(envelope_hermitian_defect(*env, fib) < 1e-12);

  CHECK_THROWS(make_moving_average({{0, 0}, {0, 0}}, {1.0, 1.0}, 0.0));
  CHECK_THROWS(make_moving_average({{0, 0}}, {1.0, 2.0}, 0.0));
}

TEST_CASE("moving average: stencil order does not change the field") {
  Window w = unit_window();
  Scheme fib = Scheme::fibonacci();
  auto sup = fib_support(25.0, w);
  auto a = make_moving_average({{0, 0}, {1, 1}, {-1, 0}}, {0.5, 1.0, -2.0}, 0.3);
  auto b = make_moving_average({{-1, 0}, {0, 0}, {1, 1}}, {-2.0, 0.5, 1.0}, 0.3);
  auto wa = a->sample_weights(fib, w, *sup, 11);
  auto wb = b->sample_weights(fib, w, *sup, 11);
  for (std::size_t i = 0; i < wa.size(); ++i) CHECK(std::abs(wa[i] - wb[i]) < 1e-12);
}

TEST_CASE("block field: windows, decomposition, and cross terms") {
  Scheme fib = Scheme::fibonacci();
  // base window thin enough that W and W + star(1,1) are disjoint
  Window w = exact_interval(Rat(0), Rat(3, 10));
  std::vector<Coords> trans = {{0, 0}, {1, 1}};
  auto blk = make_block(trans, {1.0, 2.0}, {{1.0, 0.5}, {0.5, 1.0}});

  auto ds = blk->dependency_set(fib);
  REQUIRE(ds);
  CHECK(ds->size() == 3);

  Window eff = blk->effective_window(fib, w);
  CHECK(eff.measure().to_double() == doctest::Approx(0.6).epsilon(1e-12));

  auto env = blk->envelope(fib, w);
  REQUIRE(env);
  // mean is 1 on W, 2 on the translate
  CHECK(std::abs(env->mean.eval(0.1) - cdouble(1.0)) < 1e-15);
  CHECK(std::abs(env->mean.eval(0.45) - cdouble(2.0)) < 1e-15);
  // lag (1,1) carries S_21 = 0.5 on the translate only
  const PiecewiseFn* c1 = env->cov_for({1, 1});
  REQUIRE(c1);
  CHECK(std::abs(c1->eval(0.45) - cdouble(0.5)) < 1e-15);
  CHECK(std::abs(c1->eval(0.1)) == 0.0);
  CHECK(envelope_hermitian_defect(*env, fib) < 1e-12);

  // overlapping translates are rejected up front
  auto bad = make_block(trans, {0.0, 0.0}, {{1.0, 0.0}, {0.0, 1.0}});
  CHECK_THROWS_AS((void)bad->envelope(fib, unit_window()), std::invalid_argument);

  CHECK_THROWS(make_block(trans, {0.0}, {{1.0, 0.0}, {0.0, 1.0}}));
  CHECK_THROWS(make_block(trans, {0.0, 0.0}, {{1.0, 0.2}, {0.3, 1.0}}));
  CHECK_THROWS(make_block(trans, {0.0, 0.0}, {{1.0, 2.0}, {2.0, 1.0}})); // not psd

  // sites outside every translate are a hard error
  auto stray = fib_support(10.0, unit_window());
  CHECK_THROWS_AS((void)blk->sample_weights(fib, w, *stray, 1), std::domain_error);
}

TEST_CASE("block field: sampled moments match the declared covariance") {
  Scheme fib = Scheme::fibonacci();
  Window w = exact_interval(Rat(0), Rat(3, 10));
  auto blk = make_block({{0, 0}, {1, 1}}, {1.0, 2.0}, {{1.0, 0.5}, {0.5, 1.0}});
  Window eff = blk->effective_window(fib, w);
  auto sup = PointSet::build(enumerate_points(fib, eff, Region::centered(1, 40.0)));
  REQUIRE(sup->size() > 10);

  auto stats = mc_moments(*blk, fib, w, *sup, {{0, 0}, {1, 1}}, 400, 500);
  auto env = blk->envelope(fib, w);
  for (std::size_t i = 0; i < sup->size(); ++i) {
    double want = env->mean.eval((*sup)[i].internal_d[0]).real();
    CHECK(std::abs(stats.mean[i].real() - want) < 6.0 * stats.mean_se[i] + 1e-9);
  }
  for (const auto& row : stats.cov_rows) {
    const PiecewiseFn* cg = env->cov_for(row.g);
    REQUIRE(cg);
    for (std::size_t m = 0; m < row.sites.size(); ++m) {
      double y = (*sup)[row.sites[m]].internal_d[0];
      double want = cg->eval(y).real();
      CHECK(std::abs(row.cov[m].real() - want) < 6.0 * row.se[m] + 1e-9);
    }
  }
}

TEST_CASE("shifted window: smoothed mean and bernoulli variance") {
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto sw = make_shifted_window(Scalar::exact(Rat(0)), Scalar::exact(Rat(1)),
                                ShiftDensity::uniform);

  Window eff = sw->effective_window(fib, w);
  CHECK(eff.measure().to_double() == doctest::Approx(2.0).epsilon(1e-12));

  auto env = sw->envelope(fib, w);
  REQUIRE(env);
  CHECK(env->mean_continuous);
  // ramp of the box-box convolution
  CHECK(std::abs(env->mean.eval(0.5) - cdouble(0.5)) < 1e-12);
  CHECK(std::abs(env->mean.eval(1.0) - cdouble(1.0)) < 1e-12);
  CHECK(std::abs(env->mean.eval(1.75) - cdouble(0.25)) < 1e-12);
  const PiecewiseFn* c0 = env->cov_for({0, 0});
  REQUIRE(c0);
  CHECK(std::abs(c0->eval(0.5) - cdouble(0.25)) < 1e-12); // e(1-e) at e = 1/2
  CHECK(std::abs(c0->eval(1.75) - cdouble(0.25 * 0.75)) < 1e-12);
  CHECK(envelope_hermitian_defect(*env, fib) < 1e-12);

  // weights are 0/1 and average to the smoothed mean
  auto sup = PointSet::build(enumerate_points(fib, eff, Region::centered(1, 15.0)));
  auto wts = sw->sample_weights(fib, w, *sup, 3);
  for (auto v : wts) CHECK((v == cdouble(0.0) || v == cdouble(1.0)));
  std::size_t probe = sup->size() / 2;
  auto st = site_mean(*sw, fib, w, *sup, probe, 600);
  double want = env->mean.eval((*sup)[probe].internal_d[0]).real();
  CHECK(std::abs(st.mean - want) < 6.0 * st.se + 1e-3);
}

TEST_CASE("shifted window: tent-weighted shifts keep unit mass") {
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto sw = make_shifted_window(Scalar::exact(Rat(0)), Scalar::exact(Rat(1, 2)),
                                ShiftDensity::tent);
  auto env = sw->envelope(fib, w);
  REQUIRE(env);
  CHECK(std::abs(env->mean.integral() - cdouble(1.0)) < 1e-12); // mass preserved
  auto sup = PointSet::build(enumerate_points(fib, sw->effective_window(fib, w),
                                              Region::centered(1, 12.0)));
  std::size_t probe = 0;
  auto st = site_mean(*sw, fib, w, *sup, probe, 400);
  double want = env->mean.eval((*sup)[probe].internal_d[0]).real();
  CHECK(std::abs(st.mean - want) < 6.0 * st.se + 2e-3);
  CHECK_THROWS(make_shifted_window(Scalar::exact(Rat(1)), Scalar::exact(Rat(1)),
                                   ShiftDensity::uniform));
}

TEST_CASE("monte carlo moments: independent fields match their laws") {
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto sup = fib_support(12.0, w);
  REQUIRE(sup->size() >= 8);

  auto stats = mc_moments(*make_bernoulli(0.3), fib, w, *sup, {{0, 0}, {1, 1}}, 500, 40);
  CHECK(stats.seeds == 500);
  for (std::size_t i = 0; i < sup->size(); ++i)
    CHECK(std::abs(stats.mean[i].real() - 0.3) < 6.0 * stats.mean_se[i] + 1e-9);
  REQUIRE(stats.cov_rows.size() == 2);
  for (std::size_t m = 0; m < stats.cov_rows[0].sites.size(); ++m)
    CHECK(std::abs(stats.cov_rows[0].cov[m].real() - 0.21) <
          6.0 * stats.cov_rows[0].se[m] + 1e-9);
  // independent sites: lag (1,1) covariance is zero
  for (std::size_t m = 0; m < stats.cov_rows[1].sites.size(); ++m)
    CHECK(std::abs(stats.cov_rows[1].cov[m]) < 6.0 * stats.cov_rows[1].se[m] + 1e-9);

  auto det = mc_moments(*make_deterministic(0.8), fib, w, *sup, {{0, 0}}, 10, 1);
  for (std::size_t i = 0; i < sup->size(); ++i) {
    CHECK(std::abs(det.mean[i] - cdouble(0.8)) < 1e-12);
    CHECK(det.mean_se[i] < 1e-7); // cancellation noise in sumsq - mean^2
  }
  for (std::size_t m = 0; m < det.cov_rows[0].sites.size(); ++m)
    CHECK(std::abs(det.cov_rows[0].cov[m]) < 1e-12);

  CHECK_THROWS(mc_moments(*make_bernoulli(0.5), fib, w, *sup, {}, 1, 0));
}

TEST_CASE("monte carlo moments: moving average covariance across lags") {
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto sup = fib_support(14.0, w);
  auto ma = make_moving_average({{0, 0}, {1, 1}}, {1.0, 1.0}, 0.0);
  auto env = ma->envelope(fib, w);

  auto stats = mc_moments(*ma, fib, w, *sup, {{0, 0}, {1, 1}, {2, 1}}, 600, 900);
  for (const auto& row : stats.cov_rows) {
    const PiecewiseFn* cg = env->cov_for(row.g);
    for (std::size_t m = 0; m < row.sites.size(); ++m) {
      double y = (*sup)[row.sites[m]].internal_d[0];
      double want = cg ? cg->eval(y).real() : 0.0;
      CAPTURE(row.g[0]);
      CAPTURE(y);
      CHECK(std::abs(row.cov[m].real() - want) < 6.0 * row.se[m] + 1e-9);
    }
  }
}

TEST_CASE("path field: stationary spread and nearby-site coupling") {
  Scheme fib = Scheme::fibonacci();
  Window w = unit_window();
  auto sup = fib_support(8.0, w);
  REQUIRE(sup->size() >= 5);
  auto ou = make_ou_path(1.0, std::sqrt(2.0), 0.5); // stationary variance 1

  CHECK(!ou->dependency_set(fib));
  CHECK(!ou->envelope(fib, w));
  CHECK(std::abs(ou->mean_fn(fib, w).eval(0.4) - cdouble(0.5)) < 1e-15);

  auto stats = mc_moments(*ou, fib, w, *sup, {{0, 0}}, 500, 77);
  for (std::size_t i = 0; i < sup->size(); ++i)
    CHECK(std::abs(stats.mean[i].real() - 0.5) < 6.0 * stats.mean_se[i] + 1e-9);
  for (std::size_t m = 0; m < stats.cov_rows[0].sites.size(); ++m)
    CHECK(std::abs(stats.cov_rows[0].cov[m].real() - 1.0) <
          6.0 * stats.cov_rows[0].se[m] + 1e-9);

  // covariance between two sites decays like exp(-rate * |y_i - y_j|)
  std::size_t i = 0, j = 1;
  double dy = std::abs((*sup)[i].internal_d[0] - (*sup)[j].internal_d[0]);
  double sum = 0.0, sumsq = 0.0;
  std::size_t seeds = 500;
  for (std::size_t k = 0; k < seeds; ++k) {
    auto wts = ou->sample_weights(fib, w, *sup, 4000 + k);
    double p = (wts[i].real() - 0.5) * (wts[j].real() - 0.5);
    sum += p;
    sumsq += p * p;
  }
  double m = sum / seeds;
  double se = std::sqrt(std::max(0.0, sumsq / seeds - m * m) / seeds);
  CHECK(std::abs(m - std::exp(-dy)) < 6.0 * se + 1e-9);

  CHECK_THROWS(make_ou_path(0.0, 1.0, 0.0));
  CHECK_THROWS(make_ou_path(1.0, -1.0, 0.0));
  CHECK_THROWS(make_ou_path(1.0, 1.0, 0.0, 0.5)); // step fraction too coarse
}
