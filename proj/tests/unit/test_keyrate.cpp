#include "doctest.h"

#include <atomic>
#include <cmath>
#include <thread>

#include "oracles.hpp"
#include "renyiqkd/keyrate.hpp"

using namespace renyiqkd;

namespace {

constexpr std::int64_t kAsymptotic = 1'000'000'000'000'000;

class CountingStore : public BoundStore {
 public:
  std::optional<DivergenceBound> lookup(const BoundKey& key) override {
    ++lookups;
    std::lock_guard lock(mutex);
    if (auto it = entries.find(key); it != entries.end()) return it->second;
    return std::nullopt;
  }
  void store(const BoundKey& key, const DivergenceBound& bound) override {
    ++stores;
    std::lock_guard lock(mutex);
    entries[key] = bound;
  }

  std::atomic<int> lookups{0};
  std::atomic<int> stores{0};
  std::mutex mutex;
  std::map<BoundKey, DivergenceBound> entries;
};

KeyRateEngine& shared_engine() {
  static KeyRateEngine engine;
  return engine;
}

}  // namespace

TEST_SUITE("keyrate") {

TEST_CASE("finite_size_correction examples") {
  for (double alpha : {1.0005, 1.1, 1.5, 2.0}) CHECK(finite_size_correction(alpha, 1.0) == -2.0);
  CHECK(std::abs(finite_size_correction(2.0, 1e-10) - 64.439) < 1e-3);
  CHECK(std::abs(finite_size_correction(1.1, 1e-10) - 363.41) < 1e-2);
  CHECK(finite_size_correction(1.0005, 1e-10) > finite_size_correction(1.001, 1e-10));
  CHECK_THROWS_AS(finite_size_correction(1.0, 1e-10), InvalidInput);
  CHECK_THROWS_AS(finite_size_correction(0.5, 1e-10), InvalidInput);
  CHECK_THROWS_AS(finite_size_correction(1.5, 0.0), InvalidInput);
  CHECK_THROWS_AS(finite_size_correction(1.5, 1.5), InvalidInput);
}

TEST_CASE("default alpha grid") {
  const auto& grid = default_alpha_grid();
  CHECK(grid.size() == 15);
  CHECK(grid.front() == 1.0005);
  CHECK(grid.back() == 2.0);
  CHECK(std::is_sorted(grid.begin(), grid.end()));
}

TEST_CASE("key_rate examples") {
  ProtocolParams params;
  params.p = 0.05;
  params.alpha = 1.001;
  params.m = kAsymptotic;
  const RatePoint r = shared_engine().key_rate(params);
  CHECK(std::abs(r.rate - 0.427) < 0.01);
  CHECK(r.rate <= 1.0 - 2.0 * binary_entropy(0.05) + 1e-9);
  CHECK(r.certificate_gap >= 0.0);
  CHECK(r.q_star == 0.0);
  CHECK(r.alpha_star == 1.001);

  // Flip probability 0.098 at m = 1e5 with alpha chosen from the grid.
  params.p = 0.11;
  params.q = 0.098;
  params.m = 100'000;
  double best = -1.0;
  for (double alpha : default_alpha_grid()) {
    params.alpha = alpha;
    best = std::max(best, shared_engine().key_rate(params).rate);
  }
  CHECK(best > 0.0);

  // The rate is the certified lower bound, not the upper value.
  params.alpha = 1.05;
  const RatePoint fixed = shared_engine().key_rate(params);
  const DivergenceBound b = shared_engine().divergence_bound(0.11, 0.098, 1.05);
  CHECK(fixed.rate == doctest::Approx(b.lower - binary_entropy(effective_qber(0.11, 0.098)) -
                                      finite_size_correction(1.05, 1e-10) / 1e5)
                          .epsilon(1e-12));
}

TEST_CASE("key_rate honours a per-call epsilon") {
  ProtocolParams params;
  params.p = 0.03;
  params.alpha = 1.1;
  params.m = 1'000'000;
  const RatePoint base = shared_engine().key_rate(params);
  params.epsilon = 1e-5;
  const RatePoint loose = shared_engine().key_rate(params);
  CHECK(loose.rate - base.rate ==
        doctest::Approx((finite_size_correction(1.1, 1e-10) - finite_size_correction(1.1, 1e-5)) / 1e6));
  CHECK(loose.params.epsilon == 1e-5);
}

TEST_CASE("rates at maximal noise are not positive") {
  ProtocolParams params;
  params.p = 0.5;
  params.m = kAsymptotic;
  for (double q : {0.0, 0.25, 0.5}) {
    params.q = q;
    CHECK(shared_engine().key_rate(params).rate <= 0.0);
  }
}

TEST_CASE("optimize_q examples") {
  const RatePoint low = shared_engine().optimize_q(kAsymptotic, 1.05, 0.02);
  CHECK(low.q_star < 0.01);
  CHECK(low.rate > 0.0);

  const RatePoint edge = shared_engine().optimize_q(kAsymptotic, 1.001, 0.11);
  CHECK(std::abs(edge.q_star - 0.077) < 0.02);
  CHECK(edge.rate > shared_engine().asymptotic_rate(0.11, 0.0, 1.001));

  for (double p : {0.05, 0.1, 0.11, 0.12}) {
    CHECK(shared_engine().optimize_q(kAsymptotic, 1.5, p).q_star == 0.0);
  }
  CHECK(edge.q_star >= 0.0);
  CHECK(edge.q_star <= 0.5);
  CHECK_THROWS_AS(shared_engine().optimize_q(kAsymptotic, 1.0, 0.1), InvalidInput);
  CHECK_THROWS_AS(shared_engine().optimize_q(kAsymptotic, 1.1, 0.6), InvalidInput);
}

TEST_CASE("optimize_alpha_q examples") {
  const auto& grid = default_alpha_grid();
  for (std::int64_t m : {std::int64_t{100'000}, std::int64_t{1'000'000}}) {
    const RatePoint r = shared_engine().optimize_alpha_q(m, 0.11, grid);
    CHECK(r.alpha_star >= 1.01);
    CHECK(r.alpha_star <= 1.05);
  }
  for (std::int64_t m : {std::int64_t{1'000'000}, std::int64_t{1'000'000'000}, kAsymptotic}) {
    const RatePoint r = shared_engine().optimize_alpha_q(m, 0.10, grid);
    CHECK(r.q_star >= 0.007);
    CHECK(r.q_star <= 0.074);
  }
  const RatePoint asym = shared_engine().optimize_alpha_q(kAsymptotic, 0.08, grid);
  CHECK(asym.alpha_star == grid.front());
  const RatePoint pinned = shared_engine().optimize_alpha_q(kAsymptotic, 0.11, grid, false);
  CHECK(pinned.q_star == 0.0);
  CHECK(asym.alpha_star > 1.0);
  CHECK(asym.alpha_star <= 2.0);
  CHECK_THROWS_AS(shared_engine().optimize_alpha_q(kAsymptotic, 0.1, {}), InvalidInput);
  CHECK_THROWS_AS(shared_engine().optimize_alpha_q(kAsymptotic, 0.1, {2.5}), InvalidInput);
}

TEST_CASE("delta_r examples") {
  std::vector<double> p_grid;
  for (int i = 0; i <= 8; ++i) p_grid.push_back(0.09 + 0.005 * i);
  const DeltaR high = shared_engine().delta_r(1.5, p_grid);
  CHECK(high.delta == 0.0);
  const DeltaR low = shared_engine().delta_r(1.01, p_grid);
  CHECK(low.delta > 1e-3);
  CHECK(std::abs(low.p_at_max - 0.11) <= 0.005);
  CHECK(low.certificate_gap >= 0.0);
  CHECK_THROWS_AS(shared_engine().delta_r(1.01, {0.0}), InvalidInput);
  CHECK_THROWS_AS(shared_engine().delta_r(1.01, {0.5}), InvalidInput);
}

TEST_CASE("max_tolerable_qber input checks") {
  CHECK_THROWS_AS(shared_engine().max_tolerable_qber(999, true, default_alpha_grid()), InvalidInput);
  CHECK_THROWS_AS(shared_engine().max_tolerable_qber(1000, true, {}), InvalidInput);
  // A penalty this large leaves no key even at p = 0.
  EngineOptions strict;
  strict.epsilon = 1e-300;
  const KeyRateEngine engine(strict);
  const QberThreshold none = engine.max_tolerable_qber(1000, false, {1.0005});
  CHECK_FALSE(none.found);
  CHECK(none.p_max == 0.0);
}

TEST_CASE("guessing_probability examples") {
  for (double p : {0.0, 0.1, 0.3, 0.5}) CHECK(guessing_probability(p, 0.5) == 0.5);
  for (double q : {0.0, 0.2, 0.5}) CHECK(guessing_probability(0.0, q) == 0.5);
  CHECK(std::abs(guessing_probability(0.11, 0.0) - 0.8129) < 1e-4);
  CHECK_THROWS_AS(guessing_probability(0.6, 0.1), InvalidInput);
  CHECK_THROWS_AS(guessing_probability(0.1, -0.1), InvalidInput);
}

TEST_CASE("min_entropy_rate examples") {
  for (double gamma : {1.0, 1.1, 1.2}) {
    CHECK(min_entropy_rate({0.07, 0.5, gamma}) == doctest::Approx(1.0 - gamma).epsilon(1e-12));
  }
  CHECK(min_entropy_rate({0.0, 0.0, 1.0}) == 1.0);
  CHECK(std::abs(min_entropy_rate({0.05, 0.0, 1.0}) - 0.1920) < 1e-3);
  CHECK_THROWS_AS(min_entropy_rate({0.05, 0.0, 0.9}), InvalidInput);
}

TEST_CASE("min_entropy_derivatives against finite differences") {
  for (double gamma : {1.0, 1.15}) {
    for (double p : {0.01, 0.05, 0.11, 0.3}) {
      for (double q : {0.05, 0.2, 0.35, 0.45}) {
        const auto f = [&](double h) { return min_entropy_rate({p, q + h, gamma}); };
        const MinEntropyDerivatives d = min_entropy_derivatives({p, q, gamma});
        CHECK(std::abs(d.first - oracle::central_difference(f)) < 1e-6);
        const auto g = [&](double h) { return min_entropy_derivatives({p, q + h, gamma}).first; };
        CHECK(std::abs(d.second - oracle::central_difference(g)) < 1e-6 * std::max(1.0, d.second));
        CHECK(d.second > 0.0);
      }
    }
  }
  const MinEntropyDerivatives half = min_entropy_derivatives({0.1, 0.5, 1.0});
  CHECK(std::abs(half.first - 4.0 * std::sqrt(0.09) / std::log(2.0)) < 1e-12);
  CHECK_THROWS_AS(min_entropy_derivatives({0.0, 0.2, 1.0}), InvalidInput);
  CHECK_THROWS_AS(min_entropy_derivatives({0.5, 0.2, 1.0}), InvalidInput);
  CHECK_THROWS_AS(min_entropy_derivatives({0.1, 0.0, 1.0}), InvalidInput);
}

TEST_CASE("optimizing q never hurts") {
  for (double alpha : {1.001, 1.05, 1.3}) {
    for (double p : {0.03, 0.1, 0.115}) {
      for (std::int64_t m : {std::int64_t{100'000}, kAsymptotic}) {
        const RatePoint opt = shared_engine().optimize_q(m, alpha, p);
        ProtocolParams at_zero;
        at_zero.p = p;
        at_zero.alpha = alpha;
        at_zero.m = m;
        CHECK(opt.rate >= shared_engine().key_rate(at_zero).rate - 1e-6);
      }
    }
  }
}

TEST_CASE("the rate difference between q* and q = 0 does not depend on m") {
  for (double p : {0.1, 0.11}) {
    const double alpha = 1.02;
    const double q_star = shared_engine().optimize_q(kAsymptotic, alpha, p).q_star;
    ProtocolParams with;
    with.p = p;
    with.q = q_star;
    with.alpha = alpha;
    ProtocolParams without = with;
    without.q = 0.0;
    double previous = 0.0;
    bool first = true;
    for (std::int64_t m : {std::int64_t{10'000}, std::int64_t{10'000'000}, kAsymptotic}) {
      with.m = without.m = m;
      const double diff = shared_engine().key_rate(with).rate - shared_engine().key_rate(without).rate;
      if (!first) CHECK(std::abs(diff - previous) < 1e-9);
      previous = diff;
      first = false;
    }
  }
}

TEST_CASE("rates are non-decreasing in m") {
  ProtocolParams params;
  params.p = 0.09;
  params.q = 0.05;
  params.alpha = 1.05;
  double previous = -1e300;
  for (std::int64_t m = 1000; m <= kAsymptotic; m *= 10) {
    params.m = m;
    const double r = shared_engine().key_rate(params).rate;
    CHECK(r >= previous);
    previous = r;
  }
}

TEST_CASE("the alpha = 2 rate dominates the min-entropy rate") {
  for (double p : {0.01, 0.03, 0.05}) {
    for (double q : {0.0, 0.05, 0.1}) {
      const double hmin = min_entropy_rate({p, q, 1.0});
      if (hmin <= 0.0) continue;
      CHECK(shared_engine().asymptotic_rate(p, q, 2.0) >= hmin - 1e-6);
    }
  }
}

TEST_CASE("engine memoizes bounds and consults the store once per key") {
  CountingStore store;
  const KeyRateEngine engine({}, &store);
  const DivergenceBound a = engine.divergence_bound(0.07, 0.1, 1.2);
  const DivergenceBound b = engine.divergence_bound(0.07, 0.1, 1.2);
  CHECK(store.lookups == 1);
  CHECK(store.stores == 1);
  CHECK(a.lower == b.lower);
  CHECK(a.lower <= a.upper);
  CHECK(a.gap < engine.options().solver.tol);

  // A second engine sharing the store is served from it without solving.
  const KeyRateEngine reader({}, &store);
  const DivergenceBound c = reader.divergence_bound(0.07, 0.1, 1.2);
  CHECK(store.lookups == 2);
  CHECK(store.stores == 1);
  CHECK(c.lower == a.lower);

  // Changing a tolerance changes the key.
  EngineOptions tighter;
  tighter.solver.tol = 1e-7;
  const KeyRateEngine other(tighter, &store);
  other.divergence_bound(0.07, 0.1, 1.2);
  CHECK(store.stores == 2);
}

TEST_CASE("concurrent queries agree with serial ones") {
  const KeyRateEngine concurrent;
  const KeyRateEngine serial;
  const std::vector<double> ps{0.04, 0.08, 0.1, 0.11};
  std::vector<RatePoint> results(ps.size() * 2);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < results.size(); ++i) {
    threads.emplace_back([&, i] { results[i] = concurrent.optimize_q(1'000'000, 1.1, ps[i % ps.size()]); });
  }
  for (auto& t : threads) t.join();
  for (std::size_t i = 0; i < results.size(); ++i) {
    const RatePoint expected = serial.optimize_q(1'000'000, 1.1, ps[i % ps.size()]);
    CHECK(results[i].rate == expected.rate);
    CHECK(results[i].q_star == expected.q_star);
  }
}

}  // TEST_SUITE
