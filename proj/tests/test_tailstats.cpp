#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <gsl/gsl_sf_gamma.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "cascade/tailstats.hpp"
#include "cascade/util.hpp"

using namespace cascade;

namespace {

// model CCDF at v by summing the pmf from x_min up to v-1
double brute_ccdf(const TailFit& f, long v) {
    double below = 0.0;
    for (long x = f.x_min; x < v; ++x) below += std::exp(f.log_pmf(x));
    return 1.0 - below;
}

double brute_ks(const std::vector<long>& samples, const TailFit& f) {
    std::vector<long> tail;
    for (long x : samples)
        if (x >= f.x_min) tail.push_back(x);
    const double n = static_cast<double>(tail.size());
    double ks = 0.0;
    for (long v : tail) {
        double at_or_above = 0;
        for (long x : tail) at_or_above += x >= v;
        ks = std::max(ks, std::abs(at_or_above / n - brute_ccdf(f, v)));
    }
    return ks;
}

}  // namespace

TEST_CASE("empirical CCDF") {
    auto c = ccdf({1, 1, 2});
    REQUIRE(c.size() == 2);
    CHECK(c[0] == std::pair<long, double>{1, 1.0});
    CHECK(c[1].first == 2);
    CHECK(c[1].second == doctest::Approx(1.0 / 3.0));
    CHECK(ccdf({5}) == std::vector<std::pair<long, double>>{{5, 1.0}});
}

TEST_CASE("TPL variates bend down below the power law in log-log") {
    Rng rng(11);
    auto s = sample_truncated_power_law(2.3, 50.0, 1, 10000, rng);
    auto c = ccdf(s);
    auto at = [&](long x) {
        auto it = std::lower_bound(c.begin(), c.end(), std::make_pair(x, -1.0));
        return it->second;
    };
    const double mid = (std::log(at(8)) - std::log(at(2))) / std::log(4.0);
    const double far = (std::log(at(120)) - std::log(at(60))) / std::log(2.0);
    // mid-range slope near -(alpha-1), the cutoff makes the far slope much steeper
    CHECK(mid == doctest::Approx(-1.3).epsilon(0.2));
    CHECK(far < mid - 1.0);
}

TEST_CASE("upper incomplete gamma matches GSL including non-positive a") {
    for (double a : {-2.5, -1.3, -0.5, 0.0, 0.3, 1.0, 2.7})
        for (double z : {0.01, 0.2, 1.0, 3.5, 20.0}) {
            const double want = gsl_sf_gamma_inc(a, z);
            CHECK(upper_incomplete_gamma(a, z) == doctest::Approx(want).epsilon(1e-9));
        }
}

TEST_CASE("log normalizers equal brute-force sums") {
    const long xm = 3;
    auto brute = [&](auto f) {
        double s = 0.0;
        for (long x = xm; x < 5'000'000; ++x) s += f(static_cast<double>(x));
        return std::log(s);
    };
    CHECK(log_normalizer(Family::truncated_power_law, 2.1, 40.0, xm) ==
          doctest::Approx(brute([](double x) { return std::pow(x, -2.1) * std::exp(-x / 40.0); })).epsilon(1e-9));
    CHECK(log_normalizer(Family::exponential, 0.3, 0.0, xm) ==
          doctest::Approx(brute([](double x) { return std::exp(-0.3 * (x - 3)); })).epsilon(1e-9));
    // power law: partial sum plus the Euler-Maclaurin remainder beyond the cut
    const double a = 2.6;
    double s = 0.0;
    const long cut = 200000;
    for (long x = xm; x < cut; ++x) s += std::pow(static_cast<double>(x), -a);
    s += std::pow(static_cast<double>(cut), 1 - a) / (a - 1) + 0.5 * std::pow(static_cast<double>(cut), -a);
    CHECK(log_normalizer(Family::power_law, a, 0.0, xm) == doctest::Approx(std::log(s)).epsilon(1e-9));
}

TEST_CASE("fitted pmf sums to one over the tail") {
    Rng rng(5);
    auto s = sample_truncated_power_law(2.2, 30.0, 2, 3000, rng);
    for (auto fam : {Family::power_law, Family::truncated_power_law, Family::log_normal, Family::exponential}) {
        auto f = fit_family(s, fam, 2);
        double tot = 0.0;
        for (long x = 2; x < 200000; ++x) tot += std::exp(f.log_pmf(x));
        CHECK(tot == doctest::Approx(1.0).epsilon(fam == Family::power_law ? 1e-3 : 1e-8));
    }
}

TEST_CASE("power-law MLE recovers the generator exponent") {
    Rng rng(1);
    auto s = sample_power_law(2.5, 5, 50000, rng);
    auto f = fit_family(s, Family::power_law, 5);
    CHECK(f.alpha_hat == doctest::Approx(2.5).epsilon(0.02));
    CHECK(f.n_tail == 50000);
}

TEST_CASE("TPL MLE recovers exponent and cutoff") {
    Rng rng(2);
    auto s = sample_truncated_power_law(2.3, 50.0, 1, 50000, rng);
    auto f = fit_family(s, Family::truncated_power_law, 1);
    CHECK(std::abs(f.alpha_hat - 2.3) < 0.07);
    CHECK(std::abs(f.xc_hat - 50.0) < 12.5);
}

TEST_CASE("constant samples cannot be fitted") {
    std::vector<long> s(100, 7);
    CHECK_THROWS_AS(select_xmin(s, Family::power_law), InsufficientTail);
    CHECK_THROWS_AS(fit_family(s, Family::power_law, 7), InsufficientTail);
    CHECK_THROWS_AS(select_xmin({}, Family::power_law), EmptySamples);
}

TEST_CASE("x_min scan finds the contamination boundary") {
    Rng rng(3);
    auto s = sample_power_law(2.5, 5, 20000, rng);
    // uniform noise on 1..4 below the power-law onset
    for (int i = 0; i < 8000; ++i) s.push_back(1 + static_cast<long>(rng.below(4)));
    auto [xm, fit] = select_xmin(s, Family::power_law);
    CHECK(xm >= 4);
    CHECK(xm <= 7);
    CHECK(fit.alpha_hat == doctest::Approx(2.5).epsilon(0.04));
}

TEST_CASE("pure power law selects x_min near the sample minimum") {
    Rng rng(4);
    auto s = sample_power_law(2.4, 1, 20000, rng);
    auto [xm, fit] = select_xmin(s, Family::power_law);
    CHECK(xm <= 3);
}

TEST_CASE("fixed x_min mode fits exactly that tail") {
    Rng rng(6);
    auto s = sample_truncated_power_law(2.2, 80.0, 1, 5000, rng);
    TailOptions opt;
    opt.fixed_xmin = 8;
    auto sum = summarize_tail("tce", s, opt);
    REQUIRE(sum.truncated_power_law);
    CHECK(sum.power_law->x_min == 8);
    CHECK(sum.truncated_power_law->x_min == 8);
    CHECK(sum.log_normal->x_min == 8);
    auto direct = fit_family(s, Family::truncated_power_law, 8);
    CHECK(sum.truncated_power_law->alpha_hat == direct.alpha_hat);
}

TEST_CASE("KS distance matches a brute-force scan on small samples") {
    Rng rng(8);
    for (int trial = 0; trial < 60; ++trial) {
        const auto n = 20 + rng.below(81);
        auto s = trial % 2 ? sample_power_law(2.3, 1, n, rng) : sample_truncated_power_law(2.0, 20.0, 1, n, rng);
        for (auto fam : {Family::power_law, Family::truncated_power_law, Family::log_normal, Family::exponential}) {
            TailFit f;
            try {
                f = fit_family(s, fam, 1);
            } catch (const InsufficientTail&) {
                continue;
            }
            CHECK(std::abs(ks_distance(s, f) - brute_ks(s, f)) < 1e-12);
            CHECK(std::abs(f.ks - brute_ks(s, f)) < 1e-12);
        }
    }
}

TEST_CASE("Vuong statistic equals a direct computation") {
    Rng rng(9);
    auto s = sample_truncated_power_law(2.3, 50.0, 1, 4000, rng);
    auto a = fit_family(s, Family::truncated_power_law, 2);
    auto b = fit_family(s, Family::log_normal, 2);
    auto c = compare_fits(s, a, b);
    std::vector<double> d;
    for (long x : s)
        if (x >= 2) d.push_back(a.log_pmf(x) - b.log_pmf(x));
    double sum = 0;
    for (double v : d) sum += v;
    const double mean = sum / d.size();
    double ss = 0;
    for (double v : d) ss += (v - mean) * (v - mean);
    const double z = sum / std::sqrt(ss / d.size() * d.size());
    CHECK(c.lr == doctest::Approx(sum));
    CHECK(c.p_value == doctest::Approx(std::erfc(std::abs(z) / std::sqrt(2.0))));
    CHECK(c.n == static_cast<long>(d.size()));
}

TEST_CASE("a family compared with itself is undefined, not significant") {
    Rng rng(10);
    auto s = sample_power_law(2.5, 1, 2000, rng);
    auto c = compare_models(s, 1, Family::power_law, Family::power_law);
    CHECK(c.lr == 0.0);
    CHECK(c.identical);
}

TEST_CASE("TPL variates favor TPL over LN and PL") {
    // LN sits close to TPL at this size, so single seeds can miss significance
    int significant = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        auto s = sample_truncated_power_law(2.3, 50.0, 1, 50000, rng);
        auto ln = compare_models(s, 1, Family::truncated_power_law, Family::log_normal);
        auto pl = compare_models(s, 1, Family::truncated_power_law, Family::power_law);
        CHECK(pl.lr > 0);
        CHECK(pl.p_value < 0.05);
        CHECK(ln.lr > 0);
        significant += ln.p_value < 0.05;
    }
    CHECK(significant >= 6);
}

TEST_CASE("exponential variates are not rejected in favor of TPL") {
    Rng rng(13);
    auto s = sample_exponential(0.2, 1, 20000, rng);
    auto c = compare_models(s, 1, Family::exponential, Family::truncated_power_law);
    CHECK((c.identical || c.lr > 0 || c.p_value >= 0.05));
}

TEST_CASE("bootstrap with one resample is degenerate at the point estimate") {
    Rng rng(14);
    auto s = sample_power_law(2.5, 1, 500, rng);
    auto r = bootstrap_ci(s, Family::power_law, 1, 1, 99);
    REQUIRE(r.intervals.size() == 1);
    CHECK(r.intervals[0].lo == r.intervals[0].hi);
    CHECK(r.intervals[0].lo == doctest::Approx(r.intervals[0].point).epsilon(0.2));
    CHECK_THROWS_AS(bootstrap_ci(s, Family::power_law, 1, 0, 1), std::invalid_argument);
}

TEST_CASE("bootstrap intervals cover the truth at small n") {
    Rng rng(15);
    int covered = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto s = sample_power_law(2.5, 1, 100, rng);
        auto r = bootstrap_ci(s, Family::power_law, 1, 200, 1000 + trial);
        covered += r.intervals[0].lo <= 2.5 && 2.5 <= r.intervals[0].hi;
    }
    CHECK(covered >= 90);
}

TEST_CASE("bootstrap width at n=90k is a few hundredths") {
    Rng rng(16);
    auto s = sample_power_law(2.28, 1, 90000, rng);
    auto r = bootstrap_ci(s, Family::power_law, 1, 100, 7);
    const double w = r.intervals[0].hi - r.intervals[0].lo;
    CHECK(w > 0.005);
    CHECK(w < 0.08);
}

TEST_CASE("extreme scaling on exact power-law maxima") {
    std::vector<ExtremeSample> e;
    for (int N : {8, 16, 32, 64, 128})
        for (int r = 0; r < 3; ++r) {
            ExtremeSample x;
            x.run_id = "N" + std::to_string(N) + "r" + std::to_string(r);
            x.N = N;
            // integer maxima can't be exact, so the fit runs on a large constant
            x.x_max = std::lround(1e9 * std::pow(N, 0.85));
            e.push_back(x);
        }
    auto f = fit_extreme_scaling(e, 2.22);
    CHECK(f.gamma_hat == doctest::Approx(0.85).epsilon(1e-9));
    REQUIRE(f.gamma_th);
    CHECK(*f.gamma_th == doctest::Approx(1.0 / 1.22));
    CHECK(std::abs(*f.gamma_th - 0.82) < 0.005);
    CHECK(f.points.size() == 5);
}

TEST_CASE("extreme scaling needs several sizes") {
    std::vector<ExtremeSample> e;
    for (int r = 0; r < 5; ++r) e.push_back({"r" + std::to_string(r), Observable::tce, 8, 10 + r});
    CHECK_THROWS_AS(fit_extreme_scaling(e, 2.5), InsufficientScales);
}

TEST_CASE("maxima of iid power-law draws scale with 1/(alpha-1)") {
    Rng rng(17);
    const double alpha = 2.5;
    std::vector<ExtremeSample> e;
    for (int N : {8, 16, 32, 64, 128, 256, 512})
        for (int r = 0; r < 200; ++r) {
            auto s = sample_power_law(alpha, 1, static_cast<std::size_t>(20 * N), rng);
            e.push_back({"N" + std::to_string(N) + "-" + std::to_string(r), Observable::tce, N,
                         *std::max_element(s.begin(), s.end())});
        }
    auto f = fit_extreme_scaling(e, alpha);
    CHECK(std::abs(f.gamma_hat - 1.0 / (alpha - 1.0)) < 0.1);
}
