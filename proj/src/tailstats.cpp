#include "cascade/tailstats.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <gsl/gsl_sf_erf.h>
#include <gsl/gsl_sf_expint.h>
#include <gsl/gsl_sf_gamma.h>
#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

namespace cascade {

namespace {

const char* const kFamilyNames[] = {"power_law", "truncated_power_law", "log_normal", "exponential"};
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Terms summed directly before the Euler-Maclaurin tail takes over.
constexpr long kDirectTerms = 256;

struct GslQuiet {
    GslQuiet() { gsl_set_error_handler_off(); }
} const gsl_quiet;

double log_sum_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double log_hzeta(double alpha, double q) {
    gsl_sf_result r;
    if (gsl_sf_hzeta_e(alpha, q, &r) != GSL_SUCCESS || !(r.val > 0)) return kNaN;
    return std::log(r.val);
}

// Upper incomplete gamma for any real a. GSL drifts by ~1e-6 for a < 0 at small z.
double upper_gamma(double a, double z) {
    if (a > 0) return gsl_sf_gamma_inc(a, z);
    // snap near-integer a so the recurrence never divides by ~0
    if (std::abs(a - std::round(a)) < 1e-7) a = std::round(a);
    if (a == 0.0) return gsl_sf_expint_E1(z);
    if (z >= 1.0) {
        // modified Lentz on the Legendre continued fraction
        const double tiny = 1e-300;
        double b = z + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
        for (int i = 1; i < 10000; ++i) {
            double an = -i * (i - a);
            b += 2.0;
            d = an * d + b;
            if (std::abs(d) < tiny) d = tiny;
            c = b + an / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            double del = d * c;
            h *= del;
            if (std::abs(del - 1.0) < 1e-16) break;
        }
        return std::exp(-z + a * std::log(z)) * h;
    }
    int n;
    double s, g;
    if (a == std::round(a)) {
        n = static_cast<int>(-a);
        s = 0.0;
        g = gsl_sf_expint_E1(z);
    } else {
        n = static_cast<int>(std::floor(-a)) + 1;
        s = a + n;
        g = gsl_sf_gamma_inc(s, z);
    }
    const double ez = std::exp(-z);
    for (int k = 0; k < n; ++k) {
        s -= 1.0;
        g = (g - std::pow(z, s) * ez) / s;
    }
    return g;
}

// log of sum_{x >= x0} x^-a e^{-theta x}; theta = 1/x_c, and theta = 0 is the pure power law
double log_tpl_sum(double a, double theta, long x0) {
    if (theta <= 0.0) return a > 1.0 ? log_hzeta(a, static_cast<double>(x0)) : kInf;
    auto g = [&](double x) { return -a * std::log(x) - theta * x; };
    const double h0 = g(static_cast<double>(x0));
    double s = 0.0;
    const long M = x0 + kDirectTerms;
    for (long x = x0; x < M; ++x) s += std::exp(g(static_cast<double>(x)) - h0);
    const double Md = static_cast<double>(M);
    const double gM = g(Md) - h0;
    if (gM > -60.0) {
        double tail = 0.0;
        const double G = upper_gamma(1.0 - a, Md * theta);
        if (G > 0 && std::isfinite(G)) tail += std::exp(-(1.0 - a) * std::log(theta) + std::log(G) - h0);
        const double gp = -a / Md - theta;
        const double gpp = a / (Md * Md);
        const double gppp = -2.0 * a / (Md * Md * Md);
        const double corr = 0.5 - gp / 12.0 + (gp * gp * gp + 3.0 * gp * gpp + gppp) / 720.0;
        tail += std::exp(gM) * corr;
        s += tail;
    }
    return h0 + std::log(s);
}

// log of int_L^inf exp((1-a)u - c u^2) du, c >= 0
double log_lq_integral(double a, double c, double L) {
    if (c <= 0.0) return a > 1.0 ? (1.0 - a) * L - std::log(a - 1.0) : kInf;
    const double rc = std::sqrt(c);
    const double z = (2.0 * c * L + a - 1.0) / (2.0 * rc);
    if (z < 8.0) {
        const double m = (1.0 - a) / (2.0 * c);
        return c * m * m + 0.5 * std::log(M_PI / c) + std::log(0.5) + gsl_sf_log_erfc(rc * (L - m));
    }
    // asymptotic erfc expansion keeps precision when c is tiny
    double term = 1.0, series = 1.0;
    const double iz2 = 1.0 / (2.0 * z * z);
    for (int k = 1; k < 30; ++k) {
        double next = -term * (2 * k - 1) * iz2;
        if (std::abs(next) >= std::abs(term) || std::abs(next) < 1e-17) break;
        term = next;
        series += term;
    }
    return (1.0 - a) * L - c * L * L - std::log(a - 1.0 + 2.0 * c * L) + std::log(series);
}

// log of sum_{x >= x0} x^-a exp(-c (ln x)^2): the log-normal family, with c = 0 its power-law limit
double log_lq_sum(double a, double c, long x0) {
    if (c <= 0.0 && a <= 1.0) return kInf;
    auto h = [&](double x) {
        double L = std::log(x);
        return -a * L - c * L * L;
    };
    const long M = x0 + kDirectTerms;
    double hmax = -kInf;
    for (long x = x0; x < M; ++x) hmax = std::max(hmax, h(static_cast<double>(x)));
    double s = 0.0;
    for (long x = x0; x < M; ++x) s += std::exp(h(static_cast<double>(x)) - hmax);
    const double logdirect = hmax + std::log(s);

    const double Md = static_cast<double>(M);
    const double L = std::log(Md);
    const double logI = log_lq_integral(a, c, L);
    const double hp = -(a + 2.0 * c * L) / Md;
    const double hpp = (a + 2.0 * c * L - 2.0 * c) / (Md * Md);
    const double hppp = (-2.0 * a - 4.0 * c * L + 6.0 * c) / (Md * Md * Md);
    const double corr = 0.5 - hp / 12.0 + (hp * hp * hp + 3.0 * hp * hpp + hppp) / 720.0;
    double lt;
    if (corr >= 0)
        lt = log_sum_exp(logI, h(Md) + std::log(corr));
    else
        lt = logI + std::log1p(-std::exp(h(Md) + std::log(-corr) - logI));
    return log_sum_exp(logdirect, lt);
}

struct TailData {
    std::vector<long> xs;  // tail samples, sorted
    double sum_log = 0.0;
    double sum_x = 0.0;
    double sum_log2 = 0.0;
    long n = 0;
    long distinct = 0;
};

TailData tail_of(const std::vector<long>& samples, long x_min) {
    TailData t;
    for (long x : samples)
        if (x >= x_min) t.xs.push_back(x);
    std::sort(t.xs.begin(), t.xs.end());
    t.n = static_cast<long>(t.xs.size());
    for (std::size_t i = 0; i < t.xs.size(); ++i) {
        double lx = std::log(static_cast<double>(t.xs[i]));
        t.sum_log += lx;
        t.sum_log2 += lx * lx;
        t.sum_x += static_cast<double>(t.xs[i]);
        if (i == 0 || t.xs[i] != t.xs[i - 1]) ++t.distinct;
    }
    return t;
}

struct NmResult {
    std::vector<double> x;
    double f = kInf;
    int evals = 0;
    bool converged = false;
};

NmResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                     std::vector<double> step, double ftol = 1e-6) {
    struct Ctx {
        const std::function<double(const std::vector<double>&)>* f;
        int evals;
    } ctx{&f, 0};
    const std::size_t dim = x0.size();
    gsl_multimin_function fn;
    fn.n = dim;
    fn.params = &ctx;
    fn.f = [](const gsl_vector* v, void* p) -> double {
        auto* c = static_cast<Ctx*>(p);
        ++c->evals;
        std::vector<double> x(v->size);
        for (std::size_t i = 0; i < v->size; ++i) x[i] = gsl_vector_get(v, i);
        double y = (*c->f)(x);
        return std::isfinite(y) ? y : 1e300;
    };
    NmResult out;
    out.x = x0;
    out.f = f(x0);
    gsl_vector* xv = gsl_vector_alloc(dim);
    gsl_vector* sv = gsl_vector_alloc(dim);
    auto* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim);
    // restart from the incumbent until a full run no longer improves the objective
    for (int restart = 0; restart < 8; ++restart) {
        for (std::size_t i = 0; i < dim; ++i) {
            gsl_vector_set(xv, i, out.x[i]);
            gsl_vector_set(sv, i, step[i]);
        }
        gsl_multimin_fminimizer_set(s, &fn, xv, sv);
        int status = GSL_CONTINUE;
        for (int it = 0; it < 4000 && status == GSL_CONTINUE; ++it) {
            if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
            status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), 1e-9);
        }
        double fnew = s->fval;
        double gain = out.f - fnew;
        if (fnew < out.f) {
            out.f = fnew;
            for (std::size_t i = 0; i < dim; ++i) out.x[i] = gsl_vector_get(s->x, i);
        }
        if (gain < ftol && (status == GSL_SUCCESS || restart > 0)) {
            out.converged = true;
            break;
        }
        for (auto& st : step) st *= 0.5;
    }
    gsl_multimin_fminimizer_free(s);
    gsl_vector_free(xv);
    gsl_vector_free(sv);
    out.evals = ctx.evals;
    return out;
}

void finish_fit(TailFit& f, const TailData& t) {
    f.n_tail = t.n;
    f.distinct_tail = t.distinct;
    f.x_max = t.xs.empty() ? 0 : t.xs.back();
    double ll = 0.0;
    switch (f.family) {
        case Family::power_law: ll = -f.alpha_hat * t.sum_log - t.n * f.log_norm; break;
        case Family::truncated_power_law:
            ll = -f.alpha_hat * t.sum_log - f.theta * t.sum_x - t.n * f.log_norm;
            break;
        case Family::log_normal: ll = -f.lq_a * t.sum_log - f.lq_c * t.sum_log2 - t.n * f.log_norm; break;
        case Family::exponential:
            ll = t.n * std::log(-std::expm1(-f.rate)) - f.rate * (t.sum_x - static_cast<double>(t.n) * f.x_min);
            break;
    }
    f.loglik = ll;
}

double ks_of_tail(const TailData& t, const TailFit& f) {
    if (t.xs.empty()) return 0.0;
    const double n = static_cast<double>(t.n);
    double ks = 0.0;
    const long lo = t.xs.front(), hi = t.xs.back();
    const bool cumulative = f.family != Family::power_law && hi - lo <= 2'000'000;
    double cum = 0.0;  // model mass below the current value
    long next_x = f.x_min;
    std::size_t i = 0;
    while (i < t.xs.size()) {
        long v = t.xs[i];
        double emp = (n - static_cast<double>(i)) / n;
        double mod;
        if (cumulative) {
            for (; next_x < v; ++next_x) cum += std::exp(f.log_pmf(next_x));
            mod = 1.0 - cum;
        } else {
            mod = f.ccdf(v);
        }
        ks = std::max(ks, std::abs(emp - mod));
        while (i < t.xs.size() && t.xs[i] == v) ++i;
    }
    return ks;
}

TailFit fit_tail(const TailData& t, Family family, long x_min) {
    if (t.n < kMinTail)
        throw InsufficientTail("only " + std::to_string(t.n) + " samples at or above x_min=" + std::to_string(x_min));
    if (t.distinct < 2) throw InsufficientTail("tail above x_min=" + std::to_string(x_min) + " holds a single value");
    TailFit f;
    f.family = family;
    f.x_min = x_min;
    const double n = static_cast<double>(t.n);
    const double xm = static_cast<double>(x_min);
    switch (family) {
        case Family::power_law: {
            auto nll = [&](double a) {
                double lz = log_hzeta(a, xm);
                return std::isfinite(lz) ? a * t.sum_log + n * lz : 1e300;
            };
            int evals = 0;
            std::uintmax_t iters = 500;
            auto r = boost::math::tools::brent_find_minima(
                [&](double a) {
                    ++evals;
                    return nll(a);
                },
                1.0 + 1e-6, 20.0, std::numeric_limits<double>::digits / 2, iters);
            if (iters >= 500) throw NonConvergence("power-law MLE did not converge");
            f.alpha_hat = r.first;
            f.log_norm = log_hzeta(f.alpha_hat, xm);
            f.evaluations = evals;
            break;
        }
        case Family::truncated_power_law: {
            // (alpha, s) with theta = s^2 so the power-law edge theta = 0 is reachable
            auto nll = [&](const std::vector<double>& p) {
                const double a = p[0], th = p[1] * p[1];
                if (!(a > 1.0) || a > 10.0 || th > 1e3) return kInf;
                return a * t.sum_log + th * t.sum_x + n * log_tpl_sum(a, th, x_min);
            };
            const double lxlo = std::log(std::max(1.0, xm));
            const double lxhi = std::log(10.0 * static_cast<double>(t.xs.back()));
            const int na = 24, nc = 16;
            std::vector<double> best{1.05, 0.0};
            double fbest = kInf;
            int evals = 0;
            for (int i = 0; i < na; ++i) {
                double a = 1.05 + (4.5 - 1.05) * i / (na - 1);
                for (int j = 0; j <= nc; ++j) {
                    // j == nc is the untruncated edge
                    double th = j < nc ? std::exp(-(lxlo + (lxhi - lxlo) * j / (nc - 1))) : 0.0;
                    std::vector<double> p{a, std::sqrt(th)};
                    double v = nll(p);
                    ++evals;
                    if (v < fbest) {
                        fbest = v;
                        best = p;
                    }
                }
            }
            const double da = (4.5 - 1.05) / (na - 1);
            auto r = nelder_mead(nll, best, {da, std::max(0.02, 0.5 * std::abs(best[1]))});
            if (!r.converged) throw NonConvergence("truncated power-law fit exhausted its iteration budget");
            f.alpha_hat = r.x[0];
            f.theta = r.x[1] * r.x[1];
            f.xc_hat = f.theta > 0 ? 1.0 / f.theta : kInf;
            f.log_norm = log_tpl_sum(f.alpha_hat, f.theta, x_min);
            f.evaluations = evals + r.evals;
            break;
        }
        case Family::log_normal: {
            // log p = -a ln x - c (ln x)^2 - log Z with c = s^2; c = 0 is the power-law limit
            auto nll = [&](const std::vector<double>& p) {
                const double a = p[0], c = p[1] * p[1];
                if (std::abs(a) > 200.0 || c > 50.0) return kInf;
                return a * t.sum_log + c * t.sum_log2 + n * log_lq_sum(a, c, x_min);
            };
            std::vector<double> best;
            double fbest = kInf;
            int evals = 0;
            for (double a0 : {-3.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0})
                for (double c0 : {0.0, 0.005, 0.02, 0.05, 0.1, 0.3, 1.0}) {
                    std::vector<double> p{a0, std::sqrt(c0)};
                    double v = nll(p);
                    ++evals;
                    if (v < fbest) {
                        fbest = v;
                        best = p;
                    }
                }
            auto r = nelder_mead(nll, best, {0.3, std::max(0.05, 0.5 * std::abs(best[1]))});
            if (!r.converged) throw NonConvergence("log-normal fit exhausted its iteration budget");
            f.lq_a = r.x[0];
            f.lq_c = r.x[1] * r.x[1];
            if (f.lq_c > 0) {
                f.sigma = 1.0 / std::sqrt(2.0 * f.lq_c);
                f.mu = (1.0 - f.lq_a) * f.sigma * f.sigma;
            } else {
                f.sigma = kInf;
                f.mu = -kInf;
            }
            f.log_norm = log_lq_sum(f.lq_a, f.lq_c, x_min);
            f.evaluations = evals + r.evals;
            break;
        }
        case Family::exponential: {
            double m = t.sum_x / n - xm;
            f.rate = std::log1p(1.0 / m);
            f.log_norm = 0.0;
            f.evaluations = 1;
            break;
        }
    }
    finish_fit(f, t);
    f.ks = ks_of_tail(t, f);
    return f;
}

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    if (v.size() == 1) return v[0];
    double h = (static_cast<double>(v.size()) - 1.0) * q;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<std::pair<std::string, double>> params_of(const TailFit& f) {
    switch (f.family) {
        case Family::power_law: return {{"alpha", f.alpha_hat}};
        case Family::truncated_power_law: return {{"alpha", f.alpha_hat}, {"xc", f.xc_hat}};
        case Family::log_normal: return {{"mu", f.mu}, {"sigma", f.sigma}};
        case Family::exponential: return {{"rate", f.rate}};
    }
    return {};
}

}  // namespace

double upper_incomplete_gamma(double a, double z) { return upper_gamma(a, z); }

const char* to_string(Family f) { return kFamilyNames[static_cast<int>(f)]; }

std::optional<Family> parse_family(const std::string& s) {
    for (int i = 0; i < 4; ++i)
        if (s == kFamilyNames[i]) return static_cast<Family>(i);
    if (s == "pl") return Family::power_law;
    if (s == "tpl") return Family::truncated_power_law;
    if (s == "ln") return Family::log_normal;
    if (s == "exp") return Family::exponential;
    return std::nullopt;
}

double TailFit::log_pmf(long x) const {
    const double lx = std::log(static_cast<double>(x));
    switch (family) {
        case Family::power_law: return -alpha_hat * lx - log_norm;
        case Family::truncated_power_law: return -alpha_hat * lx - theta * static_cast<double>(x) - log_norm;
        case Family::log_normal: return -lq_a * lx - lq_c * lx * lx - log_norm;
        case Family::exponential:
            return std::log(-std::expm1(-rate)) - rate * static_cast<double>(x - x_min);
    }
    return kNaN;
}

double TailFit::ccdf(long x) const {
    if (x <= x_min) return 1.0;
    switch (family) {
        case Family::power_law:
            return std::exp(log_hzeta(alpha_hat, static_cast<double>(x)) - log_norm);
        case Family::truncated_power_law: return std::exp(log_tpl_sum(alpha_hat, theta, x) - log_norm);
        case Family::log_normal: return std::exp(log_lq_sum(lq_a, lq_c, x) - log_norm);
        case Family::exponential: return std::exp(-rate * static_cast<double>(x - x_min));
    }
    return kNaN;
}

ojson TailFit::to_json() const {
    ojson o;
    o["family"] = to_string(family);
    switch (family) {
        case Family::power_law: o["alpha_hat"] = alpha_hat; break;
        case Family::truncated_power_law:
            o["alpha_hat"] = alpha_hat;
            o["xc_hat"] = std::isfinite(xc_hat) ? ojson(xc_hat) : ojson(nullptr);
            break;
        case Family::log_normal:
            // null mu/sigma mark the power-law limit
            o["mu"] = std::isfinite(mu) ? ojson(mu) : ojson(nullptr);
            o["sigma"] = std::isfinite(sigma) ? ojson(sigma) : ojson(nullptr);
            break;
        case Family::exponential: o["rate"] = rate; break;
    }
    o["x_min"] = x_min;
    o["n_tail"] = n_tail;
    o["distinct_tail"] = distinct_tail;
    o["x_max"] = x_max;
    o["ks"] = ks;
    o["loglik"] = loglik;
    return o;
}

double log_normalizer(Family f, double p1, double p2, long x_min) {
    switch (f) {
        case Family::power_law: return log_hzeta(p1, static_cast<double>(x_min));
        case Family::truncated_power_law: return log_tpl_sum(p1, std::isfinite(p2) ? 1.0 / p2 : 0.0, x_min);
        case Family::log_normal: {
            // (mu, sigma) to the log-quadratic form
            const double s2 = p2 * p2;
            return log_lq_sum(1.0 - p1 / s2, 1.0 / (2.0 * s2), x_min) - p1 * p1 / (2.0 * s2);
        }
        case Family::exponential: return -std::log(-std::expm1(-p1));
    }
    return kNaN;
}

std::vector<std::pair<long, double>> ccdf(const std::vector<long>& samples) {
    if (samples.empty()) throw EmptySamples();
    std::vector<long> v = samples;
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    std::vector<std::pair<long, double>> out;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (i == 0 || v[i] != v[i - 1]) out.emplace_back(v[i], (n - static_cast<double>(i)) / n);
    return out;
}

TailFit fit_family(const std::vector<long>& samples, Family family, long x_min) {
    if (samples.empty()) throw EmptySamples();
    if (x_min < 1) throw std::invalid_argument("x_min must be at least 1");
    auto t = tail_of(samples, x_min);
    auto f = fit_tail(t, family, x_min);
    f.n_total = static_cast<long>(samples.size());
    return f;
}

double ks_distance(const std::vector<long>& samples, const TailFit& fit) {
    return ks_of_tail(tail_of(samples, fit.x_min), fit);
}

std::pair<long, TailFit> select_xmin(const std::vector<long>& samples, Family family) {
    if (samples.empty()) throw EmptySamples();
    if (static_cast<long>(samples.size()) < kMinScanSamples)
        throw InsufficientTail("x_min scan needs at least " + std::to_string(kMinScanSamples) + " samples");
    std::vector<long> v = samples;
    std::sort(v.begin(), v.end());
    std::vector<long> candidates;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < 1) continue;
        if (i > 0 && v[i] == v[i - 1]) continue;
        long remaining = static_cast<long>(v.size() - i);
        if (remaining < kMinTail) break;
        if (v.back() == v[i]) break;  // a single value left
        candidates.push_back(v[i]);
    }
    std::optional<TailFit> best;
    for (long xm : candidates) {
        try {
            auto f = fit_family(samples, family, xm);
            if (!best || f.ks < best->ks) best = f;
        } catch (const InsufficientTail&) {
        } catch (const NonConvergence&) {
        }
    }
    if (!best) throw InsufficientTail("no x_min candidate leaves a fittable tail");
    return {best->x_min, *best};
}

ojson ModelComparison::to_json() const {
    ojson o;
    o["family_a"] = to_string(family_a);
    o["family_b"] = to_string(family_b);
    o["lr"] = lr;
    if (identical)
        o["p_value"] = nullptr;
    else
        o["p_value"] = p_value;
    o["z"] = identical ? ojson(nullptr) : ojson(z);
    o["n"] = n;
    o["identical_likelihoods"] = identical;
    return o;
}

ModelComparison compare_fits(const std::vector<long>& samples, const TailFit& a, const TailFit& b) {
    if (a.x_min != b.x_min) throw std::invalid_argument("fits were made on different tails");
    ModelComparison c;
    c.family_a = a.family;
    c.family_b = b.family;
    std::vector<double> d;
    for (long x : samples)
        if (x >= a.x_min) d.push_back(a.log_pmf(x) - b.log_pmf(x));
    c.n = static_cast<long>(d.size());
    if (d.empty()) throw InsufficientTail("no samples in the shared tail");
    double sum = 0.0;
    for (double v : d) sum += v;
    c.lr = sum;
    const double n = static_cast<double>(d.size());
    const double mean = sum / n;
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= n;
    double sd = std::sqrt(var);
    if (!(sd > 1e-12)) {
        c.identical = true;
        c.p_value = kNaN;
        c.z = kNaN;
        return c;
    }
    c.z = sum / (sd * std::sqrt(n));
    c.p_value = std::erfc(std::abs(c.z) / std::sqrt(2.0));
    return c;
}

ModelComparison compare_models(const std::vector<long>& samples, long x_min, Family a, Family b) {
    auto fa = fit_family(samples, a, x_min);
    auto fb = a == b ? fa : fit_family(samples, b, x_min);
    return compare_fits(samples, fa, fb);
}

ojson BootstrapResult::to_json() const {
    ojson o;
    o["family"] = to_string(family);
    o["x_min"] = x_min;
    o["resamples"] = resamples;
    o["failures"] = failures;
    ojson arr = ojson::array();
    for (const auto& p : intervals) {
        ojson j;
        j["name"] = p.name;
        j["point"] = p.point;
        j["lo"] = p.lo;
        j["hi"] = p.hi;
        arr.push_back(j);
    }
    o["intervals"] = arr;
    return o;
}

BootstrapResult bootstrap_ci(const std::vector<long>& samples, Family family, long x_min, int resamples,
                             std::uint64_t seed) {
    if (resamples < 1) throw std::invalid_argument("resamples must be positive");
    auto full = fit_family(samples, family, x_min);
    auto point = params_of(full);
    BootstrapResult out;
    out.family = family;
    out.x_min = x_min;
    out.resamples = resamples;
    std::vector<std::vector<double>> draws(point.size());
    Rng rng(seed);
    std::vector<long> rs(samples.size());
    for (int b = 0; b < resamples; ++b) {
        for (auto& x : rs) x = samples[rng.below(samples.size())];
        try {
            auto f = fit_family(rs, family, x_min);
            auto p = params_of(f);
            for (std::size_t k = 0; k < p.size(); ++k) draws[k].push_back(p[k].second);
        } catch (const std::runtime_error&) {
            ++out.failures;
        }
    }
    if (out.failures * 5 > resamples)
        throw BootstrapFailure(std::to_string(out.failures) + " of " + std::to_string(resamples) +
                               " bootstrap refits failed");
    for (std::size_t k = 0; k < point.size(); ++k) {
        ParamInterval pi;
        pi.name = point[k].first;
        pi.point = point[k].second;
        pi.lo = percentile(draws[k], 0.025);
        pi.hi = percentile(draws[k], 0.975);
        out.intervals.push_back(pi);
    }
    return out;
}

ojson ScalingFit::to_json() const {
    ojson o;
    o["gamma_hat"] = gamma_hat;
    o["intercept"] = intercept;
    o["alpha_hat"] = alpha_hat;
    o["gamma_th"] = gamma_th ? ojson(*gamma_th) : ojson(nullptr);
    ojson pts = ojson::array();
    for (const auto& p : points) {
        ojson j;
        j["N"] = p.N;
        j["runs"] = p.runs;
        j["mean_xmax"] = p.mean_xmax;
        j["lo"] = p.lo;
        j["hi"] = p.hi;
        pts.push_back(j);
    }
    o["points"] = pts;
    return o;
}

ScalingFit fit_extreme_scaling(const std::vector<ExtremeSample>& extremes, double alpha_hat, int min_runs) {
    std::map<int, std::vector<double>> byN;
    for (const auto& e : extremes) byN[e.N].push_back(static_cast<double>(e.x_max));
    ScalingFit s;
    s.alpha_hat = alpha_hat;
    std::vector<double> lx, ly;
    for (const auto& [N, xs] : byN) {
        if (static_cast<int>(xs.size()) < min_runs || N < 1) continue;
        ScalingPoint p;
        p.N = N;
        p.runs = static_cast<int>(xs.size());
        double m = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
        double v = 0.0;
        for (double x : xs) v += (x - m) * (x - m);
        double se = xs.size() > 1 ? std::sqrt(v / (xs.size() - 1) / xs.size()) : 0.0;
        p.mean_xmax = m;
        p.lo = m - 1.96 * se;
        p.hi = m + 1.96 * se;
        s.points.push_back(p);
        lx.push_back(std::log(static_cast<double>(N)));
        ly.push_back(std::log(m));
    }
    if (s.points.size() < 3)
        throw InsufficientScales("need at least 3 agent counts with " + std::to_string(min_runs) + " runs each, have " +
                                 std::to_string(s.points.size()));
    auto f = ols(lx, ly);
    s.gamma_hat = f.slope;
    s.intercept = f.intercept;
    if (alpha_hat > 1.0) s.gamma_th = 1.0 / (alpha_hat - 1.0);
    return s;
}

std::vector<long> sample_power_law(double alpha, long x_min, std::size_t n, Rng& rng) {
    if (!(alpha > 1.0) || x_min < 1) throw std::invalid_argument("power law needs alpha > 1 and x_min >= 1");
    const double lz = log_hzeta(alpha, static_cast<double>(x_min));
    constexpr long kTable = 1 << 16;
    // S[k] = P(X >= x_min + k)
    std::vector<double> S(kTable);
    for (long k = 0; k < kTable; ++k) S[k] = std::exp(log_hzeta(alpha, static_cast<double>(x_min + k)) - lz);
    auto tail_ccdf = [&](long x) { return std::exp(log_hzeta(alpha, static_cast<double>(x)) - lz); };
    std::vector<long> out(n);
    for (auto& x : out) {
        double u = rng.uniform_pos();
        if (u > S.back()) {
            // largest k with S[k] >= u
            auto it = std::upper_bound(S.begin(), S.end(), u, std::greater<>());
            x = x_min + static_cast<long>(it - S.begin()) - 1;
        } else {
            long lo = x_min + kTable - 1, hi = lo * 2;
            while (tail_ccdf(hi) >= u) {
                lo = hi;
                hi *= 2;
            }
            while (hi - lo > 1) {
                long mid = lo + (hi - lo) / 2;
                if (tail_ccdf(mid) >= u)
                    lo = mid;
                else
                    hi = mid;
            }
            x = lo;
        }
    }
    return out;
}

std::vector<long> sample_truncated_power_law(double alpha, double xc, long x_min, std::size_t n, Rng& rng) {
    std::vector<long> out;
    out.reserve(n);
    while (out.size() < n) {
        auto batch = sample_power_law(alpha, x_min, std::max<std::size_t>(1024, n - out.size()), rng);
        for (long x : batch) {
            if (out.size() == n) break;
            if (rng.uniform() < std::exp(-static_cast<double>(x - x_min) / xc)) out.push_back(x);
        }
    }
    return out;
}

std::vector<long> sample_exponential(double rate, long x_min, std::size_t n, Rng& rng) {
    std::vector<long> out(n);
    for (auto& x : out) x = x_min + static_cast<long>(std::floor(rng.exponential(rate)));
    return out;
}

ojson TailSummary::to_json() const {
    ojson o;
    o["observable"] = observable;
    o["n_total"] = n_total;
    o["distinct"] = distinct;
    o["status"] = status;
    auto put = [&](const char* k, const auto& v) {
        if (v)
            o[k] = v->to_json();
        else
            o[k] = nullptr;
    };
    put("power_law", power_law);
    put("truncated_power_law", truncated_power_law);
    put("log_normal", log_normal);
    put("exponential", exponential);
    put("tpl_vs_ln", tpl_vs_ln);
    put("tpl_vs_pl", tpl_vs_pl);
    put("tpl_vs_exp", tpl_vs_exp);
    put("bootstrap", bootstrap);
    return o;
}

TailSummary summarize_tail(const std::string& observable, const std::vector<long>& samples, const TailOptions& opt) {
    TailSummary s;
    s.observable = observable;
    s.n_total = static_cast<long>(samples.size());
    {
        auto v = samples;
        std::sort(v.begin(), v.end());
        s.distinct = static_cast<long>(std::unique(v.begin(), v.end()) - v.begin());
    }
    if (samples.empty()) {
        s.status = "insufficient: no samples";
        return s;
    }
    long xmin = 0;
    try {
        if (opt.fixed_xmin) {
            xmin = *opt.fixed_xmin;
            s.power_law = fit_family(samples, Family::power_law, xmin);
        } else {
            auto [xm, fit] = select_xmin(samples, Family::power_law);
            xmin = xm;
            s.power_law = fit;
        }
    } catch (const std::runtime_error& e) {
        s.status = std::string("insufficient: ") + e.what();
        return s;
    }
    auto attempt = [&](Family f, std::optional<TailFit>& slot) {
        try {
            slot = fit_family(samples, f, xmin);
        } catch (const std::runtime_error& e) {
            s.status = std::string("partial: ") + to_string(f) + ": " + e.what();
        }
    };
    attempt(Family::truncated_power_law, s.truncated_power_law);
    attempt(Family::log_normal, s.log_normal);
    attempt(Family::exponential, s.exponential);
    if (s.truncated_power_law) {
        if (s.log_normal) s.tpl_vs_ln = compare_fits(samples, *s.truncated_power_law, *s.log_normal);
        s.tpl_vs_pl = compare_fits(samples, *s.truncated_power_law, *s.power_law);
        if (s.exponential) s.tpl_vs_exp = compare_fits(samples, *s.truncated_power_law, *s.exponential);
        if (opt.bootstrap > 0) {
            try {
                s.bootstrap = bootstrap_ci(samples, Family::truncated_power_law, xmin, opt.bootstrap, opt.seed);
            } catch (const std::runtime_error& e) {
                s.status = std::string("partial: bootstrap: ") + e.what();
            }
        }
    }
    return s;
}

std::string tail_summary_csv_header() {
    return "observable,n_total,distinct,x_min,n_tail,distinct_tail,x_max,preferred,alpha_hat,xc_hat,alpha_pl,"
           "lr_tpl_ln,p_tpl_ln,lr_tpl_pl,p_tpl_pl,lr_tpl_exp,p_tpl_exp,alpha_ci_lo,alpha_ci_hi,status\n";
}

std::string tail_summary_csv_row(const TailSummary& s) {
    std::ostringstream os;
    os << csv_escape(s.observable) << ',' << s.n_total << ',' << s.distinct << ',';
    const TailFit* base = s.power_law ? &*s.power_law : nullptr;
    if (base)
        os << base->x_min << ',' << base->n_tail << ',' << base->distinct_tail << ',' << base->x_max << ',';
    else
        os << ",,,,";
    // preferred family by AIC among the fitted candidates
    std::string preferred;
    double best = kInf;
    auto consider = [&](const std::optional<TailFit>& f, int k) {
        if (!f) return;
        double aic = 2.0 * k - 2.0 * f->loglik;
        if (aic < best) {
            best = aic;
            preferred = to_string(f->family);
        }
    };
    consider(s.power_law, 1);
    consider(s.truncated_power_law, 2);
    consider(s.log_normal, 2);
    consider(s.exponential, 1);
    os << preferred << ',';
    if (s.truncated_power_law)
        os << fmt_double(s.truncated_power_law->alpha_hat) << ',' << fmt_double(s.truncated_power_law->xc_hat) << ',';
    else
        os << ",,";
    os << (s.power_law ? fmt_double(s.power_law->alpha_hat) : "") << ',';
    auto cmp = [&](const std::optional<ModelComparison>& c) {
        if (c)
            os << fmt_double(c->lr) << ',' << fmt_double(c->p_value) << ',';
        else
            os << ",,";
    };
    cmp(s.tpl_vs_ln);
    cmp(s.tpl_vs_pl);
    cmp(s.tpl_vs_exp);
    if (s.bootstrap && !s.bootstrap->intervals.empty())
        os << fmt_double(s.bootstrap->intervals[0].lo) << ',' << fmt_double(s.bootstrap->intervals[0].hi) << ',';
    else
        os << ",,";
    os << csv_escape(s.status) << '\n';
    return os.str();
}

}  // namespace cascade
