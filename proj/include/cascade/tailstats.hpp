#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cascade/graph.hpp"
#include "cascade/observables.hpp"
#include "cascade/trace.hpp"
#include "cascade/util.hpp"

namespace cascade {

enum class Family { power_law, truncated_power_law, log_normal, exponential };
const char* to_string(Family f);
std::optional<Family> parse_family(const std::string& s);

class EmptySamples : public std::runtime_error {
public:
    EmptySamples() : std::runtime_error("no samples") {}
};
class InsufficientTail : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InsufficientScales : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class InsufficientDecisions : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class BootstrapFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr long kMinTail = 10;
constexpr long kMinScanSamples = 50;

struct TailFit {
    Family family = Family::power_law;
    double alpha_hat = 0.0;  // power_law, truncated_power_law
    double xc_hat = 0.0;     // truncated_power_law; infinite at the power-law edge
    double theta = 0.0;      // 1 / xc_hat
    double mu = 0.0;         // log_normal
    double sigma = 0.0;      // log_normal
    // log_normal as log p = -lq_a ln x - lq_c (ln x)^2; lq_c = 0 is its power-law limit
    double lq_a = 0.0;
    double lq_c = 0.0;
    double rate = 0.0;       // exponential
    long x_min = 1;
    long n_tail = 0;
    long n_total = 0;
    long distinct_tail = 0;
    long x_max = 0;
    double ks = 0.0;
    double loglik = 0.0;
    double log_norm = 0.0;  // log of the discrete normalizer over x >= x_min
    int evaluations = 0;

    double log_pmf(long x) const;
    // P(X >= x) under the fitted tail model, for x >= x_min.
    double ccdf(long x) const;
    ojson to_json() const;
};

std::vector<std::pair<long, double>> ccdf(const std::vector<long>& samples);

// Gamma(a, z) for real a, including a <= 0.
double upper_incomplete_gamma(double a, double z);

// Log normalizer of the discrete tail model: (alpha) PL, (alpha, xc) TPL, (mu, sigma) LN, (rate) EXP.
double log_normalizer(Family f, double p1, double p2, long x_min);

TailFit fit_family(const std::vector<long>& samples, Family family, long x_min);
// KS distance between the empirical tail and the fitted model over distinct tail values.
double ks_distance(const std::vector<long>& samples, const TailFit& fit);
std::pair<long, TailFit> select_xmin(const std::vector<long>& samples, Family family);

struct ModelComparison {
    Family family_a = Family::truncated_power_law;
    Family family_b = Family::log_normal;
    double lr = 0.0;
    double p_value = 1.0;
    double z = 0.0;
    long n = 0;
    // pointwise log-ratios had (near) zero variance, so p is undefined
    bool identical = false;
    ojson to_json() const;
};

ModelComparison compare_fits(const std::vector<long>& samples, const TailFit& a, const TailFit& b);
ModelComparison compare_models(const std::vector<long>& samples, long x_min, Family a, Family b);

struct ParamInterval {
    std::string name;
    double point = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct BootstrapResult {
    Family family = Family::power_law;
    long x_min = 1;
    int resamples = 0;
    int failures = 0;
    std::vector<ParamInterval> intervals;
    ojson to_json() const;
};

constexpr int kDefaultBootstrap = 1000;

BootstrapResult bootstrap_ci(const std::vector<long>& samples, Family family, long x_min, int resamples,
                             std::uint64_t seed);

struct ScalingPoint {
    int N = 0;
    int runs = 0;
    double mean_xmax = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct ScalingFit {
    double gamma_hat = 0.0;
    double intercept = 0.0;
    double alpha_hat = 0.0;
    std::optional<double> gamma_th;
    std::vector<ScalingPoint> points;
    ojson to_json() const;
};

ScalingFit fit_extreme_scaling(const std::vector<ExtremeSample>& extremes, double alpha_hat, int min_runs = 3);

struct AttachmentBin {
    double x_lo = 0.0;
    double x_hi = 0.0;
    double log_x_center = 0.0;
    double observed = 0.0;
    double expected = 0.0;
    double ratio = 0.0;
};

struct AttachmentCurve {
    std::vector<AttachmentBin> bins;
    long decisions = 0;
    std::optional<double> beta_hat;
};

struct AttachmentEstimate {
    AttachmentCurve pooled;
    std::map<EventType, AttachmentCurve> per_type;
    std::map<EventType, double> p_cont;
    std::map<EventType, double> amplification;
    double beta_hat = 0.0;
    long decisions = 0;
    ojson to_json() const;
};

constexpr long kMinDecisions = 100;

AttachmentEstimate estimate_attachment(const TraceBundle& bundle, const ClaimGraph& graph);
// Pools decisions over several runs before fitting.
AttachmentEstimate estimate_attachment(const TraceBundle& bundle, const std::vector<const ClaimGraph*>& graphs);

// Variate generators used by tests and the acceptance suite.
std::vector<long> sample_power_law(double alpha, long x_min, std::size_t n, Rng& rng);
std::vector<long> sample_truncated_power_law(double alpha, double xc, long x_min, std::size_t n, Rng& rng);
std::vector<long> sample_exponential(double rate, long x_min, std::size_t n, Rng& rng);

// One row of the tail summary: fits, comparisons and optional bootstrap for one observable.
struct TailSummary {
    std::string observable;
    long n_total = 0;
    long distinct = 0;
    std::optional<TailFit> power_law;
    std::optional<TailFit> truncated_power_law;
    std::optional<TailFit> log_normal;
    std::optional<TailFit> exponential;
    std::optional<ModelComparison> tpl_vs_ln;
    std::optional<ModelComparison> tpl_vs_pl;
    std::optional<ModelComparison> tpl_vs_exp;
    std::optional<BootstrapResult> bootstrap;
    std::string status = "ok";
    ojson to_json() const;
};

struct TailOptions {
    std::optional<long> fixed_xmin;  // scan when empty
    int bootstrap = 0;
    std::uint64_t seed = 0;
};

// x_min from a power-law KS scan unless fixed; all four families fitted on that tail.
TailSummary summarize_tail(const std::string& observable, const std::vector<long>& samples, const TailOptions& opt);
std::string tail_summary_csv_header();
std::string tail_summary_csv_row(const TailSummary& s);

}  // namespace cascade
