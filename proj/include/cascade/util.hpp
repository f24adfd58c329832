#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cascade {

std::string csv_escape(const std::string& s);
// Shortest round-trip decimal form; empty for NaN.
std::string fmt_double(double v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// splitmix64 finalizer; used to fan a single seed out into independent streams.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

// mt19937_64 with hand-written variate transforms so streams are identical
// across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    std::uint64_t next() { return eng_(); }
    double uniform();                    // [0, 1)
    double uniform_pos();                // (0, 1)
    std::uint64_t below(std::uint64_t n);  // [0, n)
    bool bernoulli(double p) { return uniform() < p; }
    double normal();
    long poisson(double lambda);
    double exponential(double rate);

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LineFit ols(const std::vector<double>& x, const std::vector<double>& y);

double normal_cdf(double z);
double normal_sf(double z);
double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace cascade
