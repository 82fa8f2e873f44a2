#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace ghostsim {

/// Kahan-Babuska compensated scalar accumulator. Correlation baselines are
/// small differences of large near-equal sums, so plain summation is not
/// enough at the required 1e-9 merge tolerance.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }

    void merge(const KahanSum& o) {
        add(o.sum);
        comp += o.comp;
    }

    double value() const { return sum + comp; }
};

/// Array of compensated accumulators with contiguous storage.
class KahanVector {
public:
    KahanVector() = default;
    explicit KahanVector(std::size_t n) : sum_(n, 0.0), comp_(n, 0.0) {}

    std::size_t size() const { return sum_.size(); }

    void add(std::size_t i, double x) {
        double& s = sum_[i];
        double& c = comp_[i];
        const double t = s + x;
        if (std::abs(s) >= std::abs(x))
            c += (s - t) + x;
        else
            c += (x - t) + s;
        s = t;
    }

    void merge(const KahanVector& o) {
        for (std::size_t i = 0; i < sum_.size(); ++i) {
            add(i, o.sum_[i]);
            comp_[i] += o.comp_[i];
        }
    }

    double value(std::size_t i) const { return sum_[i] + comp_[i]; }

private:
    std::vector<double> sum_;
    std::vector<double> comp_;
};

} // namespace ghostsim
