#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "subfair/types.hpp"

namespace subfair {

/// Replicate values of one quantity, e.g. a metric over ten seeds.
template <typename Scalar>
struct SampleSet {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> values;
    std::string label;

    SampleSet() = default;
    SampleSet(std::initializer_list<Scalar> v, std::string l = {}) : SampleSet(std::vector<Scalar>(v), std::move(l)) {}
    explicit SampleSet(const std::vector<Scalar>& v, std::string l = {})
        : values(Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(v.data(), static_cast<Eigen::Index>(v.size()))),
          label(std::move(l)) {}

    Eigen::Index size() const { return values.size(); }
    Scalar mean() const { return values.mean(); }

    /// Sample (n-1) variance.
    Scalar variance() const {
        if (values.size() < 2) throw std::invalid_argument("variance needs at least two values");
        return (values.array() - mean()).square().sum() / Scalar(values.size() - 1);
    }
    Scalar stddev() const { return std::sqrt(variance()); }
};

template <typename Scalar>
struct WelchResult {
    Scalar t;
    Scalar dof;
    Scalar p;  // two-sided
};

template <typename Scalar>
struct Interval {
    Scalar lo;
    Scalar hi;
};

template <typename Scalar>
Scalar normal_cdf(Scalar x) {
    using std::erfc;
    using std::sqrt;
    return Scalar(0.5) * erfc(-x / sqrt(Scalar(2)));
}

/// Inverse standard normal CDF: rational initial guess refined by Halley steps.
template <typename Scalar>
Scalar normal_quantile(Scalar p) {
    if (!(p > Scalar(0) && p < Scalar(1))) {
        if (p == Scalar(0)) return -std::numeric_limits<Scalar>::infinity();
        if (p == Scalar(1)) return std::numeric_limits<Scalar>::infinity();
        throw std::invalid_argument("normal_quantile: p outside [0, 1]");
    }
    // 1 - p is exact here; refining in the upper tail would cancel
    if (p > Scalar(0.5)) return -normal_quantile(Scalar(1) - p);
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    const double pd = static_cast<double>(p);
    const double p_low = 0.02425;
    double x;
    if (pd < p_low) {
        const double q = std::sqrt(-2 * std::log(pd));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    } else if (pd <= 1 - p_low) {
        const double q = pd - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    } else {
        const double q = std::sqrt(-2 * std::log(1 - pd));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    Scalar z = static_cast<Scalar>(x);
    const Scalar sqrt_2pi = std::sqrt(Scalar(2) * Scalar(M_PI));
    for (int iter = 0; iter < 2; ++iter) {
        const Scalar e = normal_cdf(z) - p;
        const Scalar u = e * sqrt_2pi * std::exp(z * z / Scalar(2));
        z = z - u / (Scalar(1) + z * u / Scalar(2));
    }
    return z;
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
template <typename Scalar>
Scalar beta_continued_fraction(Scalar a, Scalar b, Scalar x) {
    const Scalar tiny = std::numeric_limits<Scalar>::min() / std::numeric_limits<Scalar>::epsilon();
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    const Scalar qab = a + b;
    const Scalar qap = a + Scalar(1);
    const Scalar qam = a - Scalar(1);
    Scalar c = 1;
    Scalar d = Scalar(1) - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = Scalar(1) / d;
    Scalar h = d;
    for (int m = 1; m <= 10000; ++m) {
        const int m2 = 2 * m;
        Scalar aa = Scalar(m) * (b - Scalar(m)) * x / ((qam + Scalar(m2)) * (a + Scalar(m2)));
        d = Scalar(1) + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = Scalar(1) + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = Scalar(1) / d;
        h *= d * c;
        aa = -(a + Scalar(m)) * (qab + Scalar(m)) * x / ((a + Scalar(m2)) * (qap + Scalar(m2)));
        d = Scalar(1) + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = Scalar(1) + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = Scalar(1) / d;
        const Scalar del = d * c;
        h *= del;
        if (std::abs(del - Scalar(1)) <= eps) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
template <typename Scalar>
Scalar incomplete_beta(Scalar a, Scalar b, Scalar x) {
    if (!(a > 0 && b > 0)) throw std::invalid_argument("incomplete_beta: a, b must be positive");
    if (x < Scalar(0) || x > Scalar(1)) throw std::invalid_argument("incomplete_beta: x outside [0, 1]");
    if (x == Scalar(0)) return Scalar(0);
    if (x == Scalar(1)) return Scalar(1);
    const Scalar log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const Scalar front = std::exp(log_front);
    if (x < (a + Scalar(1)) / (a + b + Scalar(2))) return front * detail::beta_continued_fraction(a, b, x) / a;
    return Scalar(1) - front * detail::beta_continued_fraction(b, a, Scalar(1) - x) / b;
}

/// P(|T| >= |t|) for Student's t with `dof` degrees of freedom.
template <typename Scalar>
Scalar student_t_two_sided_p(Scalar t, Scalar dof) {
    if (!(dof > 0)) throw std::invalid_argument("student_t: dof must be positive");
    if (std::isinf(t)) return Scalar(0);
    return incomplete_beta(dof / Scalar(2), Scalar(0.5), dof / (dof + t * t));
}

/// Unequal-variance two-sample t-test with Welch-Satterthwaite degrees of freedom.
template <typename Scalar>
WelchResult<Scalar> welch_t_test(const SampleSet<Scalar>& a, const SampleSet<Scalar>& b) {
    if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t_test needs at least two values per sample");
    const Scalar na = Scalar(a.size());
    const Scalar nb = Scalar(b.size());
    const Scalar va = a.variance() / na;
    const Scalar vb = b.variance() / nb;
    const Scalar diff = a.mean() - b.mean();
    if (va == Scalar(0) && vb == Scalar(0)) {
        // No spread: either identical constants or a certain difference.
        const Scalar dof = na + nb - Scalar(2);
        if (diff == Scalar(0)) return {Scalar(0), dof, Scalar(1)};
        return {std::copysign(std::numeric_limits<Scalar>::infinity(), diff), dof, Scalar(0)};
    }
    const Scalar se2 = va + vb;
    const Scalar t = diff / std::sqrt(se2);
    const Scalar dof = se2 * se2 / (va * va / (na - Scalar(1)) + vb * vb / (nb - Scalar(1)));
    return {t, dof, student_t_two_sided_p(t, dof)};
}

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pearson_r(const Eigen::DenseBase<DerivedX>& xs, const Eigen::DenseBase<DerivedY>& ys) {
    using Scalar = typename DerivedX::Scalar;
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson_r: length mismatch");
    if (xs.size() < 2) throw std::invalid_argument("pearson_r needs at least two pairs");
    const auto dx = (xs.derived().array() - xs.derived().mean()).eval();
    const auto dy = (ys.derived().array() - ys.derived().mean()).eval();
    const Scalar sxx = dx.square().sum();
    const Scalar syy = dy.square().sum();
    if (sxx == Scalar(0) || syy == Scalar(0)) throw MetricError("pearson_r: correlation undefined for zero variance");
    const Scalar r = (dx * dy).sum() / std::sqrt(sxx * syy);
    return std::clamp(r, Scalar(-1), Scalar(1));
}

template <typename Scalar>
Scalar pearson_r(const std::vector<Scalar>& xs, const std::vector<Scalar>& ys) {
    using Map = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
    return pearson_r(Map(xs.data(), static_cast<Eigen::Index>(xs.size())),
                     Map(ys.data(), static_cast<Eigen::Index>(ys.size())));
}

/// mean +/- z * s / sqrt(n), z the two-sided standard normal quantile for `level`.
template <typename Scalar>
Interval<Scalar> gaussian_ci(const SampleSet<Scalar>& sample, Scalar level) {
    if (!(level >= Scalar(0) && level < Scalar(1))) throw std::invalid_argument("gaussian_ci: level outside [0, 1)");
    if (sample.size() < 2) throw std::invalid_argument("gaussian_ci needs at least two values");
    const Scalar m = sample.mean();
    const Scalar z = level == Scalar(0) ? Scalar(0) : normal_quantile((Scalar(1) + level) / Scalar(2));
    const Scalar half = z * sample.stddev() / std::sqrt(Scalar(sample.size()));
    return {m - half, m + half};
}

template <typename DerivedP, typename DerivedA>
typename DerivedP::Scalar mean_abs_err(const Eigen::DenseBase<DerivedP>& pred, const Eigen::DenseBase<DerivedA>& actual) {
    if (pred.size() != actual.size()) throw std::invalid_argument("mean_abs_err: length mismatch");
    if (pred.size() == 0) throw std::invalid_argument("mean_abs_err: empty input");
    return (pred.derived().array() - actual.derived().array()).abs().mean();
}

template <typename Scalar>
Scalar mean_abs_err(const std::vector<Scalar>& pred, const std::vector<Scalar>& actual) {
    using Map = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>;
    return mean_abs_err(Map(pred.data(), static_cast<Eigen::Index>(pred.size())),
                        Map(actual.data(), static_cast<Eigen::Index>(actual.size())));
}

}  // namespace subfair
