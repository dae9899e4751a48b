#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <vector>

#include "fracheat/errors.hpp"

namespace fracheat {

// Neumaier variant of Kahan summation.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double x) {
        add(x);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct GaussRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre rule by Newton iteration on P_n. Rules are cached per n.
inline const GaussRule& gauss_legendre(int n) {
    static std::mutex mtx;
    static std::map<int, GaussRule> cache;
    require(n >= 1 && n <= 512, "gauss_legendre: n out of range");
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return cache.emplace(n, std::move(rule)).first->second;
}

// Fixed-order Gauss-Legendre on [a, b].
template <class F>
double gauss_fixed(F&& f, double a, double b, int n = 20) {
    const GaussRule& g = gauss_legendre(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += g.weights[i] * f(c + h * g.nodes[i]);
    return s * h;
}

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
    bool converged = false;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double resk = fc * kWgk[7];
    double resg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double f1 = f(c - dx), f2 = f(c + dx);
        resk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    return {a, b, resk * h, std::abs((resk - resg) * h)};
}

}  // namespace detail

// Adaptive Gauss-Kronrod (7/15) on [a, b] with a global error budget.
template <class F>
QuadResult integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-10,
                              double abs_tol = 0.0, int max_segments = 2000) {
    QuadResult out;
    if (a == b) {
        out.converged = true;
        return out;
    }
    std::priority_queue<detail::Segment> heap;
    auto first = detail::gk15(f, a, b);
    heap.push(first);
    double total = first.value, err = first.error;
    out.evaluations = 15;
    int segments = 1;
    while (err > std::max(abs_tol, rel_tol * std::abs(total)) && segments < max_segments) {
        auto s = heap.top();
        heap.pop();
        const double m = 0.5 * (s.a + s.b);
        if (!(m > s.a && m < s.b)) {
            heap.push(s);
            break;
        }
        auto l = detail::gk15(f, s.a, m);
        auto r = detail::gk15(f, m, s.b);
        out.evaluations += 30;
        total += l.value + r.value - s.value;
        err += l.error + r.error - s.error;
        heap.push(l);
        heap.push(r);
        ++segments;
    }
    // re-sum to remove drift from incremental updates
    CompensatedSum v, e;
    while (!heap.empty()) {
        v += heap.top().value;
        e += heap.top().error;
        heap.pop();
    }
    out.value = v.value();
    out.error = e.value();
    out.converged = out.error <= std::max(abs_tol, rel_tol * std::abs(out.value)) * 1.0000001;
    return out;
}

// Adaptive integration over [a, b] split at sorted interior breakpoints.
template <class F>
QuadResult integrate_piecewise(F&& f, std::vector<double> points, double rel_tol = 1e-10,
                               double abs_tol = 0.0) {
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    QuadResult out;
    out.converged = true;
    CompensatedSum v;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        auto r = integrate_adaptive(f, points[i], points[i + 1], rel_tol, abs_tol / points.size());
        v += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
        out.converged = out.converged && r.converged;
    }
    out.value = v.value();
    if (!out.converged)
        out.converged = out.error <= std::max(abs_tol, 10.0 * rel_tol * std::abs(out.value));
    return out;
}

// Wynn epsilon algorithm applied to a stream of partial sums.
class WynnEpsilon {
public:
    void push(double s) {
        std::vector<double> row;
        row.reserve(prev_.size() + 1);
        row.push_back(s);
        // eps_{-1} = 0, eps_0 = s; row[k] holds eps_k for the newest diagonal
        for (std::size_t k = 0; k < prev_.size(); ++k) {
            const double below = (k == 0) ? 0.0 : prev_[k - 1];
            const double diff = row[k] - prev_[k];
            if (diff == 0.0) break;
            row.push_back(below + 1.0 / diff);
        }
        prev_ = std::move(row);
        const std::size_t top = (prev_.size() - 1) / 2 * 2;
        const double est = prev_[top];
        if (std::isfinite(est)) {
            error_ = history_.empty() ? std::abs(est) : std::abs(est - history_.back());
            if (history_.size() >= 2)
                error_ = std::max(error_, std::abs(est - history_[history_.size() - 2]));
            history_.push_back(est);
            estimate_ = est;
        }
        ++count_;
    }
    double estimate() const { return estimate_; }
    double error() const { return error_; }
    int count() const { return count_; }

private:
    std::vector<double> prev_;
    std::vector<double> history_;
    double estimate_ = 0.0;
    double error_ = 0.0;
    int count_ = 0;
};

// Gregory end-corrected trapezoid weights for n+1 equispaced nodes (unit spacing).
inline std::vector<double> gregory_weights(std::size_t n_nodes) {
    require(n_nodes >= 2, "gregory_weights: need at least two nodes");
    std::vector<double> w(n_nodes, 1.0);
    if (n_nodes < 11) {
        if (n_nodes % 2 == 1 && n_nodes >= 5) {
            // composite Simpson
            for (std::size_t i = 0; i < n_nodes; ++i)
                w[i] = (i == 0 || i + 1 == n_nodes) ? 1.0 / 3.0 : (i % 2 == 1 ? 4.0 / 3.0 : 2.0 / 3.0);
        } else {
            w.front() = w.back() = 0.5;
        }
        return w;
    }
    static constexpr std::array<double, 5> end = {95.0 / 288.0, 317.0 / 240.0, 23.0 / 30.0,
                                                  793.0 / 720.0, 157.0 / 160.0};
    for (std::size_t i = 0; i < 5; ++i) {
        w[i] = end[i];
        w[n_nodes - 1 - i] = end[i];
    }
    return w;
}

}  // namespace fracheat
