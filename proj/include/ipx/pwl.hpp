#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace ipx {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Convex piecewise-linear function on [lo, hi], +inf outside.
class PwlConvex {
public:
    PwlConvex() = default;
    // Breakpoints must be strictly increasing and values finite. Convexity is
    // not enforced here; see convexified() and is_convex().
    PwlConvex(std::vector<double> xs, std::vector<double> ys);
    static PwlConvex point(double x, double y);
    static PwlConvex affine(double lo, double hi, double intercept, double slope);
    // Lower convex hull of the given points (duplicates in x keep the lowest y).
    static PwlConvex convexified(std::vector<double> xs, std::vector<double> ys);

    double lo() const { return xs_.front(); }
    double hi() const { return xs_.back(); }
    bool degenerate() const { return xs_.size() == 1; }
    bool empty() const { return xs_.empty(); }
    std::size_t size() const { return xs_.size(); }
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& ys() const { return ys_; }
    const std::vector<double>& slopes() const { return slopes_; }

    // Points within a relative 1e-12 of the domain are snapped onto it.
    bool contains(double x) const;
    double eval(double x) const;
    bool is_convex(double tol = 1e-9) const;

private:
    std::vector<double> xs_, ys_, slopes_;
};

struct MinResult {
    double x = 0.0;
    double value = 0.0;
};

// Minimum over [l,u] intersected with the domain; argmin is the midpoint of the
// minimizing face. Throws DomainError when the intersection is empty.
MinResult min_on_interval(const PwlConvex& f, double l, double u);

struct Support {
    double x = 0.0;   // minimizing breakpoint, smallest index on ties
    double c = 0.0;   // min_x f(x) - theta x
    std::size_t index = 0;
};
Support support_min(const PwlConvex& f, double theta);

struct HullChild {
    const PwlConvex* f = nullptr;
    double p = 1.0;
};

struct HullOptions {
    double dual_tol = 1e-12;  // relative tolerance on the mean constraint
    int max_iters = 200;
    // If finite, picks the dual multiplier closest to this value whenever the
    // maximizer is not unique (a = 0 vertices, domain edges).
    double theta_pref = std::numeric_limits<double>::quiet_NaN();
};

struct HullResult {
    double value = 0.0;
    std::vector<double> q;   // weights, sum to one
    std::vector<double> x;   // attaining points, mean equals the query point
    double theta = 0.0;      // selected dual multiplier (a subgradient of the hull)
    double theta_lo = 0.0;   // maximizer set of the dual is [theta_lo, theta_hi]
    double theta_hi = 0.0;
    double log_z = 0.0;      // ln sum_k p_k exp(-c_k(theta)/a), a > 0 only
    double mean_residual = 0.0;
    int iterations = 0;
};

// Generalized convex hull inf { sum q_k f_k(x_k) + a q_k ln(q_k/p_k) : sum q = 1, sum q x_k = x }.
// Construction precomputes what every query at the same children shares.
class Hull {
public:
    Hull() = default;
    Hull(std::vector<HullChild> children, double a);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double a() const { return a_; }
    std::size_t arity() const { return kids_.size(); }
    HullResult solve(double x, const HullOptions& opt = {}) const;

private:
    struct Vertex {
        double x, y;
        std::size_t child;
    };
    struct Probe {
        double log_z, h_lo, h_hi;
    };

    Probe probe(double theta, std::vector<double>& q, std::vector<std::size_t>& ilo,
                std::vector<std::size_t>& ihi) const;
    HullResult solve_entropic(double x, const HullOptions& opt) const;
    HullResult solve_classical(double x, const HullOptions& opt) const;
    HullResult solve_edge(double x, bool left, const HullOptions& opt) const;

    std::vector<HullChild> kids_;
    std::vector<double> logp_;
    std::vector<double> kinks_;     // sorted distinct slopes of all children
    std::vector<Vertex> vertices_;  // lower convex hull of all breakpoints (a = 0)
    double a_ = 0.0;
    double lo_ = 0.0, hi_ = 0.0;
};

inline HullResult hull_value(const std::vector<HullChild>& children, double a, double x,
                             const HullOptions& opt = {}) {
    return Hull(children, a).solve(x, opt);
}

// Upper approximation: hull values on n equal subintervals of [l,u]
// (intersected with the hull domain), linearly interpolated.
PwlConvex hull_upper(const std::vector<HullChild>& children, double a, double l, double u, int n,
                     const HullOptions& opt = {});

// Lower approximation from extended alternating chords; children must be minorants.
PwlConvex hull_lower(const std::vector<HullChild>& children, double a, double l, double u, int n,
                     const HullOptions& opt = {});

// Exact lower convex envelope (a = 0) restricted to [l,u].
PwlConvex convex_envelope(const std::vector<HullChild>& children, double l, double u);

// Test oracle: grid search over the weights with exact inner minimization.
double hull_brute_force(const std::vector<HullChild>& children, double a, double x, int resolution);

}  // namespace ipx
