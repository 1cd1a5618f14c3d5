#include "ipx/pwl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ipx/errors.hpp"

namespace ipx {

namespace {

double dom_tol(double lo, double hi) { return 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)}); }

double clamp_pref(double pref, double lo, double hi, double fallback) {
    if (std::isfinite(pref)) return std::clamp(pref, lo, hi);
    return fallback;
}

}  // namespace

PwlConvex::PwlConvex(std::vector<double> xs, std::vector<double> ys) : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.empty() || xs_.size() != ys_.size()) throw NumericError("piecewise-linear function needs matching nonempty breakpoints");
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        if (!std::isfinite(xs_[i]) || !std::isfinite(ys_[i])) throw NumericError("piecewise-linear function with non-finite breakpoint");
        if (i > 0 && !(xs_[i] > xs_[i - 1])) throw NumericError("breakpoints must be strictly increasing");
    }
    slopes_.resize(xs_.size() - 1);
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i) slopes_[i] = (ys_[i + 1] - ys_[i]) / (xs_[i + 1] - xs_[i]);
}

PwlConvex PwlConvex::point(double x, double y) { return PwlConvex({x}, {y}); }

PwlConvex PwlConvex::affine(double lo, double hi, double intercept, double slope) {
    if (hi <= lo) return point(lo, intercept + slope * lo);
    return PwlConvex({lo, hi}, {intercept + slope * lo, intercept + slope * hi});
}

PwlConvex PwlConvex::convexified(std::vector<double> xs, std::vector<double> ys) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return xs[i] < xs[j] || (xs[i] == xs[j] && ys[i] < ys[j]);
    });
    std::vector<double> hx, hy;
    for (std::size_t k : order) {
        const double px = xs[k], py = ys[k];
        if (!hx.empty() && hx.back() == px) continue;
        while (hx.size() >= 2) {
            const std::size_t n = hx.size();
            const double cross = (hx[n - 1] - hx[n - 2]) * (py - hy[n - 2]) - (hy[n - 1] - hy[n - 2]) * (px - hx[n - 2]);
            if (cross > 0.0) break;
            hx.pop_back();
            hy.pop_back();
        }
        hx.push_back(px);
        hy.push_back(py);
    }
    return PwlConvex(std::move(hx), std::move(hy));
}

bool PwlConvex::contains(double x) const {
    const double tol = dom_tol(lo(), hi());
    return x >= lo() - tol && x <= hi() + tol;
}

double PwlConvex::eval(double x) const {
    if (!contains(x)) return kInf;
    if (xs_.size() == 1) return ys_[0];
    x = std::clamp(x, lo(), hi());
    std::size_t i = std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin();
    i = std::min(std::max<std::size_t>(i, 1), xs_.size() - 1) - 1;
    return ys_[i] + slopes_[i] * (x - xs_[i]);
}

bool PwlConvex::is_convex(double tol) const {
    for (std::size_t i = 0; i + 1 < slopes_.size(); ++i)
        if (slopes_[i + 1] < slopes_[i] - tol * (1.0 + std::abs(slopes_[i]))) return false;
    return true;
}

MinResult min_on_interval(const PwlConvex& f, double l, double u) {
    double L = std::max(l, f.lo()), U = std::min(u, f.hi());
    if (L > U + dom_tol(L, U)) throw DomainError("minimization interval misses the function domain");
    if (U < L) U = L;
    std::vector<double> cx{L};
    for (double x : f.xs())
        if (x > L && x < U) cx.push_back(x);
    if (U > L) cx.push_back(U);
    std::vector<double> cy(cx.size());
    for (std::size_t i = 0; i < cx.size(); ++i) cy[i] = f.eval(cx[i]);
    const double best = *std::min_element(cy.begin(), cy.end());
    const double tie = 1e-14 * (1.0 + std::abs(best));
    std::size_t first = cx.size(), last = 0;
    for (std::size_t i = 0; i < cx.size(); ++i) {
        if (cy[i] <= best + tie) {
            first = std::min(first, i);
            last = i;
        }
    }
    const double xm = 0.5 * (cx[first] + cx[last]);
    return {xm, std::min(best, f.eval(xm))};
}

Support support_min(const PwlConvex& f, double theta) {
    const auto& s = f.slopes();
    const std::size_t i = std::lower_bound(s.begin(), s.end(), theta) - s.begin();
    return {f.xs()[i], f.ys()[i] - theta * f.xs()[i], i};
}

// ---------------------------------------------------------------------------

Hull::Hull(std::vector<HullChild> children, double a) : kids_(std::move(children)), a_(a) {
    if (kids_.empty()) throw NumericError("hull needs at least one child");
    if (!(a_ >= 0.0) || !std::isfinite(a_)) throw NumericError("entropy weight must be finite and nonnegative");
    lo_ = kInf;
    hi_ = -kInf;
    for (const auto& k : kids_) {
        if (k.f == nullptr || k.f->empty()) throw NumericError("hull child without function");
        if (!(k.p > 0.0)) throw NumericError("hull prior must be positive");
        logp_.push_back(std::log(k.p));
        lo_ = std::min(lo_, k.f->lo());
        hi_ = std::max(hi_, k.f->hi());
        kinks_.insert(kinks_.end(), k.f->slopes().begin(), k.f->slopes().end());
    }
    std::sort(kinks_.begin(), kinks_.end());
    kinks_.erase(std::unique(kinks_.begin(), kinks_.end()), kinks_.end());

    if (a_ == 0.0) {
        std::vector<Vertex> pts;
        for (std::size_t k = 0; k < kids_.size(); ++k)
            for (std::size_t i = 0; i < kids_[k].f->size(); ++i) pts.push_back({kids_[k].f->xs()[i], kids_[k].f->ys()[i], k});
        std::sort(pts.begin(), pts.end(), [](const Vertex& u, const Vertex& v) {
            return u.x < v.x || (u.x == v.x && (u.y < v.y || (u.y == v.y && u.child < v.child)));
        });
        for (const auto& p : pts) {
            if (!vertices_.empty() && vertices_.back().x == p.x) continue;
            while (vertices_.size() >= 2) {
                const auto& o = vertices_[vertices_.size() - 2];
                const auto& m = vertices_.back();
                const double cross = (m.x - o.x) * (p.y - o.y) - (m.y - o.y) * (p.x - o.x);
                if (cross > 0.0) break;
                vertices_.pop_back();
            }
            vertices_.push_back(p);
        }
    }
}

HullResult Hull::solve(double x, const HullOptions& opt) const {
    const double tol = dom_tol(lo_, hi_);
    if (!(x >= lo_ - tol && x <= hi_ + tol))
        throw DomainError("hull query " + std::to_string(x) + " outside [" + std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
    x = std::clamp(x, lo_, hi_);
    HullResult r;
    if (a_ == 0.0) r = solve_classical(x, opt);
    else if (x <= lo_) r = solve_edge(x, true, opt);
    else if (x >= hi_) r = solve_edge(x, false, opt);
    else r = solve_entropic(x, opt);

    double total = 0.0;
    for (auto& q : r.q) {
        if (q < 1e-300) q = 0.0;
        total += q;
    }
    for (auto& q : r.q) q /= total;
    double mean = 0.0;
    for (std::size_t k = 0; k < r.q.size(); ++k) mean += r.q[k] * r.x[k];
    r.mean_residual = std::abs(mean - x);
    return r;
}

Hull::Probe Hull::probe(double theta, std::vector<double>& q, std::vector<std::size_t>& ilo,
                        std::vector<std::size_t>& ihi) const {
    const std::size_t m = kids_.size();
    double emax = -kInf;
    for (std::size_t k = 0; k < m; ++k) {
        const auto& s = kids_[k].f->slopes();
        ilo[k] = std::lower_bound(s.begin(), s.end(), theta) - s.begin();
        ihi[k] = std::upper_bound(s.begin(), s.end(), theta) - s.begin();
        const double c = kids_[k].f->ys()[ilo[k]] - theta * kids_[k].f->xs()[ilo[k]];
        q[k] = logp_[k] - c / a_;
        emax = std::max(emax, q[k]);
    }
    double sum = 0.0;
    for (auto& e : q) {
        e = std::exp(e - emax);
        sum += e;
    }
    Probe pr{emax + std::log(sum), 0.0, 0.0};
    for (std::size_t k = 0; k < m; ++k) {
        q[k] /= sum;
        pr.h_lo += q[k] * kids_[k].f->xs()[ilo[k]];
        pr.h_hi += q[k] * kids_[k].f->xs()[ihi[k]];
    }
    return pr;
}

HullResult Hull::solve_entropic(double x, const HullOptions& opt) const {
    const std::size_t m = kids_.size();
    std::vector<double> q(m);
    std::vector<std::size_t> ilo(m), ihi(m);
    HullResult r;

    // Locate the smallest kink whose right limit of the mean reaches x.
    std::size_t lo_j = 0, hi_j = kinks_.size();
    while (lo_j < hi_j) {
        const std::size_t mid = (lo_j + hi_j) / 2;
        if (probe(kinks_[mid], q, ilo, ihi).h_hi >= x) hi_j = mid;
        else lo_j = mid + 1;
        ++r.iterations;
    }
    const std::size_t j = lo_j;
    if (j < kinks_.size()) {
        const double theta = kinks_[j];
        const Probe pr = probe(theta, q, ilo, ihi);
        if (pr.h_lo <= x) {
            const double lam = pr.h_hi > pr.h_lo ? std::clamp((x - pr.h_lo) / (pr.h_hi - pr.h_lo), 0.0, 1.0) : 0.0;
            r.q = q;
            r.x.resize(m);
            for (std::size_t k = 0; k < m; ++k) {
                const auto& xs = kids_[k].f->xs();
                r.x[k] = xs[ilo[k]] + lam * (xs[ihi[k]] - xs[ilo[k]]);
            }
            r.theta = r.theta_lo = r.theta_hi = theta;
            r.log_z = pr.log_z;
            r.value = theta * x - a_ * pr.log_z;
            return r;
        }
    }

    // Smooth stretch between consecutive kinks: argmins are fixed breakpoints.
    double ta = j > 0 ? kinks_[j - 1] : -kInf;
    double tb = j < kinks_.size() ? kinks_[j] : kInf;
    double rep = 0.0;
    if (std::isfinite(ta) && std::isfinite(tb)) rep = 0.5 * (ta + tb);
    else if (std::isfinite(tb)) rep = tb - 1.0;
    else if (std::isfinite(ta)) rep = ta + 1.0;
    std::vector<double> z(m), y(m);
    for (std::size_t k = 0; k < m; ++k) {
        const auto& s = kids_[k].f->slopes();
        const std::size_t i = std::lower_bound(s.begin(), s.end(), rep) - s.begin();
        z[k] = kids_[k].f->xs()[i];
        y[k] = kids_[k].f->ys()[i];
    }
    double log_z = 0.0, var = 0.0;
    auto mean_at = [&](double theta) {
        double emax = -kInf;
        for (std::size_t k = 0; k < m; ++k) {
            q[k] = logp_[k] - (y[k] - theta * z[k]) / a_;
            emax = std::max(emax, q[k]);
        }
        double sum = 0.0;
        for (auto& e : q) {
            e = std::exp(e - emax);
            sum += e;
        }
        log_z = emax + std::log(sum);
        double h = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            q[k] /= sum;
            h += q[k] * z[k];
        }
        var = 0.0;
        for (std::size_t k = 0; k < m; ++k) var += q[k] * (z[k] - h) * (z[k] - h);
        return h;
    };

    // Finite bracket, expanding geometrically into an unbounded side.
    auto expand = [&](double start, double dir) {
        double step = std::max(1.0, std::abs(start));
        double t = start + dir * step;
        for (int it = 0; it < 2100; ++it) {
            const double h = mean_at(t);
            ++r.iterations;
            if ((dir < 0 && h < x) || (dir > 0 && h > x)) return t;
            if (dir < 0) tb = t;
            else ta = t;
            step *= 2.0;
            t += dir * step;
            if (!std::isfinite(t)) break;
        }
        throw NumericError("hull dual bracket did not close");
    };
    if (!std::isfinite(ta) && !std::isfinite(tb)) {
        const double h0 = mean_at(0.0);
        if (h0 < x) ta = 0.0;
        else if (h0 > x) tb = 0.0;
        else ta = tb = 0.0;
    }
    if (!std::isfinite(ta)) ta = expand(tb, -1.0);
    if (!std::isfinite(tb)) tb = expand(ta, 1.0);

    const double tolx = opt.dual_tol * std::max(1.0, std::abs(x));
    double theta = 0.5 * (ta + tb);
    double h = mean_at(theta);
    for (int it = 0; it < opt.max_iters; ++it) {
        ++r.iterations;
        const double g = h - x;
        if (std::abs(g) <= tolx) break;
        if (g < 0.0) ta = theta;
        else tb = theta;
        double next = var > 0.0 ? theta - g * a_ / var : 0.5 * (ta + tb);
        if (!(next > ta && next < tb)) next = 0.5 * (ta + tb);
        if (next == theta || tb - ta <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(theta))) break;
        theta = next;
        h = mean_at(theta);
    }
    r.q = q;
    r.x = z;
    r.theta = r.theta_lo = r.theta_hi = theta;
    r.log_z = log_z;
    r.value = theta * x - a_ * log_z;
    return r;
}

HullResult Hull::solve_edge(double x, bool left, const HullOptions& opt) const {
    const std::size_t m = kids_.size();
    HullResult r;
    r.q.assign(m, 0.0);
    r.x.resize(m);
    std::vector<double> e(m, -kInf);
    double emax = -kInf;
    bool all_active = true;
    double bound = left ? kInf : -kInf;
    for (std::size_t k = 0; k < m; ++k) {
        const PwlConvex& f = *kids_[k].f;
        const double end = left ? f.lo() : f.hi();
        r.x[k] = end;
        if (end != x) {
            all_active = false;
            continue;
        }
        e[k] = logp_[k] - f.eval(x) / a_;
        emax = std::max(emax, e[k]);
        if (!f.slopes().empty()) bound = left ? std::min(bound, f.slopes().front()) : std::max(bound, f.slopes().back());
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        if (e[k] == -kInf) continue;
        r.q[k] = std::exp(e[k] - emax);
        sum += r.q[k];
    }
    for (auto& q : r.q) q /= sum;
    r.log_z = emax + std::log(sum);
    r.value = -a_ * r.log_z;
    if (lo_ == hi_) {
        r.theta_lo = -kInf;
        r.theta_hi = kInf;
    } else if (all_active) {
        r.theta_lo = left ? -kInf : bound;
        r.theta_hi = left ? bound : kInf;
    } else {
        r.theta_lo = r.theta_hi = left ? -kInf : kInf;
    }
    const double fallback = std::isfinite(r.theta_hi) ? r.theta_hi : (std::isfinite(r.theta_lo) ? r.theta_lo : (lo_ == hi_ ? 0.0 : r.theta_hi));
    r.theta = clamp_pref(opt.theta_pref, r.theta_lo, r.theta_hi, fallback);
    return r;
}

HullResult Hull::solve_classical(double x, const HullOptions& opt) const {
    const std::size_t m = kids_.size();
    const std::size_t nv = vertices_.size();
    HullResult r;
    r.q.assign(m, 0.0);
    r.x.resize(m);
    const double tol = 1e-14 * std::max({1.0, std::abs(lo_), std::abs(hi_)});
    std::size_t i = std::upper_bound(vertices_.begin(), vertices_.end(), x,
                                     [](double v, const Vertex& w) { return v < w.x; }) - vertices_.begin();
    i = i == 0 ? 0 : i - 1;
    std::size_t vtx = nv;
    if (std::abs(x - vertices_[i].x) <= tol) vtx = i;
    else if (i + 1 < nv && std::abs(x - vertices_[i + 1].x) <= tol) vtx = i + 1;

    if (vtx < nv) {
        const Vertex& v = vertices_[vtx];
        r.theta_lo = vtx > 0 ? (v.y - vertices_[vtx - 1].y) / (v.x - vertices_[vtx - 1].x) : -kInf;
        r.theta_hi = vtx + 1 < nv ? (vertices_[vtx + 1].y - v.y) / (vertices_[vtx + 1].x - v.x) : kInf;
        double fallback = 0.0;
        if (std::isfinite(r.theta_lo) && std::isfinite(r.theta_hi)) fallback = 0.5 * (r.theta_lo + r.theta_hi);
        else if (std::isfinite(r.theta_lo)) fallback = r.theta_lo;
        else if (std::isfinite(r.theta_hi)) fallback = r.theta_hi;
        r.theta = clamp_pref(opt.theta_pref, r.theta_lo, r.theta_hi, fallback);
        r.value = v.y;
        r.q[v.child] = 1.0;
        r.x[v.child] = x;
    } else {
        const Vertex& A = vertices_[i];
        const Vertex& B = vertices_[i + 1];
        const double lam = (x - A.x) / (B.x - A.x);
        r.theta = r.theta_lo = r.theta_hi = (B.y - A.y) / (B.x - A.x);
        r.value = A.y + lam * (B.y - A.y);
        if (A.child == B.child) {
            r.q[A.child] = 1.0;
            r.x[A.child] = x;
        } else {
            r.q[A.child] = 1.0 - lam;
            r.q[B.child] = lam;
            r.x[A.child] = A.x;
            r.x[B.child] = B.x;
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        if (r.q[k] > 0.0) continue;
        const PwlConvex& f = *kids_[k].f;
        if (std::isfinite(r.theta)) r.x[k] = support_min(f, r.theta).x;
        else r.x[k] = r.theta < 0 ? f.lo() : f.hi();
    }
    return r;
}

// ---------------------------------------------------------------------------

namespace {

struct Interval {
    double l, u;
    bool point;
};

Interval restrict_to(const Hull& h, double l, double u) {
    double L = std::max(l, h.lo()), U = std::min(u, h.hi());
    if (L > U + dom_tol(L, U)) throw DomainError("evaluation interval [" + std::to_string(l) + ", " + std::to_string(u) + "] misses the hull domain");
    if (U < L) U = L;
    return {L, U, U - L <= 1e-13 * std::max(1.0, std::abs(U))};
}

std::vector<double> grid(double l, double u, int n) {
    std::vector<double> xs(n + 1);
    for (int i = 0; i < n; ++i) xs[i] = l + (u - l) * (static_cast<double>(i) / n);
    xs[n] = u;
    return xs;
}

}  // namespace

PwlConvex hull_upper(const std::vector<HullChild>& children, double a, double l, double u, int n, const HullOptions& opt) {
    if (n < 1) throw InputError("grid needs at least one subinterval");
    const Hull h(children, a);
    const Interval iv = restrict_to(h, l, u);
    if (iv.point) return PwlConvex::point(iv.l, h.solve(iv.l, opt).value);
    const auto xs = grid(iv.l, iv.u, n);
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = h.solve(xs[i], opt).value;
    return PwlConvex::convexified(xs, ys);
}

PwlConvex hull_lower(const std::vector<HullChild>& children, double a, double l, double u, int n, const HullOptions& opt) {
    if (n < 1) throw InputError("grid needs at least one subinterval");
    const Hull h(children, a);
    const Interval iv = restrict_to(h, l, u);
    if (iv.point) return PwlConvex::point(iv.l, h.solve(iv.l, opt).value);

    // Points x_1..x_N on [l,u] (N = n+1), indices shifted by one for the anchors.
    const auto g = grid(iv.l, iv.u, n);
    const std::size_t N = g.size();
    const double step = (iv.u - iv.l) / n;
    std::vector<HullResult> res(N);
    for (std::size_t i = 0; i < N; ++i) res[i] = h.solve(g[i], opt);

    struct Line {
        double m, px, py;
        double at(double x) const { return py + m * (x - px); }
    };
    auto chord = [](double x0, double y0, double x1, double y1) { return Line{(y1 - y0) / (x1 - x0), x0, y0}; };
    auto tangent = [&](bool left) -> Line {
        // Supporting line from the dual multiplier; nearest point with a finite one.
        const std::size_t first = left ? 0 : N - 1, second = left ? 1 : N - 2;
        for (std::size_t idx : {first, second})
            if (std::isfinite(res[idx].theta)) return {res[idx].theta, g[idx], res[idx].value};
        const double xm = 0.5 * (iv.l + iv.u);
        const HullResult rm = h.solve(xm, opt);
        if (!std::isfinite(rm.theta)) throw DomainError("no finite supporting slope for the lower approximation");
        return {rm.theta, xm, rm.value};
    };
    auto anchor = [&](bool left) -> double {
        const double edge = left ? h.lo() : h.hi();
        const double end = left ? iv.l : iv.u;
        const double far = left ? end - step : end + step;
        if (left ? far > edge : far < edge) return far;
        if (left ? end > edge : end < edge) return 0.5 * (edge + end);
        return std::numeric_limits<double>::quiet_NaN();
    };

    std::vector<Line> lines(N + 1);
    const double xl = anchor(true), xr = anchor(false);
    lines[0] = std::isnan(xl) ? tangent(true) : chord(xl, h.solve(xl, opt).value, g[0], res[0].value);
    for (std::size_t j = 1; j < N; ++j) lines[j] = chord(g[j - 1], res[j - 1].value, g[j], res[j].value);
    lines[N] = std::isnan(xr) ? tangent(false) : chord(g[N - 1], res[N - 1].value, xr, h.solve(xr, opt).value);

    std::vector<double> xs{iv.l}, ys{lines[0].at(iv.l)};
    for (std::size_t l = 1; l < N; ++l) {
        // Intersection of lines l-1 and l+1, which sits on [x_l, x_{l+1}].
        const Line& A = lines[l - 1];
        const Line& B = lines[l + 1];
        double xc;
        if (std::abs(A.m - B.m) <= 1e-14 * (1.0 + std::abs(A.m))) {
            xc = 0.5 * (g[l - 1] + g[l]);
        } else {
            const double ca = A.py - A.m * A.px, cb = B.py - B.m * B.px;
            xc = (cb - ca) / (A.m - B.m);
        }
        xc = std::clamp(xc, g[l - 1], g[l]);
        xs.push_back(xc);
        ys.push_back(std::min(A.at(xc), B.at(xc)));
    }
    xs.push_back(iv.u);
    ys.push_back(lines[N].at(iv.u));
    return PwlConvex::convexified(xs, ys);
}

PwlConvex convex_envelope(const std::vector<HullChild>& children, double l, double u) {
    const Hull h(children, 0.0);
    const Interval iv = restrict_to(h, l, u);
    if (iv.point) return PwlConvex::point(iv.l, h.solve(iv.l).value);
    std::vector<double> xs{iv.l}, ys{h.solve(iv.l).value};
    // Interior vertices of the envelope come from the children's breakpoints.
    std::vector<double> cand;
    for (const auto& c : children)
        for (double x : c.f->xs())
            if (x > iv.l && x < iv.u) cand.push_back(x);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (double x : cand) {
        xs.push_back(x);
        ys.push_back(h.solve(x).value);
    }
    xs.push_back(iv.u);
    ys.push_back(h.solve(iv.u).value);
    return PwlConvex::convexified(xs, ys);
}

// ---------------------------------------------------------------------------

namespace {

// min sum q_k f_k(x_k) subject to sum q_k x_k = x, by merging scaled segments.
double inf_convolution(const std::vector<HullChild>& kids, const std::vector<double>& q, double x) {
    double z = 0.0, v = 0.0;
    std::vector<std::pair<double, double>> segs;  // (slope, length)
    for (std::size_t k = 0; k < kids.size(); ++k) {
        if (q[k] <= 0.0) continue;
        const PwlConvex& f = *kids[k].f;
        z += q[k] * f.lo();
        v += q[k] * f.ys().front();
        for (std::size_t i = 0; i + 1 < f.size(); ++i) segs.emplace_back(f.slopes()[i], q[k] * (f.xs()[i + 1] - f.xs()[i]));
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(x));
    if (x < z - tol) return kInf;
    std::sort(segs.begin(), segs.end());
    for (const auto& [s, len] : segs) {
        if (x <= z) break;
        const double d = std::min(len, x - z);
        v += s * d;
        z += d;
    }
    if (x > z + tol) return kInf;
    return v;
}

double mixture_cost(const std::vector<HullChild>& kids, double a, const std::vector<double>& q, double x) {
    double v = inf_convolution(kids, q, x);
    if (!std::isfinite(v)) return v;
    for (std::size_t k = 0; k < kids.size(); ++k)
        if (q[k] > 0.0) v += a * q[k] * std::log(q[k] / kids[k].p);
    return v;
}

template <class F>
double golden_min(F f, double lo, double hi) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
    double fc = f(c), fd = f(d);
    double best = std::min({fc, fd, f(lo), f(hi)});
    for (int it = 0; it < 90 && hi - lo > 1e-13; ++it) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
        best = std::min({best, fc, fd});
    }
    return best;
}

}  // namespace

double hull_brute_force(const std::vector<HullChild>& children, double a, double x, int resolution) {
    const std::size_t m = children.size();
    if (m == 0 || m > 3) throw InputError("brute-force hull supports one to three children");
    if (m == 1) return children[0].f->eval(x) - a * std::log(children[0].p);

    // The cost is jointly convex in the weights, and the weights compatible with
    // the mean x form a polytope; each coordinate is searched over its exact
    // feasible interval, so golden section never meets an infeasible point.
    std::vector<double> lo(m), hi(m);
    for (std::size_t k = 0; k < m; ++k) {
        lo[k] = children[k].f->lo();
        hi[k] = children[k].f->hi();
    }
    // Range of q_j (the last weight takes the rest) keeping x inside the mean span.
    auto last_range = [&](double fixed_q, double fixed_lo, double fixed_hi, std::size_t j, double& qa, double& qb) {
        const std::size_t r = m - 1;
        const double rest = 1.0 - fixed_q;
        qa = 0.0;
        qb = rest;
        // fixed_lo + q lo_j + (rest - q) lo_r <= x <= fixed_hi + q hi_j + (rest - q) hi_r
        auto cut = [&](double c0, double c1, bool le) {  // c0 + c1 q <= 0 when le
            if (!le) {
                c0 = -c0;
                c1 = -c1;
            }
            if (c1 > 0.0) qb = std::min(qb, -c0 / c1);
            else if (c1 < 0.0) qa = std::max(qa, -c0 / c1);
            else if (c0 > 1e-12 * std::max(1.0, std::abs(x))) qb = -1.0;
        };
        cut(fixed_lo + rest * lo[r] - x, lo[j] - lo[r], true);
        cut(fixed_hi + rest * hi[r] - x, hi[j] - hi[r], false);
        return qa <= qb;
    };
    if (m == 2) {
        double qa, qb;
        if (!last_range(0.0, 0.0, 0.0, 0, qa, qb)) return kInf;
        return golden_min([&](double q) { return mixture_cost(children, a, {q, 1.0 - q}, x); }, qa, qb);
    }
    auto inner = [&](double q1) {
        double qa, qb;
        if (!last_range(q1, q1 * lo[0], q1 * hi[0], 1, qa, qb)) return kInf;
        return golden_min([&](double q2) { return mixture_cost(children, a, {q1, q2, std::max(0.0, 1.0 - q1 - q2)}, x); },
                          qa, qb);
    };
    auto feasible = [&](double q1) {
        double qa, qb;
        return last_range(q1, q1 * lo[0], q1 * hi[0], 1, qa, qb);
    };
    // Feasible q1 form an interval; bracket it on a grid and sharpen the ends.
    const int r = std::max(resolution, 100);
    int first = -1, last = -1;
    for (int i = 0; i <= r; ++i) {
        if (!feasible(static_cast<double>(i) / r)) continue;
        if (first < 0) first = i;
        last = i;
    }
    if (first < 0) return kInf;
    auto sharpen = [&](double in, double out) {
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (in + out);
            (feasible(mid) ? in : out) = mid;
        }
        return in;
    };
    const double q1a = first > 0 ? sharpen(static_cast<double>(first) / r, static_cast<double>(first - 1) / r) : 0.0;
    const double q1b = last < r ? sharpen(static_cast<double>(last) / r, static_cast<double>(last + 1) / r) : 1.0;
    return golden_min(inner, q1a, q1b);
}

}  // namespace ipx
