#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "reggraph/linop.hpp"
#include "reggraph/space.hpp"

namespace reggraph {

inline constexpr double inf = std::numeric_limits<double>::infinity();

enum class functional_kind {
    indicator_zero,   // I_{0}; splitting / constraint nodes
    group_l1,         // lambda * sum_p |v_p|_2 over channels (discrete measure norm)
    group_l1_aniso,   // lambda * sum_p |diag(beta) v_p|_2
    lq,               // (weight/q) * sum_i |v_i|^q, q in (1, inf)
    half_squared_l2,  // (weight/2) * ||v||^2
    indicator_ball,   // I{ |v_p|_2 <= gamma_p pointwise }
    composite_fg,     // two gauges on the two blocks of a product space
    zero,
};

/// Convex node functional with evaluation, proximal map, convex conjugate and
/// the conjugate's prox (through the Moreau identity). Immutable.
class functional {
public:
    /// Placeholder (zero functional on an empty space); assign before use.
    functional() : kind_(functional_kind::zero) {}

    static functional indicator_zero(space dom) { return functional(functional_kind::indicator_zero, std::move(dom)); }

    static functional group_l1(space dom, double lambda = 1.0) {
        functional f(functional_kind::group_l1, std::move(dom));
        f.weight_ = require_positive(lambda, "group_l1 weight");
        return f;
    }

    static functional group_l1_aniso(space dom, vec channel_weights, double lambda = 1.0) {
        if (channel_weights.size() != dom.channels())
            throw dimension_error("group_l1_aniso: one weight per channel required");
        for (long i = 0; i < channel_weights.size(); ++i)
            if (channel_weights[i] <= 0) throw std::invalid_argument("group_l1_aniso: weights must be positive");
        functional f(functional_kind::group_l1_aniso, std::move(dom));
        f.weight_ = require_positive(lambda, "group_l1_aniso weight");
        f.channel_weights_ = std::move(channel_weights);
        return f;
    }

    static functional lq(space dom, double q, double weight = 1.0) {
        if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("lq: q must be in (1, inf)");
        functional f(functional_kind::lq, std::move(dom));
        f.weight_ = require_positive(weight, "lq weight");
        f.q_ = q;
        return f;
    }

    static functional half_squared_l2(space dom, double weight = 1.0) {
        functional f(functional_kind::half_squared_l2, std::move(dom));
        f.weight_ = require_positive(weight, "half_squared_l2 weight");
        return f;
    }

    /// radius may have one entry (constant field) or one entry per grid point.
    static functional indicator_ball(space dom, vec radius) {
        const long pts = dom.points();
        if (radius.size() == 1) radius = vec::Constant(pts, radius[0]);
        if (radius.size() != pts) throw dimension_error("indicator_ball: radius field size != grid points");
        for (long i = 0; i < radius.size(); ++i)
            if (radius[i] < 0) throw std::invalid_argument("indicator_ball: radius must be nonnegative");
        functional f(functional_kind::indicator_ball, std::move(dom));
        f.radius_ = std::move(radius);
        return f;
    }

    static functional composite_fg(space dom, functional f0, functional f1) {
        if (dom.kind() != space_kind::product || dom.parts().size() != 2)
            throw std::invalid_argument("composite_fg: domain must be a two-part product space");
        for (const functional* c : {&f0, &f1}) {
            switch (c->kind()) {
                case functional_kind::group_l1:
                case functional_kind::lq:
                case functional_kind::half_squared_l2: break;
                default: throw std::invalid_argument("composite_fg: blocks must be group_l1, lq or half_squared_l2");
            }
        }
        if (!(f0.domain() == dom.parts()[0]) || !(f1.domain() == dom.parts()[1]))
            throw dimension_error("composite_fg: block domains do not match the product parts");
        functional f(functional_kind::composite_fg, std::move(dom));
        f.children_ = std::make_shared<const std::vector<functional>>(std::vector<functional>{std::move(f0), std::move(f1)});
        return f;
    }

    static functional zero(space dom) { return functional(functional_kind::zero, std::move(dom)); }

    functional_kind kind() const { return kind_; }
    const space& domain() const { return domain_; }
    double weight() const { return weight_; }
    double q() const { return q_; }
    const vec& radius() const { return radius_; }
    const vec& channel_weights() const { return channel_weights_; }
    const std::vector<functional>& children() const { return *children_; }

    /// True for kinds whose value enters the reported objective; indicator
    /// kinds are tracked as constraints instead.
    bool contributes_value() const {
        return kind_ != functional_kind::indicator_zero && kind_ != functional_kind::indicator_ball;
    }

    /// Same functional scaled by beta > 0 (exact for indicator kinds).
    functional scaled(double beta) const {
        if (beta <= 0) throw std::invalid_argument("functional::scaled: factor must be positive");
        functional f = *this;
        switch (kind_) {
            case functional_kind::group_l1:
            case functional_kind::group_l1_aniso:
            case functional_kind::lq:
            case functional_kind::half_squared_l2: f.weight_ = weight_ * beta; break;
            case functional_kind::composite_fg: {
                std::vector<functional> cs;
                for (const auto& c : children()) cs.push_back(c.scaled(beta));
                f.children_ = std::make_shared<const std::vector<functional>>(std::move(cs));
                break;
            }
            default: break;  // indicators and zero are scale invariant
        }
        return f;
    }

    double eval(const vec& v) const {
        check(v);
        switch (kind_) {
            case functional_kind::indicator_zero: return v.isZero(0.0) ? 0.0 : inf;
            case functional_kind::zero: return 0.0;
            case functional_kind::half_squared_l2: return 0.5 * weight_ * v.squaredNorm();
            case functional_kind::lq: {
                double s = 0;
                for (long i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]), q_);
                return weight_ / q_ * s;
            }
            case functional_kind::group_l1: {
                double s = 0;
                for_points(v, [&](long, double m) { s += m; });
                return weight_ * s;
            }
            case functional_kind::group_l1_aniso: {
                double s = 0;
                for_points_aniso(v, [&](long, double m) { s += m; });
                return weight_ * s;
            }
            case functional_kind::indicator_ball: {
                bool ok = true;
                for_points(v, [&](long p, double m) {
                    if (m > radius_[p] * (1 + 1e-12) + 1e-300) ok = false;
                });
                return ok ? 0.0 : inf;
            }
            case functional_kind::composite_fg: {
                const long n0 = children()[0].domain().dim();
                return children()[0].eval(v.head(n0)) + children()[1].eval(v.tail(v.size() - n0));
            }
        }
        return inf;
    }

    /// argmin_z 0.5 ||z - v||^2 + tau * f(z)
    vec prox(const vec& v, double tau) const {
        check(v);
        if (tau <= 0) throw std::invalid_argument("functional::prox: tau must be positive");
        switch (kind_) {
            case functional_kind::indicator_zero: return vec::Zero(v.size());
            case functional_kind::zero: return v;
            case functional_kind::half_squared_l2: return v / (1.0 + tau * weight_);
            case functional_kind::group_l1: {
                vec z = v;
                const double t = tau * weight_;
                scale_points(z, [&](long, double m) { return m > t ? 1.0 - t / m : 0.0; });
                return z;
            }
            case functional_kind::group_l1_aniso: return prox_aniso(v, tau);
            case functional_kind::lq: {
                vec z(v.size());
                for (long i = 0; i < v.size(); ++i) z[i] = lq_prox_scalar(v[i], tau * weight_, q_);
                return z;
            }
            case functional_kind::indicator_ball: {
                vec z = v;
                scale_points(z, [&](long p, double m) { return m > radius_[p] ? radius_[p] / m : 1.0; });
                return z;
            }
            case functional_kind::composite_fg: {
                const long n0 = children()[0].domain().dim();
                vec z(v.size());
                z.head(n0) = children()[0].prox(v.head(n0), tau);
                z.tail(v.size() - n0) = children()[1].prox(v.tail(v.size() - n0), tau);
                return z;
            }
        }
        throw std::logic_error("functional::prox: unhandled kind");
    }

    /// prox of sigma * f^* through the Moreau identity.
    vec prox_conjugate(const vec& v, double sigma) const {
        if (sigma <= 0) throw std::invalid_argument("functional::prox_conjugate: sigma must be positive");
        return v - sigma * prox(v / sigma, 1.0 / sigma);
    }

    /// f^*(y)
    double conjugate_eval(const vec& y) const {
        check(y);
        switch (kind_) {
            case functional_kind::indicator_zero: return 0.0;
            case functional_kind::zero: return y.isZero(0.0) ? 0.0 : inf;
            case functional_kind::half_squared_l2: return y.squaredNorm() / (2.0 * weight_);
            case functional_kind::lq: {
                const double qc = q_ / (q_ - 1.0);
                double s = 0;
                for (long i = 0; i < y.size(); ++i) s += std::pow(std::abs(y[i]), qc);
                return s / (qc * std::pow(weight_, qc - 1.0));
            }
            case functional_kind::group_l1: {
                bool ok = true;
                for_points(y, [&](long, double m) {
                    if (m > weight_ * (1 + 1e-12)) ok = false;
                });
                return ok ? 0.0 : inf;
            }
            case functional_kind::group_l1_aniso: {
                bool ok = true;
                for_points_aniso_inv(y, [&](long, double m) {
                    if (m > weight_ * (1 + 1e-12)) ok = false;
                });
                return ok ? 0.0 : inf;
            }
            case functional_kind::indicator_ball: {
                double s = 0;
                for_points(y, [&](long p, double m) { s += radius_[p] * m; });
                return s;
            }
            case functional_kind::composite_fg: {
                const long n0 = children()[0].domain().dim();
                return children()[0].conjugate_eval(y.head(n0)) +
                       children()[1].conjugate_eval(y.tail(y.size() - n0));
            }
        }
        return inf;
    }

    /// Smallest rho >= 1 with conjugate_eval(y / rho) finite; +inf when no
    /// scaling makes y dual-feasible (only the zero kind).
    double dual_feasibility_factor(const vec& y) const {
        switch (kind_) {
            case functional_kind::group_l1: {
                double rho = 1.0;
                for_points(y, [&](long, double m) { rho = std::max(rho, m / weight_); });
                return rho;
            }
            case functional_kind::group_l1_aniso: {
                double rho = 1.0;
                for_points_aniso_inv(y, [&](long, double m) { rho = std::max(rho, m / weight_); });
                return rho;
            }
            case functional_kind::zero: return y.isZero(1e-12 * (1.0 + y.size())) ? 1.0 : inf;
            case functional_kind::composite_fg: {
                const long n0 = children()[0].domain().dim();
                return std::max(children()[0].dual_feasibility_factor(y.head(n0)),
                                children()[1].dual_feasibility_factor(y.tail(y.size() - n0)));
            }
            default: return 1.0;
        }
    }

    /// Distance-style residual of indicator kinds (0 for finite kinds).
    double constraint_residual(const vec& v) const {
        switch (kind_) {
            case functional_kind::indicator_zero: return v.norm();
            case functional_kind::indicator_ball: {
                double s = 0;
                for_points(v, [&](long p, double m) {
                    const double ex = std::max(0.0, m - radius_[p]);
                    s += ex * ex;
                });
                return std::sqrt(s);
            }
            case functional_kind::composite_fg: {
                const long n0 = children()[0].domain().dim();
                const double a = children()[0].constraint_residual(v.head(n0));
                const double b = children()[1].constraint_residual(v.tail(v.size() - n0));
                return std::hypot(a, b);
            }
            default: return 0.0;
        }
    }

private:
    functional(functional_kind k, space dom) : kind_(k), domain_(std::move(dom)) {}

    static double require_positive(double v, const char* what) {
        if (!(v > 0)) throw std::invalid_argument(std::string(what) + " must be positive");
        return v;
    }

    void check(const vec& v) const {
        if (v.size() != domain_.dim())
            throw dimension_error("functional: argument has dim " + std::to_string(v.size()) +
                                  ", domain has dim " + std::to_string(domain_.dim()));
    }

    template <class F>
    void for_points(const vec& v, F&& fn) const {
        const long N = domain_.points();
        const int c = domain_.channels();
        for (long p = 0; p < N; ++p) {
            double s = 0;
            for (int ch = 0; ch < c; ++ch) s += v[ch * N + p] * v[ch * N + p];
            fn(p, std::sqrt(s));
        }
    }

    template <class F>
    void for_points_aniso(const vec& v, F&& fn) const {
        const long N = domain_.points();
        const int c = domain_.channels();
        for (long p = 0; p < N; ++p) {
            double s = 0;
            for (int ch = 0; ch < c; ++ch) {
                const double t = channel_weights_[ch] * v[ch * N + p];
                s += t * t;
            }
            fn(p, std::sqrt(s));
        }
    }

    template <class F>
    void for_points_aniso_inv(const vec& v, F&& fn) const {
        const long N = domain_.points();
        const int c = domain_.channels();
        for (long p = 0; p < N; ++p) {
            double s = 0;
            for (int ch = 0; ch < c; ++ch) {
                const double t = v[ch * N + p] / channel_weights_[ch];
                s += t * t;
            }
            fn(p, std::sqrt(s));
        }
    }

    template <class F>
    void scale_points(vec& v, F&& factor) const {
        const long N = domain_.points();
        const int c = domain_.channels();
        for (long p = 0; p < N; ++p) {
            double s = 0;
            for (int ch = 0; ch < c; ++ch) s += v[ch * N + p] * v[ch * N + p];
            const double f = factor(p, std::sqrt(s));
            if (f != 1.0)
                for (int ch = 0; ch < c; ++ch) v[ch * N + p] *= f;
        }
    }

    /// Scalar prox of x -> (t/q)|x|^q by safeguarded Newton on
    /// g(x) = x + t x^(q-1) - |v| over [0, |v|].
    static double lq_prox_scalar(double v, double t, double q) {
        const double a = std::abs(v);
        if (a == 0.0) return 0.0;
        double lo = 0.0, hi = a;
        double x = a / (1.0 + t);  // exact for q = 2
        for (int it = 0; it < 50; ++it) {
            const double xp = std::pow(x, q - 1.0);
            const double g = x + t * xp - a;
            if (std::abs(g) <= 1e-12 * (1.0 + a)) break;
            if (g > 0) hi = x;
            else lo = x;
            const double dg = 1.0 + t * (q - 1.0) * (x > 0 ? std::pow(x, q - 2.0) : 0.0);
            double next = x - g / dg;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            x = next;
        }
        return v >= 0 ? x : -x;
    }

    /// Per-point prox of z -> |diag(beta) z|_2: fixed-point in the magnitude
    /// m = |diag(beta) x|, solved by safeguarded Newton.
    vec prox_aniso(const vec& v, double tau) const {
        const long N = domain_.points();
        const int c = domain_.channels();
        const double t = tau * weight_;
        vec z = v;
        for (long p = 0; p < N; ++p) {
            double dual = 0;  // |B^{-1} v_p|
            double bz2 = 0;   // |B v_p|^2
            for (int ch = 0; ch < c; ++ch) {
                const double b = channel_weights_[ch];
                const double x = v[ch * N + p];
                dual += (x / b) * (x / b);
                bz2 += (b * x) * (b * x);
            }
            dual = std::sqrt(dual);
            if (dual <= t) {
                for (int ch = 0; ch < c; ++ch) z[ch * N + p] = 0.0;
                continue;
            }
            // solve m = |B x(m)| with x_ch = v_ch / (1 + t b_ch^2 / m)
            double m = std::sqrt(bz2);
            for (int it = 0; it < 50; ++it) {
                double s = 0, ds = 0;
                for (int ch = 0; ch < c; ++ch) {
                    const double b2 = channel_weights_[ch] * channel_weights_[ch];
                    const double den = 1.0 + t * b2 / m;
                    const double term = b2 * v[ch * N + p] * v[ch * N + p] / (den * den);
                    s += term;
                    ds += term * (2.0 * t * b2 / (m * m * den));
                }
                const double g = m - std::sqrt(s);
                if (std::abs(g) <= 1e-13 * (1.0 + m)) break;
                const double dg = 1.0 - 0.5 / std::sqrt(s) * ds;
                double next = m - g / dg;
                if (!(next > 0)) next = 0.5 * m;
                m = next;
            }
            for (int ch = 0; ch < c; ++ch) {
                const double b2 = channel_weights_[ch] * channel_weights_[ch];
                z[ch * N + p] = v[ch * N + p] / (1.0 + t * b2 / m);
            }
        }
        return z;
    }

    functional_kind kind_;
    space domain_;
    double weight_ = 1.0;
    double q_ = 2.0;
    vec channel_weights_;
    vec radius_;
    std::shared_ptr<const std::vector<functional>> children_;
};

}  // namespace reggraph
