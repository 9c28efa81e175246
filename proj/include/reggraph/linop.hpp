#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reggraph/space.hpp"

namespace reggraph {

using vec = Eigen::VectorXd;
using mat = Eigen::MatrixXd;

/// Bounded linear operator between two spaces, with adjoint.
///
/// Realizations: a dense matrix, a composite chain, or a matrix-free pair of
/// forward/adjoint procedures. Immutable after construction.
class linop {
public:
    using apply_fn = std::function<vec(const vec&)>;

    linop() = default;

    static linop dense(space dom, space cod, mat a, std::string name = "dense") {
        if (a.cols() != dom.dim() || a.rows() != cod.dim())
            throw dimension_error("linop::dense: matrix shape does not match spaces");
        linop op(std::move(dom), std::move(cod), std::move(name));
        op.matrix_ = std::make_shared<const mat>(std::move(a));
        return op;
    }

    static linop matrix_free(space dom, space cod, apply_fn fwd, apply_fn adj, std::string name) {
        linop op(std::move(dom), std::move(cod), std::move(name));
        op.forward_ = std::move(fwd);
        op.adjoint_ = std::move(adj);
        return op;
    }

    /// Composite chain: ops.back() is applied first, ops.front() last.
    static linop composite(std::vector<linop> ops, std::string name = "composite") {
        if (ops.empty()) throw std::invalid_argument("linop::composite: empty chain");
        for (std::size_t i = 0; i + 1 < ops.size(); ++i)
            if (ops[i].domain().dim() != ops[i + 1].codomain().dim())
                throw dimension_error("linop::composite: chain spaces do not match at link " + std::to_string(i));
        linop op(ops.back().domain(), ops.front().codomain(), std::move(name));
        op.chain_ = std::make_shared<const std::vector<linop>>(std::move(ops));
        return op;
    }

    static linop identity(space s) {
        auto id = [](const vec& x) { return x; };
        return matrix_free(s, s, id, id, "identity").with_norm_hint(1.0);
    }

    static linop scaled_identity(space s, double c) {
        auto f = [c](const vec& x) { return vec(c * x); };
        return matrix_free(s, s, f, f, "scaled_identity").with_norm_hint(std::abs(c));
    }

    static linop zero(space dom, space cod) {
        long m = cod.dim();
        long n = dom.dim();
        return matrix_free(
                   std::move(dom), std::move(cod), [m](const vec&) { return vec(vec::Zero(m)); },
                   [n](const vec&) { return vec(vec::Zero(n)); }, "zero")
            .with_norm_hint(0.0);
    }

    const space& domain() const { return domain_; }
    const space& codomain() const { return codomain_; }
    const std::string& name() const { return name_; }
    std::optional<double> norm_hint() const { return norm_hint_; }

    linop with_norm_hint(double n) const {
        linop op = *this;
        op.norm_hint_ = n;
        return op;
    }

    linop scaled(double c) const {
        linop inner = *this;
        linop op(domain_, codomain_, name_ + "*" + std::to_string(c));
        op.forward_ = [inner, c](const vec& x) { return vec(c * inner.apply(x)); };
        op.adjoint_ = [inner, c](const vec& y) { return vec(c * inner.apply_adjoint(y)); };
        if (norm_hint_) op.norm_hint_ = std::abs(c) * *norm_hint_;
        return op;
    }

    vec apply(const vec& x) const {
        if (x.size() != domain_.dim())
            throw dimension_error("linop '" + name_ + "': input has dim " + std::to_string(x.size()) +
                                  ", domain has dim " + std::to_string(domain_.dim()));
        if (matrix_) return *matrix_ * x;
        if (chain_) {
            vec y = x;
            for (auto it = chain_->rbegin(); it != chain_->rend(); ++it) y = it->apply(y);
            return y;
        }
        return forward_(x);
    }

    vec apply_adjoint(const vec& y) const {
        if (y.size() != codomain_.dim())
            throw dimension_error("linop '" + name_ + "' adjoint: input has dim " + std::to_string(y.size()) +
                                  ", codomain has dim " + std::to_string(codomain_.dim()));
        if (matrix_) return matrix_->transpose() * y;
        if (chain_) {
            vec x = y;
            for (const auto& op : *chain_) x = op.apply_adjoint(x);
            return x;
        }
        return adjoint_(y);
    }

    /// Materialize as a dense matrix by applying to basis vectors.
    /// Refuses beyond max_side rows or columns (desk-scale contract).
    mat to_dense(long max_side = 4096) const {
        if (domain_.dim() > max_side || codomain_.dim() > max_side)
            throw std::invalid_argument("linop::to_dense: '" + name_ + "' exceeds the dense materialization limit");
        if (matrix_) return *matrix_;
        mat a(codomain_.dim(), domain_.dim());
        vec e = vec::Zero(domain_.dim());
        for (long j = 0; j < domain_.dim(); ++j) {
            e[j] = 1.0;
            a.col(j) = apply(e);
            e[j] = 0.0;
        }
        return a;
    }

private:
    linop(space dom, space cod, std::string name)
        : domain_(std::move(dom)), codomain_(std::move(cod)), name_(std::move(name)) {}

    space domain_;
    space codomain_;
    std::string name_;
    std::shared_ptr<const mat> matrix_;
    std::shared_ptr<const std::vector<linop>> chain_;
    apply_fn forward_;
    apply_fn adjoint_;
    std::optional<double> norm_hint_;
};

}  // namespace reggraph
