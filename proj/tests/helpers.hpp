#pragma once

#include <catch2/catch_amalgamated.hpp>

#include "reggraph/analysis.hpp"
#include "reggraph/linop.hpp"
#include "reggraph/rng.hpp"

namespace rgt {

using reggraph::linop;
using reggraph::mat;
using reggraph::vec;

/// Max relative adjoint defect |<Ax,y> - <x,A'y>| / (|x||y||A|) over probes.
inline double adjoint_defect(const linop& op, int probes = 100, std::uint64_t seed = 7) {
    reggraph::rng gen(seed);
    const double anorm = std::max(reggraph::operator_norm_value(op), 1e-30);
    double worst = 0.0;
    for (int k = 0; k < probes; ++k) {
        const vec x = gen.gaussian_vector(op.domain().dim());
        const vec y = gen.gaussian_vector(op.codomain().dim());
        const double lhs = op.apply(x).dot(y);
        const double rhs = x.dot(op.apply_adjoint(y));
        worst = std::max(worst, std::abs(lhs - rhs) / (x.norm() * y.norm() * anorm));
    }
    return worst;
}

inline vec from_list(std::initializer_list<double> xs) {
    vec v(static_cast<long>(xs.size()));
    long i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace rgt
