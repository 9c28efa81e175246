#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "reggraph/analysis.hpp"
#include "reggraph/linop.hpp"

namespace reggraph::ops {

// Grid layout: a c-channel field on an nx-by-ny grid is stored channel-planar,
// entry (c, i, j) -> c*nx*ny + i*ny + j. Difference operators use forward
// differences with the incomplete stencil positions left structurally zero, so
// kernels match the continuum ones exactly (constants for grad, rigid motions
// for symgrad, affine functions for the Hessian).

/// 1-D forward difference, (n-1) x n (no padding row).
inline linop grad_1d(int n) {
    if (n < 2) throw std::invalid_argument("grad_1d: need n >= 2");
    auto dom = space::scalar({n});
    auto cod = space::scalar({n - 1});
    auto fwd = [n](const vec& x) {
        vec y(n - 1);
        for (int i = 0; i < n - 1; ++i) y[i] = x[i + 1] - x[i];
        return y;
    };
    auto adj = [n](const vec& y) {
        vec x = vec::Zero(n);
        for (int i = 0; i < n - 1; ++i) {
            x[i] -= y[i];
            x[i + 1] += y[i];
        }
        return x;
    };
    return linop::matrix_free(dom, cod, fwd, adj, "grad");
}

/// 2-D gradient, scalar field on nx x ny -> 2-channel field on the same grid.
inline linop grad_2d(int nx, int ny) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("grad_2d: need nx, ny >= 2");
    auto dom = space::scalar({nx, ny});
    auto cod = space::vector({nx, ny}, 2);
    const long N = static_cast<long>(nx) * ny;
    auto at = [ny](int i, int j) { return static_cast<long>(i) * ny + j; };
    auto fwd = [=](const vec& x) {
        vec y = vec::Zero(2 * N);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) {
                if (i < nx - 1) y[at(i, j)] = x[at(i + 1, j)] - x[at(i, j)];
                if (j < ny - 1) y[N + at(i, j)] = x[at(i, j + 1)] - x[at(i, j)];
            }
        return y;
    };
    auto adj = [=](const vec& y) {
        vec x = vec::Zero(N);
        for (int i = 0; i < nx - 1; ++i)
            for (int j = 0; j < ny; ++j) {
                x[at(i, j)] -= y[at(i, j)];
                x[at(i + 1, j)] += y[at(i, j)];
            }
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny - 1; ++j) {
                x[at(i, j)] -= y[N + at(i, j)];
                x[at(i, j + 1)] += y[N + at(i, j)];
            }
        return x;
    };
    return linop::matrix_free(dom, cod, fwd, adj, "grad");
}

/// Symmetrized gradient of a 2-channel field; channels (xx, yy, xy). The
/// discrete kernel is exactly the rigid displacements (dimension 3).
inline linop symgrad_2d(int nx, int ny) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("symgrad_2d: need nx, ny >= 2");
    auto dom = space::vector({nx, ny}, 2);
    auto cod = space::sym_tensor({nx, ny}, 2);
    const long N = static_cast<long>(nx) * ny;
    auto at = [ny](int i, int j) { return static_cast<long>(i) * ny + j; };
    auto fwd = [=](const vec& w) {
        vec e = vec::Zero(3 * N);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) {
                if (i < nx - 1) e[at(i, j)] = w[at(i + 1, j)] - w[at(i, j)];
                if (j < ny - 1) e[N + at(i, j)] = w[N + at(i, j + 1)] - w[N + at(i, j)];
                if (i < nx - 1 && j < ny - 1)
                    e[2 * N + at(i, j)] = 0.5 * ((w[at(i, j + 1)] - w[at(i, j)]) +
                                                 (w[N + at(i + 1, j)] - w[N + at(i, j)]));
            }
        return e;
    };
    auto adj = [=](const vec& e) {
        vec w = vec::Zero(2 * N);
        for (int i = 0; i < nx - 1; ++i)
            for (int j = 0; j < ny; ++j) {
                w[at(i, j)] -= e[at(i, j)];
                w[at(i + 1, j)] += e[at(i, j)];
            }
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny - 1; ++j) {
                w[N + at(i, j)] -= e[N + at(i, j)];
                w[N + at(i, j + 1)] += e[N + at(i, j)];
            }
        for (int i = 0; i < nx - 1; ++i)
            for (int j = 0; j < ny - 1; ++j) {
                const double h = 0.5 * e[2 * N + at(i, j)];
                w[at(i, j)] -= h;
                w[at(i, j + 1)] += h;
                w[N + at(i, j)] -= h;
                w[N + at(i + 1, j)] += h;
            }
        return w;
    };
    return linop::matrix_free(dom, cod, fwd, adj, "symgrad");
}

/// 2-D Hessian, channels (xx, yy, xy); kernel = affine functions (dim 3).
inline linop hessian_2d(int nx, int ny) {
    if (nx < 3 || ny < 3) throw std::invalid_argument("hessian_2d: need nx, ny >= 3");
    auto dom = space::scalar({nx, ny});
    auto cod = space::sym_tensor({nx, ny}, 2);
    const long N = static_cast<long>(nx) * ny;
    auto at = [ny](int i, int j) { return static_cast<long>(i) * ny + j; };
    auto fwd = [=](const vec& x) {
        vec y = vec::Zero(3 * N);
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) {
                if (i < nx - 2) y[at(i, j)] = x[at(i + 2, j)] - 2 * x[at(i + 1, j)] + x[at(i, j)];
                if (j < ny - 2) y[N + at(i, j)] = x[at(i, j + 2)] - 2 * x[at(i, j + 1)] + x[at(i, j)];
                if (i < nx - 1 && j < ny - 1)
                    y[2 * N + at(i, j)] =
                        x[at(i + 1, j + 1)] - x[at(i + 1, j)] - x[at(i, j + 1)] + x[at(i, j)];
            }
        return y;
    };
    auto adj = [=](const vec& y) {
        vec x = vec::Zero(N);
        for (int i = 0; i < nx - 2; ++i)
            for (int j = 0; j < ny; ++j) {
                const double v = y[at(i, j)];
                x[at(i, j)] += v;
                x[at(i + 1, j)] -= 2 * v;
                x[at(i + 2, j)] += v;
            }
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny - 2; ++j) {
                const double v = y[N + at(i, j)];
                x[at(i, j)] += v;
                x[at(i, j + 1)] -= 2 * v;
                x[at(i, j + 2)] += v;
            }
        for (int i = 0; i < nx - 1; ++i)
            for (int j = 0; j < ny - 1; ++j) {
                const double v = y[2 * N + at(i, j)];
                x[at(i, j)] += v;
                x[at(i, j + 1)] -= v;
                x[at(i + 1, j)] -= v;
                x[at(i + 1, j + 1)] += v;
            }
        return x;
    };
    return linop::matrix_free(dom, cod, fwd, adj, "hessian");
}

/// k-fold forward difference in 1-D, n -> n-k.
inline linop grad_k_1d(int n, int k) {
    if (k < 1 || n <= k) throw std::invalid_argument("grad_k_1d: need n > k >= 1");
    std::vector<linop> chain;
    for (int level = 0; level < k; ++level) chain.push_back(grad_1d(n - (k - 1 - level)));
    return linop::composite(std::move(chain), "grad^" + std::to_string(k));
}

namespace detail {

inline void haar_forward_1d_inplace(double* x, int n) {
    std::vector<double> tmp(n);
    int len = n;
    const double s = 1.0 / std::sqrt(2.0);
    while (len > 1) {
        const int half = len / 2;
        for (int i = 0; i < half; ++i) {
            tmp[i] = s * (x[2 * i] + x[2 * i + 1]);
            tmp[half + i] = s * (x[2 * i] - x[2 * i + 1]);
        }
        for (int i = 0; i < len; ++i) x[i] = tmp[i];
        len = half;
    }
}

inline void haar_inverse_1d_inplace(double* x, int n) {
    std::vector<double> tmp(n);
    int len = 2;
    const double s = 1.0 / std::sqrt(2.0);
    while (len <= n) {
        const int half = len / 2;
        for (int i = 0; i < half; ++i) {
            tmp[2 * i] = s * (x[i] + x[half + i]);
            tmp[2 * i + 1] = s * (x[i] - x[half + i]);
        }
        for (int i = 0; i < len; ++i) x[i] = tmp[i];
        len *= 2;
    }
}

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace detail

/// Orthonormal Haar transform; 1-D (shape {n}) or separable 2-D (shape
/// {nx, ny}), all sizes powers of two. Parseval: ||W x|| = ||x||.
inline linop haar(const std::vector<int>& shape) {
    for (int s : shape)
        if (!detail::is_pow2(s)) throw std::invalid_argument("haar: shape entries must be powers of two");
    if (shape.size() == 1) {
        const int n = shape[0];
        auto dom = space::scalar({n});
        auto cod = space::coeffs(n);
        auto fwd = [n](const vec& x) {
            vec y = x;
            detail::haar_forward_1d_inplace(y.data(), n);
            return y;
        };
        auto adj = [n](const vec& y) {
            vec x = y;
            detail::haar_inverse_1d_inplace(x.data(), n);
            return x;
        };
        return linop::matrix_free(dom, cod, fwd, adj, "haar").with_norm_hint(1.0);
    }
    if (shape.size() == 2) {
        const int nx = shape[0], ny = shape[1];
        auto dom = space::scalar({nx, ny});
        auto cod = space::coeffs(nx * ny);
        auto fwd = [nx, ny](const vec& x) {
            mat m = Eigen::Map<const mat>(x.data(), ny, nx);  // column j = grid row i
            for (int c = 0; c < m.cols(); ++c) detail::haar_forward_1d_inplace(m.col(c).data(), ny);
            m.transposeInPlace();
            for (int c = 0; c < m.cols(); ++c) detail::haar_forward_1d_inplace(m.col(c).data(), nx);
            m.transposeInPlace();
            return vec(Eigen::Map<vec>(m.data(), nx * ny));
        };
        auto adj = [nx, ny](const vec& y) {
            mat m = Eigen::Map<const mat>(y.data(), ny, nx);
            m.transposeInPlace();
            for (int c = 0; c < m.cols(); ++c) detail::haar_inverse_1d_inplace(m.col(c).data(), nx);
            m.transposeInPlace();
            for (int c = 0; c < m.cols(); ++c) detail::haar_inverse_1d_inplace(m.col(c).data(), ny);
            return vec(Eigen::Map<vec>(m.data(), nx * ny));
        };
        return linop::matrix_free(dom, cod, fwd, adj, "haar").with_norm_hint(1.0);
    }
    throw std::invalid_argument("haar: only 1-D and 2-D shapes supported");
}

/// Orthonormal DCT-II transform (dense), 1-D or separable 2-D.
inline linop dct(const std::vector<int>& shape) {
    auto dct_matrix = [](int n) {
        mat c(n, n);
        for (int k = 0; k < n; ++k) {
            const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            for (int i = 0; i < n; ++i) c(k, i) = s * std::cos(M_PI * (2 * i + 1) * k / (2.0 * n));
        }
        return c;
    };
    if (shape.size() == 1) {
        const int n = shape[0];
        return linop::dense(space::scalar({n}), space::coeffs(n), dct_matrix(n), "dct").with_norm_hint(1.0);
    }
    if (shape.size() == 2) {
        const int nx = shape[0], ny = shape[1];
        const mat cx = dct_matrix(nx), cy = dct_matrix(ny);
        mat full = mat::Zero(nx * ny, nx * ny);
        // kron(cx, cy) under the row-major (i, j) -> i*ny + j layout
        for (int a = 0; a < nx; ++a)
            for (int b = 0; b < ny; ++b)
                for (int i = 0; i < nx; ++i)
                    for (int j = 0; j < ny; ++j)
                        full(static_cast<long>(a) * ny + b, static_cast<long>(i) * ny + j) = cx(a, i) * cy(b, j);
        return linop::dense(space::scalar({nx, ny}), space::coeffs(nx * ny), std::move(full), "dct")
            .with_norm_hint(1.0);
    }
    throw std::invalid_argument("dct: only 1-D and 2-D shapes supported");
}

/// 1-D convolution with clamped (replicate) boundary, built densely.
/// Kernel center at floor(len/2); normalized kernels preserve constants.
inline linop conv_1d(int n, const std::vector<double>& kernel) {
    if (kernel.empty()) throw std::invalid_argument("conv_1d: empty kernel");
    const int len = static_cast<int>(kernel.size());
    const int center = len / 2;
    mat a = mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int t = 0; t < len; ++t) {
            int src = i + t - center;
            src = std::min(std::max(src, 0), n - 1);
            a(i, src) += kernel[t];
        }
    return linop::dense(space::scalar({n}), space::scalar({n}), std::move(a), "conv");
}

/// Separable 2-D convolution with clamped boundary.
inline linop conv_2d(int nx, int ny, const std::vector<double>& kernel) {
    const mat ax = conv_1d(nx, kernel).to_dense();
    const mat ay = conv_1d(ny, kernel).to_dense();
    mat full(nx * ny, nx * ny);
    for (int a = 0; a < nx; ++a)
        for (int b = 0; b < ny; ++b)
            for (int i = 0; i < nx; ++i)
                for (int j = 0; j < ny; ++j)
                    full(static_cast<long>(a) * ny + b, static_cast<long>(i) * ny + j) = ax(a, i) * ay(b, j);
    return linop::dense(space::scalar({nx, ny}), space::scalar({nx, ny}), std::move(full), "conv");
}

inline std::vector<double> gaussian_kernel(double sigma, int width = 0) {
    if (sigma <= 0) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    if (width <= 0) width = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
    if (width % 2 == 0) ++width;
    std::vector<double> k(width);
    const int c = width / 2;
    double sum = 0.0;
    for (int i = 0; i < width; ++i) {
        k[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
        sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Subsampling operator keeping the given indices; adjoint is zero-fill.
inline linop mask(space dom, std::vector<long> keep) {
    for (long idx : keep)
        if (idx < 0 || idx >= dom.dim()) throw std::invalid_argument("mask: index out of range");
    auto cod = space::coeffs(static_cast<int>(keep.size()));
    const long n = dom.dim();
    auto fwd = [keep](const vec& x) {
        vec y(static_cast<long>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) y[i] = x[keep[i]];
        return y;
    };
    auto adj = [keep, n](const vec& y) {
        vec x = vec::Zero(n);
        for (std::size_t i = 0; i < keep.size(); ++i) x[keep[i]] = y[i];
        return x;
    };
    return linop::matrix_free(dom, cod, fwd, adj, "mask").with_norm_hint(1.0);
}

/// u -> (u, u) into a product space.
inline linop duplicate(const space& s) {
    auto cod = space::product({s, s});
    const long n = s.dim();
    auto fwd = [n](const vec& x) {
        vec y(2 * n);
        y.head(n) = x;
        y.tail(n) = x;
        return y;
    };
    auto adj = [n](const vec& y) { return vec(y.head(n) + y.tail(n)); };
    return linop::matrix_free(s, cod, fwd, adj, "duplicate");
}

/// Embeds a vector as part `index` of the product space (zeros elsewhere).
inline linop block_embed(const space& prod, std::size_t index) {
    if (prod.kind() != space_kind::product) throw std::invalid_argument("block_embed: codomain must be a product");
    const space part = prod.parts().at(index);
    const long off = prod.part_offset(index);
    const long total = prod.dim();
    const long n = part.dim();
    auto fwd = [off, total, n](const vec& x) {
        vec y = vec::Zero(total);
        y.segment(off, n) = x;
        return y;
    };
    auto adj = [off, n](const vec& y) { return vec(y.segment(off, n)); };
    return linop::matrix_free(part, prod, fwd, adj, "block_embed").with_norm_hint(1.0);
}

/// Selects part `index` out of a product space.
inline linop block_select(const space& prod, std::size_t index) {
    if (prod.kind() != space_kind::product) throw std::invalid_argument("block_select: domain must be a product");
    const space part = prod.parts().at(index);
    const long off = prod.part_offset(index);
    const long total = prod.dim();
    const long n = part.dim();
    auto fwd = [off, n](const vec& x) { return vec(x.segment(off, n)); };
    auto adj = [off, total, n](const vec& y) {
        vec x = vec::Zero(total);
        x.segment(off, n) = y;
        return x;
    };
    return linop::matrix_free(prod, part, fwd, adj, "block_select").with_norm_hint(1.0);
}

/// Stacks operators with a common domain into one map to the product of their
/// codomains.
inline linop stack(std::vector<linop> parts) {
    if (parts.empty()) throw std::invalid_argument("stack: no operators");
    std::vector<space> cods;
    for (std::size_t i = 1; i < parts.size(); ++i)
        if (!(parts[i].domain() == parts[0].domain()))
            throw dimension_error("stack: operators must share a domain");
    for (const auto& p : parts) cods.push_back(p.codomain());
    auto cod = space::product(cods);
    auto shared = std::make_shared<const std::vector<linop>>(std::move(parts));
    auto fwd = [shared, cod](const vec& x) {
        vec y(cod.dim());
        long off = 0;
        for (const auto& op : *shared) {
            y.segment(off, op.codomain().dim()) = op.apply(x);
            off += op.codomain().dim();
        }
        return y;
    };
    auto adj = [shared](const vec& y) {
        vec x = vec::Zero((*shared)[0].domain().dim());
        long off = 0;
        for (const auto& op : *shared) {
            x += op.apply_adjoint(y.segment(off, op.codomain().dim()));
            off += op.codomain().dim();
        }
        return x;
    };
    return linop::matrix_free((*shared)[0].domain(), cod, fwd, adj, "stack");
}

/// Applies an m x c matrix across the channels of a field at every grid point.
inline linop pointwise_matrix(const space& dom, const mat& a) {
    if (dom.kind() == space_kind::product) throw std::invalid_argument("pointwise_matrix: field spaces only");
    if (a.cols() != dom.channels()) throw dimension_error("pointwise_matrix: matrix columns != channels");
    const long N = dom.points();
    const int cin = dom.channels(), cout = static_cast<int>(a.rows());
    auto cod = space::vector(dom.shape(), cout);
    auto fwd = [a, N, cin, cout](const vec& x) {
        vec y = vec::Zero(cout * N);
        for (long p = 0; p < N; ++p)
            for (int r = 0; r < cout; ++r) {
                double s = 0;
                for (int c = 0; c < cin; ++c) s += a(r, c) * x[c * N + p];
                y[r * N + p] = s;
            }
        return y;
    };
    auto adj = [a, N, cin, cout](const vec& y) {
        vec x = vec::Zero(cin * N);
        for (long p = 0; p < N; ++p)
            for (int c = 0; c < cin; ++c) {
                double s = 0;
                for (int r = 0; r < cout; ++r) s += a(r, c) * y[r * N + p];
                x[c * N + p] = s;
            }
        return x;
    };
    return linop::matrix_free(dom, cod, fwd, adj, "pointwise_matrix");
}

/// grad on a shape, dispatching on dimension.
inline linop grad(const std::vector<int>& shape) {
    if (shape.size() == 1) return grad_1d(shape[0]);
    if (shape.size() == 2) return grad_2d(shape[0], shape[1]);
    throw std::invalid_argument("grad: only 1-D and 2-D shapes supported");
}

/// grad^k on a shape; 2-D supports k <= 2.
inline linop grad_k(const std::vector<int>& shape, int k) {
    if (shape.size() == 1) return grad_k_1d(shape[0], k);
    if (shape.size() == 2) {
        if (k == 1) return grad_2d(shape[0], shape[1]);
        if (k == 2) return hessian_2d(shape[0], shape[1]);
        throw std::invalid_argument("grad_k: 2-D supports k <= 2");
    }
    throw std::invalid_argument("grad_k: only 1-D and 2-D shapes supported");
}

/// Symmetrized gradient on the codomain of grad(shape); in 1-D this is the
/// plain derivative.
inline linop symgrad(const std::vector<int>& shape) {
    if (shape.size() == 1) return grad_1d(shape[0]);
    if (shape.size() == 2) return symgrad_2d(shape[0], shape[1]);
    throw std::invalid_argument("symgrad: only 1-D and 2-D shapes supported");
}

inline linop gaussian_blur(const std::vector<int>& shape, double sigma, int width = 0) {
    const auto k = gaussian_kernel(sigma, width);
    if (shape.size() == 1) return conv_1d(shape[0], k);
    if (shape.size() == 2) return conv_2d(shape[0], shape[1], k);
    throw std::invalid_argument("gaussian_blur: only 1-D and 2-D shapes supported");
}

}  // namespace reggraph::ops
