#pragma once

#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace reggraph {

/// Thrown on shape/dimension violations; carries the offending context.
class dimension_error : public std::invalid_argument {
public:
    explicit dimension_error(const std::string& what) : std::invalid_argument(what) {}
};

enum class space_kind {
    scalar_field,
    vector_field,
    sym_tensor_field,
    coeff_seq,
    product,
};

/// Number of independent entries of a symmetric order-k tensor in d variables,
/// i.e. binom(k + d - 1, k).
inline int sym_tensor_channels(int order, int d) {
    if (order < 1 || d < 1) throw std::invalid_argument("sym_tensor_channels: order and d must be >= 1");
    long long num = 1, den = 1;
    for (int i = 1; i <= order; ++i) {
        num *= (d - 1 + i);
        den *= i;
    }
    return static_cast<int>(num / den);
}

/// A finite-dimensional real vector space attached to a node or edge.
///
/// Field-like kinds store values channel-planar: a c-channel field on N grid
/// points is a vector of length c*N ordered [channel 0 at all points, channel 1
/// at all points, ...].
class space {
public:
    space() = default;

    static space scalar(std::vector<int> shape, std::string id = "") {
        return space(space_kind::scalar_field, std::move(shape), 1, std::move(id));
    }
    static space vector(std::vector<int> shape, int channels, std::string id = "") {
        return space(space_kind::vector_field, std::move(shape), channels, std::move(id));
    }
    static space sym_tensor(std::vector<int> shape, int order, std::string id = "") {
        const int d = static_cast<int>(shape.size());
        space s(space_kind::sym_tensor_field, std::move(shape), sym_tensor_channels(order, d), std::move(id));
        s.tensor_order_ = order;
        return s;
    }
    static space coeffs(int length, std::string id = "") {
        return space(space_kind::coeff_seq, {length}, 1, std::move(id));
    }
    static space product(std::vector<space> parts, std::string id = "") {
        space s;
        s.kind_ = space_kind::product;
        s.id_ = std::move(id);
        s.parts_ = std::move(parts);
        s.channels_ = 1;
        s.dim_ = 0;
        for (const auto& p : s.parts_) s.dim_ += p.dim();
        if (s.dim_ <= 0) throw std::invalid_argument("space::product: empty product");
        return s;
    }

    space_kind kind() const { return kind_; }
    const std::string& id() const { return id_; }
    const std::vector<int>& shape() const { return shape_; }
    int channels() const { return channels_; }
    int tensor_order() const { return tensor_order_; }
    const std::vector<space>& parts() const { return parts_; }

    /// Grid points per channel (product of shape entries); 0 for products.
    long points() const {
        if (kind_ == space_kind::product) return 0;
        return std::accumulate(shape_.begin(), shape_.end(), 1L, std::multiplies<long>());
    }

    long dim() const { return dim_; }

    /// Offset of part i inside a product-space vector.
    long part_offset(std::size_t i) const {
        if (kind_ != space_kind::product || i >= parts_.size())
            throw std::invalid_argument("space::part_offset: not a product space or index out of range");
        long off = 0;
        for (std::size_t j = 0; j < i; ++j) off += parts_[j].dim();
        return off;
    }

    bool compatible_with(const space& other) const { return dim_ == other.dim_; }

    friend bool operator==(const space& a, const space& b) {
        return a.kind_ == b.kind_ && a.shape_ == b.shape_ && a.channels_ == b.channels_ && a.dim_ == b.dim_;
    }

private:
    space(space_kind kind, std::vector<int> shape, int channels, std::string id)
        : kind_(kind), id_(std::move(id)), shape_(std::move(shape)), channels_(channels) {
        for (int s : shape_)
            if (s <= 0) throw std::invalid_argument("space: shape entries must be positive");
        if (channels_ <= 0) throw std::invalid_argument("space: channels must be positive");
        dim_ = channels_ * points();
        if (dim_ <= 0) throw std::invalid_argument("space: dimension must be positive");
    }

    space_kind kind_ = space_kind::scalar_field;
    std::string id_;
    std::vector<int> shape_;
    int channels_ = 1;
    int tensor_order_ = 1;
    long dim_ = 0;
    std::vector<space> parts_;
};

}  // namespace reggraph
