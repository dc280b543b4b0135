#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tef {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Errors. Each maps to one failure mode named by the public contracts.

struct OutOfSupport : std::domain_error {
    using std::domain_error::domain_error;
};

struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// |<<Theta, phi~(x)>>| exceeded the exp-overflow guard.
struct ExpOverflow : std::overflow_error {
    using std::overflow_error::overflow_error;
};

/// A grid or dense-materialization size guard was exceeded.
struct GuardExceeded : std::length_error {
    using std::length_error::length_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Column-major vectorization, the ordering used everywhere vec(.) appears.
template <typename Derived>
auto vec(const Eigen::MatrixBase<Derived>& m) {
    return m.reshaped();
}

template <typename Scalar>
Matrix<Scalar> unvec(const Vector<Scalar>& v, Index rows, Index cols) {
    return v.reshaped(rows, cols);
}

namespace detail {
constexpr Index kTreeLeaf = 64;

template <typename Derived>
typename Derived::Scalar tree_sum_impl(const Eigen::DenseBase<Derived>& v, Index begin,
                                       Index end) {
    if (end - begin <= kTreeLeaf) {
        typename Derived::Scalar acc(0);
        for (Index i = begin; i < end; ++i) acc += v(i);
        return acc;
    }
    const Index mid = begin + (end - begin) / 2;
    return tree_sum_impl(v, begin, mid) + tree_sum_impl(v, mid, end);
}
}  // namespace detail

/// Pairwise (tree) summation with a fixed split rule; the result depends only on
/// the input values and length.
template <typename Derived>
typename Derived::Scalar tree_sum(const Eigen::DenseBase<Derived>& v) {
    return detail::tree_sum_impl(v, 0, v.size());
}

/// Counter-based generator: the value at (stream, counter) is a pure function
/// of the seed, so draws can be split across workers without changing results.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

    /// Derive an independent generator for a sub-stream.
    [[nodiscard]] CounterRng split(std::uint64_t stream) const {
        CounterRng r(0);
        r.key_ = mix(key_ ^ mix(stream + 0x9e3779b97f4a7c15ULL));
        return r;
    }

    [[nodiscard]] std::uint64_t bits(std::uint64_t counter) const {
        return mix(key_ + (counter + 1) * 0x9e3779b97f4a7c15ULL);
    }

    /// Uniform on the open interval (0, 1).
    [[nodiscard]] double uniform(std::uint64_t counter) const {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t key_;
};

}  // namespace tef
