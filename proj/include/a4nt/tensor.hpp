#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace a4nt {

#ifdef A4NT_DOUBLE_PRECISION
using Real = double;
#else
using Real = float;
#endif

/// 64-byte aligned storage. Vectorised kernels peel unaligned heads, so a
/// fixed alignment keeps floating-point results independent of where the
/// allocator happens to place a buffer.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using RealStorage = std::vector<Real, AlignedAllocator<Real>>;

/// Raised when operand shapes do not conform to an operation's rule.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

/// Dense row-major array of reals. Rank-1 tensors behave as a single row
/// wherever a matrix view is needed.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, Real fill = Real(0));
    Tensor(Shape shape, std::vector<Real> data);

    static Tensor matrix(std::size_t rows, std::size_t cols, Real fill = Real(0));
    static Tensor from_rows(std::initializer_list<std::initializer_list<Real>> rows);
    static Tensor scalar(Real value);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t rows() const;
    std::size_t cols() const;

    Real* data() { return data_.data(); }
    const Real* data() const { return data_.data(); }
    std::span<Real> values() { return data_; }
    std::span<const Real> values() const { return data_; }

    Real& operator[](std::size_t i) { return data_[i]; }
    Real operator[](std::size_t i) const { return data_[i]; }
    Real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    Real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

    void fill(Real value);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

private:
    Shape shape_;
    RealStorage data_;
};

/// Trainable leaf array with its accumulated gradient.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {}

    void zero_grad();
};

}  // namespace a4nt
