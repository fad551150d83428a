#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "regen/error.hpp"

namespace regen {

using Shape = std::vector<int64_t>;

inline int64_t numel_of(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

// Dense row-major tensor. Copies are shallow (shared storage); use clone()
// for a deep copy. reshaped() aliases the same buffer.
template <class S>
struct TensorT {
    Shape shape;
    std::shared_ptr<std::vector<S>> store;

    TensorT() = default;
    explicit TensorT(Shape sh)
        : shape(std::move(sh)),
          store(std::make_shared<std::vector<S>>(numel_of(shape), S(0))) {}

    static TensorT zeros(Shape sh) { return TensorT(std::move(sh)); }

    static TensorT full(Shape sh, S v) {
        TensorT t(std::move(sh));
        for (auto& x : *t.store) x = v;
        return t;
    }

    static TensorT from_vec(Shape sh, std::vector<S> v) {
        if ((int64_t)v.size() != numel_of(sh))
            throw ShapeError("from_vec: size mismatch for " + shape_str(sh));
        TensorT t;
        t.shape = std::move(sh);
        t.store = std::make_shared<std::vector<S>>(std::move(v));
        return t;
    }

    bool defined() const { return store != nullptr; }
    int64_t numel() const { return store ? (int64_t)store->size() : 0; }
    int64_t dim(int i) const { return shape[(size_t)i]; }
    int ndim() const { return (int)shape.size(); }

    S* data() { return store->data(); }
    const S* data() const { return store->data(); }

    S& operator[](int64_t i) { return (*store)[(size_t)i]; }
    const S& operator[](int64_t i) const { return (*store)[(size_t)i]; }

    // Element access by multi-index, row-major. For tests and slow paths.
    S& at(std::initializer_list<int64_t> idx) {
        return (*store)[(size_t)flat(idx)];
    }
    const S& at(std::initializer_list<int64_t> idx) const {
        return (*store)[(size_t)flat(idx)];
    }

    int64_t flat(std::initializer_list<int64_t> idx) const {
        int64_t f = 0;
        size_t d = 0;
        for (int64_t i : idx) {
            f = f * shape[d] + i;
            ++d;
        }
        return f;
    }

    TensorT reshaped(Shape sh) const {
        if (numel_of(sh) != numel())
            throw ShapeError("reshape: " + shape_str(shape) + " -> " +
                             shape_str(sh));
        TensorT t;
        t.shape = std::move(sh);
        t.store = store;
        return t;
    }

    TensorT clone() const {
        TensorT t;
        t.shape = shape;
        t.store = store ? std::make_shared<std::vector<S>>(*store) : nullptr;
        return t;
    }

    template <class U>
    TensorT<U> cast() const {
        TensorT<U> t;
        t.shape = shape;
        t.store = std::make_shared<std::vector<U>>(numel());
        for (int64_t i = 0; i < numel(); ++i)
            (*t.store)[(size_t)i] = (U)(*store)[(size_t)i];
        return t;
    }

    void fill(S v) {
        for (auto& x : *store) x = v;
    }

    bool all_finite() const {
        for (const auto& x : *store)
            if (!std::isfinite((double)x)) return false;
        return true;
    }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <class S>
bool same_shape(const TensorT<S>& a, const TensorT<S>& b) {
    return a.shape == b.shape;
}

template <class S>
double max_abs_diff(const TensorT<S>& a, const TensorT<S>& b) {
    double m = 0;
    for (int64_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs((double)a[i] - (double)b[i]));
    return m;
}

}  // namespace regen
