#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Dense/sparse vector kernels used by the exact solvers.
// Scalar versions are the reference; AVX2 versions are picked at runtime
// when the CPU supports them and KCM_SIMD is not "scalar".
namespace kcm::kernels {

struct Csr {
    std::size_t rows = 0;
    const std::int64_t* row_ptr = nullptr;
    const std::int32_t* col = nullptr;
    const double* val = nullptr;
};

// y = diag .* x + A x   (diag may be null)
using SpmvFn = void (*)(const Csr&, const double* diag, const double* x, double* y);
using AxpyFn = void (*)(std::size_t, double, const double*, double*);
using DotFn = double (*)(std::size_t, const double*, const double*);
using L1Fn = double (*)(std::size_t, const double*, const double*);
using MaxAbsFn = double (*)(std::size_t, const double*);

struct Table {
    std::string_view name;
    SpmvFn spmv;
    AxpyFn axpy;
    DotFn dot;
    L1Fn l1_distance;
    MaxAbsFn max_abs;
};

const Table& scalar();
const Table* avx2();  // null when not supported by the CPU
const Table& active();

inline void spmv(const Csr& a, const double* diag, const double* x, double* y) { active().spmv(a, diag, x, y); }
inline void axpy(std::size_t n, double a, const double* x, double* y) { active().axpy(n, a, x, y); }
inline double dot(std::size_t n, const double* x, const double* y) { return active().dot(n, x, y); }
inline double l1_distance(std::size_t n, const double* x, const double* y) { return active().l1_distance(n, x, y); }
inline double max_abs(std::size_t n, const double* x) { return active().max_abs(n, x); }

}  // namespace kcm::kernels
