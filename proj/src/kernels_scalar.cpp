#include <cmath>
#include <cstdlib>
#include <cstring>

#include "kcm/kernels.hpp"

namespace kcm::kernels {

namespace {

void spmv_scalar(const Csr& a, const double* diag, const double* x, double* y) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        double s = diag ? diag[i] * x[i] : 0.0;
        for (std::int64_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) s += a.val[k] * x[a.col[k]];
        y[i] = s;
    }
}

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(std::size_t n, const double* x, const double* y) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double l1_scalar(std::size_t n, const double* x, const double* y) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(x[i] - y[i]);
    return s;
}

double max_abs_scalar(std::size_t n, const double* x) {
    double m = 0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(x[i]));
    return m;
}

}  // namespace

const Table& scalar() {
    static const Table t{"scalar", spmv_scalar, axpy_scalar, dot_scalar, l1_scalar, max_abs_scalar};
    return t;
}

const Table& active() {
    static const Table& t = [] () -> const Table& {
        const char* env = std::getenv("KCM_SIMD");
        if (env && std::strcmp(env, "scalar") == 0) return scalar();
        if (const Table* v = avx2()) return *v;
        return scalar();
    }();
    return t;
}

}  // namespace kcm::kernels
