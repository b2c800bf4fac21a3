#include "netcut/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace netcut::kernels {

namespace {
int g_threads = 1;
}

int hardware_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

int threads() { return g_threads; }

void set_threads(int n) { g_threads = std::max(1, n); }

SingleThreadScope::SingleThreadScope() : saved_(g_threads) { g_threads = 1; }
SingleThreadScope::~SingleThreadScope() { g_threads = saved_; }

// ---------------------------------------------------------------------------
// serial reference
// ---------------------------------------------------------------------------

namespace serial {

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        if (!accumulate) std::fill(ci, ci + n, 0.0);
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
        }
    }
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b + j * k;
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] = accumulate ? ci[j] + acc : acc;
        }
    }
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c + i * n;
        if (!accumulate) std::fill(ci, ci + n, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double api = a[p * m + i];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
}

void add_bias(const double* x, const double* b, double* out,
              std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) out[r * cols + j] = x[r * cols + j] + b[j];
}

void col_sum(const double* x, double* out, std::size_t rows, std::size_t cols,
             bool accumulate) {
    if (!accumulate) std::fill(out, out + cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) out[j] += x[r * cols + j];
}

void relu_forward(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* g, double* dx, std::size_t n,
                   bool accumulate) {
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i] > 0.0 ? g[i] : 0.0;
        dx[i] = accumulate ? dx[i] + v : v;
    }
}

void log_softmax_rows(const double* z, double* out, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* zr = z + r * cols;
        double* or_ = out + r * cols;
        double mx = zr[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, zr[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) sum += std::exp(zr[j] - mx);
        const double lse = std::log(sum);
        for (std::size_t j = 0; j < cols; ++j) or_[j] = zr[j] - mx - lse;
    }
}

void log_softmax_backward_rows(const double* out, const double* g, double* dz,
                               std::size_t rows, std::size_t cols, bool accumulate) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* gr = g + r * cols;
        const double* lr = out + r * cols;
        double* dr = dz + r * cols;
        double gsum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) gsum += gr[j];
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = gr[j] - std::exp(lr[j]) * gsum;
            dr[j] = accumulate ? dr[j] + v : v;
        }
    }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP kernels. Work is partitioned by output row (or element for the
// pointwise ops); the per-element accumulation loop stays serial, so output
// is bitwise identical to the serial reference at any thread count.
// ---------------------------------------------------------------------------

void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const int nt = g_threads;
    if (nt <= 1 || m < 2) {
        serial::matmul(a, b, c, m, k, n, accumulate);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        serial::matmul(a + i * k, b, c + i * n, 1, k, n, accumulate);
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const int nt = g_threads;
    if (nt <= 1 || m < 2) {
        serial::matmul_nt(a, b, c, m, k, n, accumulate);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        serial::matmul_nt(a + i * k, b, c + i * n, 1, k, n, accumulate);
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
    const int nt = g_threads;
    if (nt <= 1 || m < 2) {
        serial::matmul_tn(a, b, c, m, k, n, accumulate);
        return;
    }
    // row i of C reads column i of A; stride-m gathers, still row-partitioned
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < static_cast<long long>(m); ++i) {
        double* ci = c + i * n;
        if (!accumulate) std::fill(ci, ci + n, 0.0);
        for (std::size_t p = 0; p < k; ++p) {
            const double api = a[p * m + i];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
        }
    }
}

void add_bias(const double* x, const double* b, double* out,
              std::size_t rows, std::size_t cols) {
    const int nt = g_threads;
    if (nt <= 1 || rows < 2) {
        serial::add_bias(x, b, out, rows, cols);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long r = 0; r < static_cast<long long>(rows); ++r)
        serial::add_bias(x + r * cols, b, out + r * cols, 1, cols);
}

void col_sum(const double* x, double* out, std::size_t rows, std::size_t cols,
             bool accumulate) {
    // rows are reduced in index order; keep it serial so the sum order is fixed
    serial::col_sum(x, out, rows, cols, accumulate);
}

void relu_forward(const double* x, double* out, std::size_t n) {
    const int nt = g_threads;
    if (nt <= 1 || n < 4096) {
        serial::relu_forward(x, out, n);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* g, double* dx, std::size_t n,
                   bool accumulate) {
    const int nt = g_threads;
    if (nt <= 1 || n < 4096) {
        serial::relu_backward(x, g, dx, n, accumulate);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const double v = x[i] > 0.0 ? g[i] : 0.0;
        dx[i] = accumulate ? dx[i] + v : v;
    }
}

void log_softmax_rows(const double* z, double* out, std::size_t rows, std::size_t cols) {
    const int nt = g_threads;
    if (nt <= 1 || rows < 2) {
        serial::log_softmax_rows(z, out, rows, cols);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long r = 0; r < static_cast<long long>(rows); ++r)
        serial::log_softmax_rows(z + r * cols, out + r * cols, 1, cols);
}

void log_softmax_backward_rows(const double* out, const double* g, double* dz,
                               std::size_t rows, std::size_t cols, bool accumulate) {
    const int nt = g_threads;
    if (nt <= 1 || rows < 2) {
        serial::log_softmax_backward_rows(out, g, dz, rows, cols, accumulate);
        return;
    }
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long r = 0; r < static_cast<long long>(rows); ++r)
        serial::log_softmax_backward_rows(out + r * cols, g + r * cols, dz + r * cols, 1,
                                          cols, accumulate);
}

}  // namespace netcut::kernels
