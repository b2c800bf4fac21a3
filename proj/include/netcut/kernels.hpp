#pragma once

#include <cstddef>

namespace netcut::kernels {

// Runtime thread setting for the parallel kernels. threads() == 1 runs the
// serial code path exactly; higher values fan loops out over OpenMP threads.
// Every kernel computes each output element with a fixed serial accumulation
// order, so results are bitwise identical for any thread count.
int threads();
void set_threads(int n);
int hardware_threads();

// Pins threads() to 1 for the lifetime of the scope (the latency benchmark).
class SingleThreadScope {
public:
    SingleThreadScope();
    ~SingleThreadScope();
    SingleThreadScope(const SingleThreadScope&) = delete;
    SingleThreadScope& operator=(const SingleThreadScope&) = delete;

private:
    int saved_;
};

// C[m x n] = A[m x k] * B[k x n]; accumulate adds into C instead.
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// C[m x n] = A[m x k] * B[n x k]^T
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// C[m x n] = A[k x m]^T * B[k x n]
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

// out[r, :] = x[r, :] + b for every row
void add_bias(const double* x, const double* b, double* out,
              std::size_t rows, std::size_t cols);

// column sums: out[j] (+)= sum_r x[r, j]
void col_sum(const double* x, double* out, std::size_t rows, std::size_t cols,
             bool accumulate = false);

void relu_forward(const double* x, double* out, std::size_t n);

// dx (+)= g where x > 0 (subgradient at 0 is 0)
void relu_backward(const double* x, const double* g, double* dx, std::size_t n,
                   bool accumulate = false);

// row-wise z - max(z) - ln(sum exp(z - max(z)))
void log_softmax_rows(const double* z, double* out, std::size_t rows, std::size_t cols);

// dz (+)= g - softmax(z) * rowsum(g), given out = log_softmax(z)
void log_softmax_backward_rows(const double* out, const double* g, double* dz,
                               std::size_t rows, std::size_t cols, bool accumulate = false);

// Serial reference implementations; kept for equality tests and the
// kernel benchmark. Same contracts as above.
namespace serial {
void matmul(const double* a, const double* b, double* c,
            std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void add_bias(const double* x, const double* b, double* out,
              std::size_t rows, std::size_t cols);
void col_sum(const double* x, double* out, std::size_t rows, std::size_t cols,
             bool accumulate = false);
void relu_forward(const double* x, double* out, std::size_t n);
void relu_backward(const double* x, const double* g, double* dx, std::size_t n,
                   bool accumulate = false);
void log_softmax_rows(const double* z, double* out, std::size_t rows, std::size_t cols);
void log_softmax_backward_rows(const double* out, const double* g, double* dz,
                               std::size_t rows, std::size_t cols, bool accumulate = false);
}  // namespace serial

}  // namespace netcut::kernels
