#pragma once

// Data-parallel inner loops used by the substrates, readouts and the novelty
// search. Every kernel has a portable scalar reference in `generic::` and, on
// x86-64, an AVX2/FMA variant in `avx2::`. The variant used at runtime is
// chosen once from CPU feature detection and can be forced to the scalar
// reference with the environment variable CHARC_SIMD=generic.

#include <cstddef>

namespace charc::kernels {

/// sum_i a[i] * b[i]
using DotFn = double (*)(const double* a, const double* b, std::size_t n);

/// y = A x for a row-major rows x cols matrix A.
using GemvFn = void (*)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);

/// out[i] = ||(xs[i], ys[i], zs[i]) - q||_2 for i < n.
using Distance3Fn = void (*)(const double* xs, const double* ys, const double* zs, std::size_t n,
                             double qx, double qy, double qz, double* out);

/// y[i] += alpha * x[i]
using AxpyFn = void (*)(double alpha, const double* x, double* y, std::size_t n);

struct KernelTable {
    const char* name;
    DotFn dot;
    GemvFn gemv;
    Distance3Fn distance3;
    AxpyFn axpy;
};

namespace generic {
double dot(const double* a, const double* b, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void distance3(const double* xs, const double* ys, const double* zs, std::size_t n,
               double qx, double qy, double qz, double* out);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace generic

#if defined(CHARC_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void distance3(const double* xs, const double* ys, const double* zs, std::size_t n,
               double qx, double qy, double qz, double* out);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

const KernelTable& generic_table();

/// The AVX2 table if it was compiled in and the CPU supports AVX2+FMA, else nullptr.
const KernelTable* avx2_table();

/// The table selected for this process.
const KernelTable& active();

}  // namespace charc::kernels
