#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the DSP, attention, loss and metric
// code. Each kernel has a scalar reference implementation and an AVX2
// variant; the active backend is chosen once at startup from cpuid and can
// be overridden for equivalence testing.

namespace unmixx::kernels {

enum class Backend { kAuto, kScalar, kAvx2 };

bool avx2_available();
const char* active_backend();
void force_backend(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double sum_sq(const double* a, std::size_t n);
double sum(const double* a, std::size_t n);
// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, double alpha, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum_sq(const double* a, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, double alpha, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum_sq(const double* a, std::size_t n);
double sum(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void scale(double* x, double alpha, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
}  // namespace avx2
#endif

}  // namespace unmixx::kernels
