#include "unmixx/kernels.hpp"

#include <atomic>

namespace unmixx::kernels {

namespace {

struct Vtable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*sum_sq)(const double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scale)(double*, double, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  const char* name;
};

constexpr Vtable kScalar = {scalar::dot, scalar::sum_sq, scalar::sum,
                            scalar::axpy, scalar::scale, scalar::mul,
                            scalar::add,  scalar::sub,   "scalar"};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Vtable kAvx2 = {avx2::dot, avx2::sum_sq, avx2::sum, avx2::axpy,
                          avx2::scale, avx2::mul, avx2::add, avx2::sub,
                          "avx2"};
#endif

const Vtable* pick(Backend b) {
#if defined(__x86_64__) || defined(_M_X64)
  if (b == Backend::kAvx2 || (b == Backend::kAuto && avx2_available()))
    return &kAvx2;
#endif
  (void)b;
  return &kScalar;
}

std::atomic<const Vtable*> g_active{nullptr};

const Vtable* active() {
  const Vtable* v = g_active.load(std::memory_order_acquire);
  if (!v) {
    v = pick(Backend::kAuto);
    g_active.store(v, std::memory_order_release);
  }
  return v;
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const char* active_backend() { return active()->name; }

void force_backend(Backend b) {
  g_active.store(pick(b), std::memory_order_release);
}

double dot(const double* a, const double* b, std::size_t n) {
  return active()->dot(a, b, n);
}
double sum_sq(const double* a, std::size_t n) { return active()->sum_sq(a, n); }
double sum(const double* a, std::size_t n) { return active()->sum(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active()->axpy(alpha, x, y, n);
}
void scale(double* x, double alpha, std::size_t n) { active()->scale(x, alpha, n); }
void mul(const double* a, const double* b, double* out, std::size_t n) {
  active()->mul(a, b, out, n);
}
void add(const double* a, const double* b, double* out, std::size_t n) {
  active()->add(a, b, out, n);
}
void sub(const double* a, const double* b, double* out, std::size_t n) {
  active()->sub(a, b, out, n);
}

}  // namespace unmixx::kernels
