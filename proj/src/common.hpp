#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace slipstokes {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Error categories surfaced through the C API as distinct codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// |a - b| / max(|a|, |b|, 1)
inline double rel_residual(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

struct GaussRule {
  std::vector<double> x, w;
};
// n-point Gauss-Legendre rule on [a, b].
GaussRule gauss_legendre(int n, double a, double b);

// Worker count used by parallel_for; 0 means hardware concurrency.
void set_jobs(int n);
int jobs();

// Runs body(begin, end) over [0, n) split into contiguous chunks, one per
// worker. Chunk boundaries depend only on n and the worker count.
void parallel_for(int n, const std::function<void(int, int)>& body);

// Fixed chunking used for deterministic reductions: results are combined in
// chunk order regardless of which thread ran which chunk.
int reduction_chunks(int n);
std::pair<int, int> chunk_range(int n, int chunks, int c);

}  // namespace slipstokes
