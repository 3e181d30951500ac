#include "msic/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace msic::linalg {

double SquareMatrix::trace() const noexcept {
  double t = 0.0;
  for (int i = 0; i < n; ++i) t += (*this)(i, i);
  return t;
}

namespace {

double off_diagonal_norm(const SquareMatrix& m) {
  double s = 0.0;
  for (int r = 0; r < m.n; ++r) {
    for (int c = 0; c < m.n; ++c) {
      if (r != c) s += m(r, c) * m(r, c);
    }
  }
  return std::sqrt(s);
}

}  // namespace

EigenSystem jacobi_eigen(SquareMatrix m, double tolerance, int max_sweeps) {
  const int n = m.n;
  EigenSystem out;
  out.vectors = SquareMatrix(n);
  for (int i = 0; i < n; ++i) out.vectors(i, i) = 1.0;

  const double threshold = tolerance * std::abs(m.trace());
  for (; out.sweeps < max_sweeps; ++out.sweeps) {
    const double off = off_diagonal_norm(m);
    if (off == 0.0 || off <= threshold) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double app = m(p, p);
        const double aqq = m(q, q);
        // Rutishauser's stable rotation: t = sgn(theta) / (|theta| + sqrt(theta^2 + 1))
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        m(p, p) = app - t * apq;
        m(q, q) = aqq + t * apq;
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (int r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = m(r, p);
          const double arq = m(r, q);
          m(r, p) = arp - s * (arq + tau * arp);
          m(p, r) = m(r, p);
          m(r, q) = arq + s * (arp - tau * arq);
          m(q, r) = m(r, q);
        }
        for (int r = 0; r < n; ++r) {
          const double vrp = out.vectors(r, p);
          const double vrq = out.vectors(r, q);
          out.vectors(r, p) = vrp - s * (vrq + tau * vrp);
          out.vectors(r, q) = vrq + s * (vrp - tau * vrq);
        }
      }
    }
  }
  out.values.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.values[static_cast<std::size_t>(i)] = m(i, i);
  return out;
}

std::vector<double> cholesky_solve(const SquareMatrix& a, std::span<const double> b, double damping) {
  const int n = a.n;
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("cholesky_solve: size mismatch");
  SquareMatrix l(n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j) + damping;
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw std::domain_error("cholesky_solve: matrix not positive definite");
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) s -= l(i, k) * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = s / l(i, i);
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    double s = y[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = s / l(i, i);
  }
  return x;
}

}  // namespace msic::linalg
