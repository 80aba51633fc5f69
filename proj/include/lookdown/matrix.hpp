#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lookdown {

// Dense symmetric matrix with zero diagonal, 1-based accessors.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

  int n() const { return n_; }

  double at(int i, int j) const { return a_[idx(i, j)]; }
  void set(int i, int j, double v) {
    a_[idx(i, j)] = v;
    a_[idx(j, i)] = v;
  }

  bool operator==(const Matrix& o) const { return n_ == o.n_ && a_ == o.a_; }

  double max_abs_diff(const Matrix& o) const {
    if (n_ != o.n_) throw std::invalid_argument("matrix: size mismatch");
    double m = 0.0;
    for (std::size_t k = 0; k < a_.size(); ++k) m = std::max(m, std::abs(a_[k] - o.a_[k]));
    return m;
  }

  // Largest triangle-inequality violation, 0 for a valid semi-metric.
  double triangle_violation() const {
    double worst = 0.0;
    for (int i = 1; i <= n_; ++i)
      for (int j = 1; j <= n_; ++j)
        for (int k = 1; k <= n_; ++k)
          worst = std::max(worst, at(i, k) - at(i, j) - at(j, k));
    return worst;
  }

  void validate_semimetric(double tol = 1e-9) const {
    for (int i = 1; i <= n_; ++i) {
      if (at(i, i) != 0.0) throw std::invalid_argument("matrix: nonzero diagonal");
      for (int j = 1; j <= n_; ++j)
        if (at(i, j) < 0.0) throw std::invalid_argument("matrix: negative entry");
    }
    if (triangle_violation() > tol)
      throw std::invalid_argument("matrix: triangle inequality violated");
  }

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i - 1) * n_ + static_cast<std::size_t>(j - 1);
  }

  int n_ = 0;
  std::vector<double> a_;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// File format: first line n, then n whitespace-separated rows; a marked
// state appends one more line with the n u-values.
inline void write_matrix(std::ostream& out, const Matrix& m,
                         const std::vector<double>* marks = nullptr) {
  out << m.n() << "\n";
  for (int i = 1; i <= m.n(); ++i) {
    for (int j = 1; j <= m.n(); ++j) {
      if (j > 1) out << ' ';
      out << format_double(m.at(i, j));
    }
    out << "\n";
  }
  if (marks) {
    for (int i = 0; i < m.n(); ++i) {
      if (i > 0) out << ' ';
      out << format_double((*marks)[i]);
    }
    out << "\n";
  }
}

struct MatrixFile {
  Matrix dist;
  std::vector<double> marks;  // empty when absent
};

inline MatrixFile read_matrix(std::istream& in) {
  int n = 0;
  if (!(in >> n) || n < 0) throw std::invalid_argument("matrix file: bad size line");
  Matrix m(n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) {
      double v;
      if (!(in >> v)) throw std::invalid_argument("matrix file: truncated rows");
      m.set(i, j, v);
    }
  MatrixFile f;
  f.dist = std::move(m);
  double u;
  while (in >> u) f.marks.push_back(u);
  if (!f.marks.empty() && static_cast<int>(f.marks.size()) != n)
    throw std::invalid_argument("matrix file: mark line has wrong length");
  return f;
}

}  // namespace lookdown
