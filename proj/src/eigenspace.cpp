#include "ocon/eigenspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocon/error.hpp"
#include "text_util.hpp"

namespace ocon {

namespace {

double off_diagonal_norm(const SymmetricMatrix& a) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t j = 0; j < a.n; ++j) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

double frobenius_norm(const SymmetricMatrix& a) {
  double sum = 0.0;
  for (double v : a.data) sum += v * v;
  return std::sqrt(sum);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has length " + std::to_string(got) + ", expected " + std::to_string(want));
  }
}

}  // namespace

EigenDecomposition eig_symmetric(const SymmetricMatrix& input, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be positive");
  const std::size_t n = input.n;
  if (input.data.size() != n * n) throw Error(ErrorCode::DimensionMismatch, "matrix storage is not n x n");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(input(i, j) - input(j, i)) > 1e-12) {
        throw Error(ErrorCode::NotSymmetric,
                    "entries (" + std::to_string(i) + "," + std::to_string(j) + ") differ");
      }
    }
  }

  SymmetricMatrix a = input;
  SymmetricMatrix v(n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  bool converged = false;
  for (int sweep = 0; sweep <= kJacobiMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) < tol) {
      converged = true;
      break;
    }
    if (sweep == kJacobiMaxSweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence,
                "off-diagonal norm still above tolerance after " + std::to_string(kJacobiMaxSweeps) + " sweeps");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenDecomposition out;
  out.values.reserve(n);
  out.vectors.reserve(n);
  for (std::size_t idx : order) {
    out.values.push_back(a(idx, idx));
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v(k, idx);
    out.vectors.push_back(std::move(col));
  }
  return out;
}

Eigenspace compute_eigenspace(std::span<const std::vector<double>> train_vectors, std::size_t m) {
  if (train_vectors.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "need at least 2 training vectors");
  }
  if (m < 1) throw Error(ErrorCode::InvalidConfig, "need at least 1 component");
  const std::size_t n = train_vectors.size();
  const std::size_t d = train_vectors.front().size();
  if (d == 0) throw Error(ErrorCode::DimensionMismatch, "empty training vector");
  for (const auto& x : train_vectors) require_length(x.size(), d, "training vector");

  Eigenspace space;
  space.dim = d;
  space.mean.assign(d, 0.0);
  for (const auto& x : train_vectors) {
    for (std::size_t k = 0; k < d; ++k) space.mean[k] += x[k];
  }
  for (auto& v : space.mean) v /= static_cast<double>(n);

  std::vector<std::vector<double>> centered(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) centered[i][k] = train_vectors[i][k] - space.mean[k];
  }

  SymmetricMatrix gram(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double g = dot(centered[i], centered[j]);
      gram(i, j) = g;
      gram(j, i) = g;
    }
  }

  // The absolute tolerance is scaled to the matrix so that large images,
  // whose Gram entries run into the tens of thousands, still converge.
  const double tol = kJacobiTolerance * std::max(1.0, frobenius_norm(gram));
  const EigenDecomposition eig = eig_symmetric(gram, tol);

  const std::size_t limit = std::min(m, n - 1);
  for (std::size_t i = 0; i < n && space.basis.size() < limit; ++i) {
    const double lambda = eig.values[i] / static_cast<double>(n);
    if (!(lambda > kNegligibleEigenvalue)) break;

    std::vector<double> face(d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = eig.vectors[i][j];
      for (std::size_t k = 0; k < d; ++k) face[k] += w * centered[j][k];
    }
    // One Gram-Schmidt pass against the kept vectors absorbs round-off from
    // the small-eigenvalue end of the spectrum.
    for (const auto& prev : space.basis) {
      const double proj = dot(face, prev);
      for (std::size_t k = 0; k < d; ++k) face[k] -= proj * prev[k];
    }
    const double norm = std::sqrt(dot(face, face));
    if (!(norm > 0.0)) break;
    for (auto& v : face) v /= norm;

    std::size_t peak = 0;
    for (std::size_t k = 1; k < d; ++k) {
      if (std::abs(face[k]) > std::abs(face[peak])) peak = k;
    }
    if (face[peak] < 0.0) {
      for (auto& v : face) v = -v;
    }
    space.basis.push_back(std::move(face));
    space.eigenvalues.push_back(lambda);
  }
  if (space.basis.empty()) throw Error(ErrorCode::InsufficientData, "training vectors have no variance");
  return space;
}

FeatureVector project(const Eigenspace& space, std::span<const double> v) {
  require_length(v.size(), space.dim, "input vector");
  std::vector<double> centered(space.dim);
  for (std::size_t k = 0; k < space.dim; ++k) centered[k] = v[k] - space.mean[k];
  FeatureVector coeffs(space.components());
  for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] = dot(space.basis[i], centered);
  return coeffs;
}

std::vector<double> reconstruct(const Eigenspace& space, std::span<const double> coeffs) {
  require_length(coeffs.size(), space.components(), "feature vector");
  std::vector<double> out = space.mean;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    for (std::size_t k = 0; k < space.dim; ++k) out[k] += coeffs[i] * space.basis[i][k];
  }
  return out;
}

Eigenspace truncate(const Eigenspace& space, std::size_t m) {
  Eigenspace out = space;
  m = std::min(m, space.components());
  out.basis.resize(m);
  out.eigenvalues.resize(m);
  return out;
}

std::string format_eigenspace(const Eigenspace& space) {
  std::string out = "EIGEN1 " + std::to_string(space.dim) + " " + std::to_string(space.components()) + "\n";
  auto line = [&out](std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out += ' ';
      out += detail::format_double(values[i]);
    }
    out += '\n';
  };
  line(space.mean);
  line(space.eigenvalues);
  for (const auto& b : space.basis) line(b);
  return out;
}

Eigenspace parse_eigenspace(std::string_view text) {
  detail::Tokens tokens(text);
  if (tokens.done() || tokens.next() != "EIGEN1") {
    throw Error(ErrorCode::ParseError, "missing EIGEN1 header");
  }
  Eigenspace space;
  space.dim = tokens.next_int<std::size_t>();
  const auto m = tokens.next_int<std::size_t>();
  if (space.dim == 0) throw Error(ErrorCode::ParseError, "zero dimension");
  space.mean.resize(space.dim);
  for (auto& v : space.mean) v = tokens.next_double();
  space.eigenvalues.resize(m);
  for (auto& v : space.eigenvalues) v = tokens.next_double();
  space.basis.assign(m, std::vector<double>(space.dim));
  for (auto& b : space.basis) {
    for (auto& v : b) v = tokens.next_double();
  }
  if (!tokens.done()) throw Error(ErrorCode::ParseError, "trailing data after eigenspace");
  return space;
}

void save_eigenspace(const std::filesystem::path& path, const Eigenspace& space) {
  detail::write_file(path, format_eigenspace(space));
}

Eigenspace load_eigenspace(const std::filesystem::path& path) {
  return parse_eigenspace(detail::read_file(path));
}

}  // namespace ocon
