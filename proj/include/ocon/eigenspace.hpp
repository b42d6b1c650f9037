#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ocon {

// Dense square matrix, row-major.
struct SymmetricMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  explicit SymmetricMatrix(std::size_t size = 0) : n(size), data(size * size, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * n + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * n + c]; }
};

struct EigenDecomposition {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
};

inline constexpr double kJacobiTolerance = 1e-10;
inline constexpr int kJacobiMaxSweeps = 100;

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
// `tol`. Throws NotSymmetric when |A - A^T| exceeds 1e-12 anywhere and
// NoConvergence after kJacobiMaxSweeps sweeps.
EigenDecomposition eig_symmetric(const SymmetricMatrix& a, double tol = kJacobiTolerance);

inline constexpr std::size_t kDefaultComponents = 40;
inline constexpr double kNegligibleEigenvalue = 1e-12;

// PCA projector. basis[i] is a unit vector of length `dim`; eigenvalues use
// the 1/n covariance normalization.
struct Eigenspace {
  std::size_t dim = 0;
  std::vector<double> mean;
  std::vector<std::vector<double>> basis;
  std::vector<double> eigenvalues;

  std::size_t components() const noexcept { return basis.size(); }

  bool operator==(const Eigenspace&) const = default;
};

using FeatureVector = std::vector<double>;

// Eigenfaces through the n x n Gram matrix of the centred training vectors.
// Keeps min(m, n-1, #eigenvalues above kNegligibleEigenvalue) components and
// flips each basis vector so its largest-magnitude entry is positive.
Eigenspace compute_eigenspace(std::span<const std::vector<double>> train_vectors,
                              std::size_t m = kDefaultComponents);

FeatureVector project(const Eigenspace& space, std::span<const double> v);

std::vector<double> reconstruct(const Eigenspace& space, std::span<const double> coeffs);

// Copy of `space` restricted to its first m components.
Eigenspace truncate(const Eigenspace& space, std::size_t m);

// `EIGEN1 <d> <m>` followed by mean, eigenvalues and the basis (one vector
// after another), 17 significant digits.
std::string format_eigenspace(const Eigenspace& space);
Eigenspace parse_eigenspace(std::string_view text);

void save_eigenspace(const std::filesystem::path& path, const Eigenspace& space);
Eigenspace load_eigenspace(const std::filesystem::path& path);

}  // namespace ocon
