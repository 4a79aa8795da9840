#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tagalign/types.hpp"

namespace tagalign {

/// Maps ones-augmented coordinates [y | 1] (row vector) to y' = [y | 1] * matrix.
struct AffineMap {
  enum class Kind { affine, translation, identity };

  std::string group;
  int period = 0;
  std::string base_group;
  Kind kind = Kind::affine;
  std::size_t anchor_count = 0;
  RealMatrix matrix;  // (D+1) x D

  std::size_t dim() const noexcept { return matrix.cols(); }
};

std::string_view to_string(AffineMap::Kind kind) noexcept;

/// Least-squares X minimizing the Frobenius norm of [A | 1] X - B, solved by
/// column-pivoted Householder QR. Requires M >= D+1 and full column rank,
/// otherwise throws UnderdeterminedError.
AffineMap ols_affine(const RealMatrix& anchors_a, const RealMatrix& anchors_b);

/// Squared Frobenius residual of `matrix` on the anchor sets.
double affine_objective(const RealMatrix& anchors_a, const RealMatrix& anchors_b,
                        const RealMatrix& matrix);

AffineMap identity_map(std::size_t dim);

/// Identity plus the mean shift from A's anchors to B's anchors.
AffineMap translation_map(const RealMatrix& anchors_a, const RealMatrix& anchors_b);

/// Full affine when M >= D+1 and well-posed, translation when 1 <= M or the
/// affine system is rank deficient, identity when there are no anchors.
AffineMap fit_alignment(const RealMatrix& anchors_a, const RealMatrix& anchors_b);

RealMatrix apply_affine(const RealMatrix& coords, const AffineMap& map);
EmbeddingFrame apply_affine(const EmbeddingFrame& frame, const AffineMap& map);

/// Base-group frames: same coordinates, space set to aligned.
EmbeddingFrame as_aligned(const EmbeddingFrame& frame);

struct PcaModel {
  std::vector<double> mean;
  RealMatrix components;  // out_dim x D, orthonormal rows
  std::vector<double> explained_variance;  // non-increasing
  double total_variance = 0.0;

  std::size_t out_dim() const noexcept { return components.rows(); }
  double explained_share() const;
};

/// Principal components of the stacked rows (population covariance). Each
/// component's largest-magnitude entry is positive.
PcaModel fit_pca(const RealMatrix& data, std::size_t out_dim = 2);
PcaModel fit_pca(std::span<const EmbeddingFrame> frames, std::size_t out_dim = 2);

RealMatrix project_pca(const RealMatrix& coords, const PcaModel& model);
EmbeddingFrame project_pca(const EmbeddingFrame& frame, const PcaModel& model);

/// Audit export: `group,period,base_group,kind,anchors,row,c1..cD`.
std::string affine_csv(std::span<const AffineMap> maps);

}  // namespace tagalign
