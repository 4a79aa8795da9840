#include "tagalign/project.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "tagalign/error.hpp"
#include "tagalign/io.hpp"

namespace tagalign {
namespace {

using EigenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const EigenMatrix> view(const RealMatrix& m) {
  return {m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols())};
}

RealMatrix from_eigen(const EigenMatrix& m) {
  RealMatrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  Eigen::Map<EigenMatrix>(out.data(), m.rows(), m.cols()) = m;
  return out;
}

EigenMatrix augmented(const RealMatrix& coords) {
  EigenMatrix out(static_cast<Eigen::Index>(coords.rows()),
                  static_cast<Eigen::Index>(coords.cols() + 1));
  out.leftCols(static_cast<Eigen::Index>(coords.cols())) = view(coords);
  out.col(static_cast<Eigen::Index>(coords.cols())).setOnes();
  return out;
}

void check_anchor_shapes(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ValidationError("anchor sets must have identical shapes");
  }
  if (a.cols() == 0) throw ValidationError("anchor dimension must be positive");
}

}  // namespace

std::string_view to_string(AffineMap::Kind kind) noexcept {
  switch (kind) {
    case AffineMap::Kind::affine: return "affine";
    case AffineMap::Kind::translation: return "translation";
    case AffineMap::Kind::identity: return "identity";
  }
  return "unknown";
}

AffineMap ols_affine(const RealMatrix& anchors_a, const RealMatrix& anchors_b) {
  check_anchor_shapes(anchors_a, anchors_b);
  const std::size_t m = anchors_a.rows();
  const std::size_t d = anchors_a.cols();
  if (m < d + 1) {
    throw UnderdeterminedError("affine fit needs at least " + std::to_string(d + 1) +
                               " anchors, got " + std::to_string(m));
  }
  const EigenMatrix design = augmented(anchors_a);
  Eigen::ColPivHouseholderQR<EigenMatrix> qr(design);
  if (qr.rank() < static_cast<Eigen::Index>(d + 1)) {
    throw UnderdeterminedError("anchor design matrix is rank deficient (rank " +
                               std::to_string(qr.rank()) + " < " + std::to_string(d + 1) + ")");
  }
  const EigenMatrix solution = qr.solve(EigenMatrix(view(anchors_b)));
  if (!solution.allFinite()) throw NumericalError("affine fit produced non-finite entries");

  AffineMap map;
  map.kind = AffineMap::Kind::affine;
  map.anchor_count = m;
  map.matrix = from_eigen(solution);
  return map;
}

double affine_objective(const RealMatrix& anchors_a, const RealMatrix& anchors_b,
                        const RealMatrix& matrix) {
  check_anchor_shapes(anchors_a, anchors_b);
  const EigenMatrix residual = augmented(anchors_a) * view(matrix) - view(anchors_b);
  return residual.squaredNorm();
}

AffineMap identity_map(std::size_t dim) {
  AffineMap map;
  map.kind = AffineMap::Kind::identity;
  map.matrix = RealMatrix(dim + 1, dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) map.matrix(i, i) = 1.0;
  return map;
}

AffineMap translation_map(const RealMatrix& anchors_a, const RealMatrix& anchors_b) {
  check_anchor_shapes(anchors_a, anchors_b);
  if (anchors_a.rows() == 0) throw UnderdeterminedError("translation needs at least one anchor");
  const std::size_t d = anchors_a.cols();
  AffineMap map = identity_map(d);
  map.kind = AffineMap::Kind::translation;
  map.anchor_count = anchors_a.rows();
  for (std::size_t c = 0; c < d; ++c) {
    double shift = 0.0;
    for (std::size_t r = 0; r < anchors_a.rows(); ++r) shift += anchors_b(r, c) - anchors_a(r, c);
    map.matrix(d, c) = shift / static_cast<double>(anchors_a.rows());
  }
  return map;
}

AffineMap fit_alignment(const RealMatrix& anchors_a, const RealMatrix& anchors_b) {
  if (anchors_a.rows() == 0) {
    AffineMap map = identity_map(anchors_a.cols());
    return map;
  }
  try {
    return ols_affine(anchors_a, anchors_b);
  } catch (const UnderdeterminedError&) {
    return translation_map(anchors_a, anchors_b);
  }
}

RealMatrix apply_affine(const RealMatrix& coords, const AffineMap& map) {
  if (coords.cols() != map.dim() || map.matrix.rows() != map.dim() + 1) {
    throw ValidationError("frame dimension " + std::to_string(coords.cols()) +
                          " does not match affine map dimension " + std::to_string(map.dim()));
  }
  if (coords.rows() == 0) return RealMatrix(0, map.dim());
  return from_eigen(augmented(coords) * view(map.matrix));
}

EmbeddingFrame apply_affine(const EmbeddingFrame& frame, const AffineMap& map) {
  EmbeddingFrame out{frame.key, Space::aligned, frame.tags, apply_affine(frame.coords, map)};
  return out;
}

EmbeddingFrame as_aligned(const EmbeddingFrame& frame) {
  EmbeddingFrame out = frame;
  out.space = Space::aligned;
  return out;
}

double PcaModel::explained_share() const {
  if (!(total_variance > 0.0)) return 0.0;
  double sum = 0.0;
  for (const double v : explained_variance) sum += v;
  return sum / total_variance;
}

PcaModel fit_pca(const RealMatrix& data, std::size_t out_dim) {
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (out_dim == 0 || out_dim > d) {
    throw ValidationError("PCA output dimension " + std::to_string(out_dim) +
                          " must be in [1, " + std::to_string(d) + "]");
  }
  if (n <= d) {
    throw ValidationError("PCA needs more than " + std::to_string(d) + " rows, got " +
                          std::to_string(n));
  }
  const auto x = view(data);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const EigenMatrix centered = x.rowwise() - mean;
  const Eigen::MatrixXd covariance =
      (centered.transpose() * centered) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) throw NumericalError("PCA eigen-decomposition failed");

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  model.components = RealMatrix(out_dim, d);
  model.total_variance = std::max(0.0, covariance.trace());
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();
  for (std::size_t k = 0; k < out_dim; ++k) {
    const auto col = static_cast<Eigen::Index>(d - 1 - k);  // ascending order from Eigen
    Eigen::VectorXd v = vectors.col(col);
    Eigen::Index largest = 0;
    v.cwiseAbs().maxCoeff(&largest);
    if (v(largest) < 0.0) v = -v;
    for (std::size_t c = 0; c < d; ++c) model.components(k, c) = v(static_cast<Eigen::Index>(c));
    model.explained_variance.push_back(std::max(0.0, values(col)));
  }
  return model;
}

PcaModel fit_pca(std::span<const EmbeddingFrame> frames, std::size_t out_dim) {
  std::size_t rows = 0;
  std::size_t dim = 0;
  for (const auto& f : frames) {
    if (f.coords.rows() == 0) continue;
    if (dim != 0 && f.dim() != dim) throw ValidationError("frames differ in dimension");
    dim = f.dim();
    rows += f.coords.rows();
  }
  RealMatrix stacked(rows, dim);
  std::size_t r = 0;
  for (const auto& f : frames) {
    for (std::size_t i = 0; i < f.coords.rows(); ++i, ++r) {
      std::copy(f.coords.row(i).begin(), f.coords.row(i).end(), stacked.row(r).begin());
    }
  }
  return fit_pca(stacked, out_dim);
}

RealMatrix project_pca(const RealMatrix& coords, const PcaModel& model) {
  if (coords.cols() != model.mean.size()) {
    throw ValidationError("frame dimension does not match the PCA model");
  }
  RealMatrix out(coords.rows(), model.out_dim(), 0.0);
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    for (std::size_t k = 0; k < model.out_dim(); ++k) {
      double sum = 0.0;
      for (std::size_t c = 0; c < coords.cols(); ++c) {
        sum += (coords(i, c) - model.mean[c]) * model.components(k, c);
      }
      out(i, k) = sum;
    }
  }
  return out;
}

EmbeddingFrame project_pca(const EmbeddingFrame& frame, const PcaModel& model) {
  return {frame.key, Space::final, frame.tags, project_pca(frame.coords, model)};
}

std::string affine_csv(std::span<const AffineMap> maps) {
  std::size_t dim = 0;
  for (const auto& m : maps) dim = std::max(dim, m.dim());
  std::string out = "group,period,base_group,kind,anchors,row";
  for (std::size_t c = 1; c <= dim; ++c) out += ",c" + std::to_string(c);
  out += '\n';
  for (const auto& m : maps) {
    for (std::size_t r = 0; r < m.matrix.rows(); ++r) {
      std::vector<std::string> fields{io::csv_escape(m.group), std::to_string(m.period),
                                      io::csv_escape(m.base_group), std::string(to_string(m.kind)),
                                      std::to_string(m.anchor_count), std::to_string(r)};
      for (std::size_t c = 0; c < m.matrix.cols(); ++c) fields.push_back(io::format_real(m.matrix(r, c)));
      out += io::csv_line(fields);
      out += '\n';
    }
  }
  return out;
}

}  // namespace tagalign
