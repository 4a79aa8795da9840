#include "tagalign/embed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>

#include "tagalign/error.hpp"
#include "tagalign/simd/kernels.hpp"

namespace tagalign {
namespace {

constexpr double kGradientClip = 4.0;
constexpr double kRepulsionEpsilon = 0.001;
constexpr double kInitRange = 10.0;
constexpr double kJitter = 0.01;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

RealMatrix random_init(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(-kInitRange, kInitRange);
  RealMatrix coords(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) coords(i, d) = uniform(rng);
  }
  return coords;
}

double clip(double value) { return std::clamp(value, -kGradientClip, kGradientClip); }

// Coordinate access for the sequential optimizer.
struct PlainAccess {
  static double load(double& x) { return x; }
  static void store(double& x, double v) { x = v; }
};

// Concurrent optimizer: relaxed atomics, last writer wins.
struct AtomicAccess {
  static double load(double& x) { return std::atomic_ref<double>(x).load(std::memory_order_relaxed); }
  static void store(double& x, double v) {
    std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
  }
};

struct DirectedSample {
  std::size_t head = 0;
  std::size_t tail = 0;
  double epochs_per_sample = 0.0;
  double epochs_per_negative = 0.0;
  double next_sample = 0.0;
  double next_negative = 0.0;
};

[[noreturn]] void non_finite(std::size_t epoch, std::size_t node) {
  throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch) + ", node " +
                       std::to_string(node));
}

class LayoutOptimizer {
 public:
  LayoutOptimizer(const FuzzyGraph& graph, const EmbedOptions& options, RealMatrix& coords)
      : options_(options),
        curve_(curve_params(options.min_dist, options.spread)),
        coords_(coords),
        n_(graph.n),
        dim_(options.dim) {
    double max_weight = 0.0;
    for (const auto& e : graph.edges) max_weight = std::max(max_weight, e.weight);
    const double epochs = static_cast<double>(options.n_epochs);
    for (const auto& e : graph.edges) {
      // Edges too weak to be sampled even once over the run are dropped.
      if (e.weight * epochs < max_weight) continue;
      const double per_sample = max_weight / e.weight;
      const double per_negative =
          options.negative_samples == 0
              ? std::numeric_limits<double>::infinity()
              : per_sample / static_cast<double>(options.negative_samples);
      samples_.push_back({e.i, e.j, per_sample, per_negative, per_sample, per_negative});
      samples_.push_back({e.j, e.i, per_sample, per_negative, per_sample, per_negative});
    }
  }

  template <typename Access>
  void run_samples(std::size_t epoch, double alpha, std::size_t begin, std::size_t end,
                   std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, n_ - 1);
    const double a = curve_.a;
    const double b = curve_.b;
    const double now = static_cast<double>(epoch);
    std::vector<double> head(dim_);
    std::vector<double> other(dim_);

    for (std::size_t s = begin; s < end; ++s) {
      DirectedSample& sample = samples_[s];
      if (sample.next_sample > now) continue;

      double* yi = coords_.row(sample.head).data();
      double* yj = coords_.row(sample.tail).data();
      for (std::size_t d = 0; d < dim_; ++d) {
        head[d] = Access::load(yi[d]);
        other[d] = Access::load(yj[d]);
      }
      const double dist2 = simd::active().squared_l2(head.data(), other.data(), dim_);
      double coeff = 0.0;
      if (dist2 > 0.0) {
        coeff = -2.0 * a * b * std::pow(dist2, b - 1.0) / (a * std::pow(dist2, b) + 1.0);
      }
      if (!std::isfinite(coeff)) non_finite(epoch, sample.head);
      for (std::size_t d = 0; d < dim_; ++d) {
        const double grad = clip(coeff * (head[d] - other[d]));
        head[d] += grad * alpha;
        Access::store(yi[d], head[d]);
        Access::store(yj[d], Access::load(yj[d]) - grad * alpha);
      }
      if (anchor_slot_[sample.tail] != kNoAnchor) {
        for (std::size_t d = 0; d < dim_; ++d) other[d] = Access::load(yj[d]);
        pull(other.data(), sample.tail, alpha);
        for (std::size_t d = 0; d < dim_; ++d) Access::store(yj[d], other[d]);
      }
      sample.next_sample += sample.epochs_per_sample;

      const auto n_negative =
          static_cast<std::size_t>((now - sample.next_negative) / sample.epochs_per_negative);
      for (std::size_t p = 0; p < n_negative; ++p) {
        const std::size_t k = pick(rng);
        if (k == sample.head) continue;
        double* yk = coords_.row(k).data();
        for (std::size_t d = 0; d < dim_; ++d) other[d] = Access::load(yk[d]);
        const double neg2 = simd::active().squared_l2(head.data(), other.data(), dim_);
        double repel = 0.0;
        if (neg2 > 0.0) {
          repel = 2.0 * b / ((kRepulsionEpsilon + neg2) * (a * std::pow(neg2, b) + 1.0));
        }
        if (!std::isfinite(repel)) non_finite(epoch, sample.head);
        for (std::size_t d = 0; d < dim_; ++d) {
          const double grad = repel > 0.0 ? clip(repel * (head[d] - other[d])) : kGradientClip;
          head[d] += grad * alpha;
          Access::store(yi[d], head[d]);
        }
      }
      sample.next_negative += static_cast<double>(n_negative) * sample.epochs_per_negative;
      if (anchor_slot_[sample.head] != kNoAnchor) {
        pull(head.data(), sample.head, alpha);
        for (std::size_t d = 0; d < dim_; ++d) Access::store(yi[d], head[d]);
      }
    }
  }

  void run(const Anchors* anchors) {
    anchors_ = anchors;
    anchor_slot_.assign(n_, kNoAnchor);
    if (anchors != nullptr && anchors->weight > 0.0) {
      for (std::size_t a = 0; a < anchors->nodes.size(); ++a) anchor_slot_[anchors->nodes[a]] = a;
    }
    auto rng = make_rng(options_.seed, 0x5eed);
    const std::size_t threads = std::max<std::size_t>(1, options_.threads);
    std::vector<std::mt19937_64> worker_rngs;
    for (std::size_t t = 0; t < threads; ++t) worker_rngs.push_back(make_rng(options_.seed, t + 1));

    for (std::size_t epoch = 0; epoch < options_.n_epochs; ++epoch) {
      const double alpha =
          options_.learning_rate *
          (1.0 - static_cast<double>(epoch) / static_cast<double>(options_.n_epochs));
      if (threads == 1 || samples_.size() < threads) {
        run_samples<PlainAccess>(epoch, alpha, 0, samples_.size(), rng);
      } else {
        run_parallel(epoch, alpha, threads, worker_rngs);
      }
      if (anchors != nullptr) pull_anchors(*anchors, alpha);
      check_finite(epoch);
    }
  }

 private:
  void run_parallel(std::size_t epoch, double alpha, std::size_t threads,
                    std::vector<std::mt19937_64>& rngs) {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
      std::vector<std::jthread> workers;
      const std::size_t chunk = (samples_.size() + threads - 1) / threads;
      for (std::size_t t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(samples_.size(), begin + chunk);
        workers.emplace_back([&, t, begin, end] {
          try {
            run_samples<AtomicAccess>(epoch, alpha, begin, end, rngs[t]);
          } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        });
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  // Proximal step for weight * |y - p|^2: exact minimizer of the penalty plus
  // a proximity term, stable for any weight.
  void pull(double* y, std::size_t node, double alpha) const {
    const double c = 2.0 * anchors_->weight * alpha;
    const auto target = anchors_->positions.row(anchor_slot_[node]);
    for (std::size_t d = 0; d < dim_; ++d) y[d] = (y[d] + c * target[d]) / (1.0 + c);
  }

  // Also once per epoch, so anchored nodes without sampled edges are pulled.
  void pull_anchors(const Anchors& anchors, double alpha) {
    const double c = 2.0 * anchors.weight * alpha;
    if (c <= 0.0) return;
    for (std::size_t a = 0; a < anchors.nodes.size(); ++a) {
      auto y = coords_.row(anchors.nodes[a]);
      const auto target = anchors.positions.row(a);
      for (std::size_t d = 0; d < dim_; ++d) y[d] = (y[d] + c * target[d]) / (1.0 + c);
    }
  }

  void check_finite(std::size_t epoch) const {
    for (std::size_t i = 0; i < n_; ++i) {
      for (const double v : coords_.row(i)) {
        if (!std::isfinite(v)) non_finite(epoch, i);
      }
    }
  }

  const EmbedOptions& options_;
  CurveParams curve_;
  RealMatrix& coords_;
  std::size_t n_;
  std::size_t dim_;
  std::vector<DirectedSample> samples_;
  static constexpr std::size_t kNoAnchor = static_cast<std::size_t>(-1);
  const Anchors* anchors_ = nullptr;
  std::vector<std::size_t> anchor_slot_;
};

}  // namespace

double CurveParams::kernel(double distance) const {
  return 1.0 / (1.0 + a * std::pow(distance, 2.0 * b));
}

std::vector<double> curve_grid(double spread) {
  constexpr std::size_t kPoints = 300;
  std::vector<double> grid(kPoints);
  const double end = 3.0 * spread;
  for (std::size_t i = 0; i < kPoints; ++i) {
    grid[i] = end * static_cast<double>(i) / static_cast<double>(kPoints - 1);
  }
  return grid;
}

double curve_target(double distance, double min_dist, double spread) {
  return distance <= min_dist ? 1.0 : std::exp(-(distance - min_dist) / spread);
}

double curve_residual(const CurveParams& params, double min_dist, double spread) {
  double sum = 0.0;
  for (const double d : curve_grid(spread)) {
    const double r = params.kernel(d) - curve_target(d, min_dist, spread);
    sum += r * r;
  }
  return sum;
}

CurveParams curve_params(double min_dist, double spread) {
  if (!(spread > 0.0)) throw ValidationError("spread must be positive");
  if (!(min_dist >= 0.0)) throw ValidationError("min_dist must be non-negative");
  const std::vector<double> grid = curve_grid(spread);

  CurveParams p{1.0, 1.0};
  double cost = curve_residual(p, min_dist, spread);
  double damping = 1e-3;
  for (int iter = 0; iter < 500; ++iter) {
    // Normal equations of the Gauss-Newton step.
    double jtj_aa = 0.0, jtj_ab = 0.0, jtj_bb = 0.0, jtr_a = 0.0, jtr_b = 0.0;
    for (const double d : grid) {
      const double f = p.kernel(d);
      const double r = f - curve_target(d, min_dist, spread);
      double da = 0.0;
      double db = 0.0;
      if (d > 0.0) {
        const double pw = std::pow(d, 2.0 * p.b);
        da = -pw * f * f;
        db = -p.a * pw * 2.0 * std::log(d) * f * f;
      }
      jtj_aa += da * da;
      jtj_ab += da * db;
      jtj_bb += db * db;
      jtr_a += da * r;
      jtr_b += db * r;
    }

    bool improved = false;
    while (damping < 1e12) {
      const double m_aa = jtj_aa * (1.0 + damping);
      const double m_bb = jtj_bb * (1.0 + damping);
      const double det = m_aa * m_bb - jtj_ab * jtj_ab;
      if (det != 0.0) {
        const CurveParams trial{p.a - (m_bb * jtr_a - jtj_ab * jtr_b) / det,
                                p.b - (m_aa * jtr_b - jtj_ab * jtr_a) / det};
        if (trial.a > 0.0 && trial.b > 0.0) {
          const double trial_cost = curve_residual(trial, min_dist, spread);
          if (trial_cost < cost) {
            const double gain = cost - trial_cost;
            p = trial;
            cost = trial_cost;
            damping = std::max(damping / 10.0, 1e-12);
            improved = gain > 1e-15 * std::max(cost, 1e-300);
            break;
          }
        }
      }
      damping *= 10.0;
    }
    if (!improved) break;
  }
  return p;
}

Relation relations(const Layer& prev, const Layer& next) {
  std::unordered_map<std::string_view, std::size_t> prev_index;
  for (std::size_t i = 0; i < prev.size(); ++i) prev_index.emplace(prev.vocab.tags[i], i);
  Relation relation;
  for (std::size_t j = 0; j < next.size(); ++j) {
    if (const auto it = prev_index.find(next.vocab.tags[j]); it != prev_index.end()) {
      relation.push_back({it->second, j});
    }
  }
  return relation;
}

RealMatrix embed_layer(const FuzzyGraph& graph, const EmbedOptions& options,
                       const std::optional<RealMatrix>& init, const Anchors* anchors) {
  if (graph.n == 0) throw ValidationError("cannot embed an empty graph");
  if (options.dim == 0) throw ValidationError("embedding dimension must be positive");
  RealMatrix coords;
  if (init) {
    if (init->rows() != graph.n || init->cols() != options.dim) {
      throw ValidationError("initial layout has shape " + std::to_string(init->rows()) + "x" +
                            std::to_string(init->cols()) + ", expected " +
                            std::to_string(graph.n) + "x" + std::to_string(options.dim));
    }
    coords = *init;
  } else {
    auto rng = make_rng(options.seed, 0x1417);
    coords = random_init(graph.n, options.dim, rng);
  }
  if (anchors != nullptr) {
    if (anchors->positions.rows() != anchors->nodes.size() ||
        (!anchors->nodes.empty() && anchors->positions.cols() != options.dim)) {
      throw ValidationError("anchor positions do not match anchor nodes");
    }
    for (const std::size_t node : anchors->nodes) {
      if (node >= graph.n) throw ValidationError("anchor node out of range");
    }
  }
  if (graph.n == 1) return coords;

  LayoutOptimizer optimizer(graph, options, coords);
  optimizer.run(anchors);
  return coords;
}

double layout_objective(const FuzzyGraph& graph, const RealMatrix& coords,
                        const CurveParams& curve) {
  constexpr double kFloor = 1e-12;
  const RealMatrix weights = graph.dense();
  double total = 0.0;
  for (std::size_t i = 0; i < graph.n; ++i) {
    for (std::size_t j = i + 1; j < graph.n; ++j) {
      const double dist = std::sqrt(
          simd::active().squared_l2(coords.row(i).data(), coords.row(j).data(), coords.cols()));
      const double q = std::clamp(curve.kernel(dist), kFloor, 1.0 - kFloor);
      const double w = weights(i, j);
      total -= w * std::log(q) + (1.0 - w) * std::log(1.0 - q);
    }
  }
  return total;
}

FuzzyGraph layer_graph(const Layer& layer, const GraphOptions& options) {
  if (layer.size() < 2) return FuzzyGraph{layer.size(), {}};
  const KnnGraph knn = knn_graph(layer, options.n_neighbors, options.transform);
  return fuzzy_graph(knn, knn.k);
}

std::vector<EmbeddingFrame> embed_chain(std::span<const Layer> layers,
                                        std::span<const FuzzyGraph> graphs, double lambda,
                                        const EmbedOptions& options) {
  if (layers.size() != graphs.size()) throw ValidationError("one graph per layer is required");
  if (lambda < 0.0) throw ValidationError("alignment weight must be non-negative");
  for (std::size_t t = 1; t < layers.size(); ++t) {
    if (layers[t].key.group != layers[0].key.group) {
      throw ValidationError("chain mixes groups " + layers[0].key.group + " and " +
                            layers[t].key.group);
    }
    if (layers[t].key.period <= layers[t - 1].key.period) {
      throw ValidationError("chain layers must be in increasing period order");
    }
  }

  std::vector<EmbeddingFrame> frames;
  frames.reserve(layers.size());
  for (std::size_t t = 0; t < layers.size(); ++t) {
    const Layer& layer = layers[t];
    EmbedOptions frame_options = options;
    frame_options.seed = options.seed * 1000003ULL + t;

    EmbeddingFrame frame;
    frame.key = layer.key;
    frame.space = Space::intermediate;
    frame.tags = layer.vocab.tags;
    if (layer.size() == 0) {
      frame.coords = RealMatrix(0, options.dim);
      frames.push_back(std::move(frame));
      continue;
    }

    const bool adjacent = t > 0 && layer.key.period == layers[t - 1].key.period + 1;
    const Relation relation = adjacent ? relations(layers[t - 1], layer) : Relation{};
    if (relation.empty()) {
      frame.coords = embed_layer(graphs[t], frame_options);
      frames.push_back(std::move(frame));
      continue;
    }

    const RealMatrix& previous = frames[t - 1].coords;
    auto rng = make_rng(frame_options.seed, 0xC4A1);
    std::uniform_real_distribution<double> jitter(-kJitter, kJitter);
    std::uniform_real_distribution<double> uniform(-kInitRange, kInitRange);

    const std::size_t n = layer.size();
    RealMatrix init(n, options.dim, 0.0);
    std::vector<bool> placed(n, false);
    Anchors anchors;
    anchors.weight = lambda;
    anchors.positions = RealMatrix(relation.size(), options.dim);
    for (std::size_t r = 0; r < relation.size(); ++r) {
      const auto [p, q] = relation[r];
      for (std::size_t d = 0; d < options.dim; ++d) {
        init(q, d) = previous(p, d) + jitter(rng);
        anchors.positions(r, d) = previous(p, d);
      }
      placed[q] = true;
      anchors.nodes.push_back(q);
    }
    // New tags start at the co-occurrence weighted mean of placed neighbors.
    for (std::size_t q = 0; q < n; ++q) {
      if (placed[q]) continue;
      double total = 0.0;
      std::vector<double> mean(options.dim, 0.0);
      for (std::size_t r = 0; r < n; ++r) {
        const auto w = static_cast<double>(layer.cooc(q, r));
        if (w <= 0.0 || !placed[r]) continue;
        total += w;
        for (std::size_t d = 0; d < options.dim; ++d) mean[d] += w * init(r, d);
      }
      for (std::size_t d = 0; d < options.dim; ++d) {
        init(q, d) = total > 0.0 ? mean[d] / total + jitter(rng) : uniform(rng);
      }
      placed[q] = true;
    }

    frame.coords = embed_layer(graphs[t], frame_options, init, &anchors);
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace tagalign
