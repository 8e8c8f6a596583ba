#pragma once

// Open-set identification (1-NN over an embedding database with a distance
// threshold), reference embedders, closed-set classifiers and the metrics
// used to evaluate them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "egomem/errors.hpp"
#include "egomem/features.hpp"
#include "egomem/image.hpp"
#include "egomem/random.hpp"

namespace egomem::recognition {

/// Shipped operating points for the open-set classifier.
inline constexpr double kFaceThreshold = 0.4;
inline constexpr double kVoiceThreshold = 1.7;

using Embedding = std::vector<double>;

inline double euclidean(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw DomainError("embedding dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

class EmbeddingDb {
 public:
  struct Entry {
    std::string label;
    Embedding embedding;
  };

  EmbeddingDb() = default;
  explicit EmbeddingDb(std::size_t dim) : dim_(dim) {}

  void enroll(std::string label, Embedding e) {
    if (dim_ == 0) dim_ = e.size();
    if (e.size() != dim_ || dim_ == 0) throw DomainError("embedding dimension mismatch on enroll");
    for (double v : e)
      if (!std::isfinite(v)) throw DomainError("non-finite embedding entry");
    entries_.push_back({std::move(label), std::move(e)});
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.label);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  /// Index of the nearest entry and its distance (first wins on ties).
  std::pair<std::size_t, double> nearest(const Embedding& q) const {
    if (entries_.empty()) throw DomainError("query against empty embedding database");
    if (q.size() != dim_) throw DomainError("query dimension mismatch");
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      double d = euclidean(entries_[i].embedding, q);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return {best, bd};
  }

  /// Text form: first line "dim <d>", then "<label>\t<v0> <v1> ...".
  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "dim " << dim_ << '\n';
    for (const auto& e : entries_) {
      os << e.label << '\t';
      for (std::size_t i = 0; i < e.embedding.size(); ++i) os << (i ? " " : "") << e.embedding[i];
      os << '\n';
    }
    return os.str();
  }

  static EmbeddingDb from_text(const std::string& text) {
    std::istringstream is(text);
    std::string line, tag;
    std::size_t dim = 0;
    if (!std::getline(is, line)) throw DomainError("empty embedding database text");
    std::istringstream hs(line);
    if (!(hs >> tag >> dim) || tag != "dim") throw DomainError("bad embedding database header");
    EmbeddingDb db(dim);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) throw DomainError("bad embedding line");
      Embedding e;
      std::istringstream vs(line.substr(tab + 1));
      double v;
      while (vs >> v) e.push_back(v);
      db.enroll(line.substr(0, tab), std::move(e));
    }
    return db;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<Entry> entries_;
};

struct Known {
  std::string label;
  double distance;
};
struct Unknown {
  double distance;
};
using OpenSetVerdict = std::variant<Known, Unknown>;

inline double distance_of(const OpenSetVerdict& v) {
  return std::visit([](const auto& x) { return x.distance; }, v);
}

/// k = 1 nearest neighbour; Known iff the nearest distance is <= t.
inline OpenSetVerdict classify_open_set(const EmbeddingDb& db, const Embedding& query, double t) {
  if (!(t > 0.0)) throw DomainError("open-set threshold must be positive");
  auto [idx, d] = db.nearest(query);
  if (d <= t) return Known{db.entries()[idx].label, d};
  return Unknown{d};
}

// ------------------------------------------------------------- embedders

/// Block-averaged aligned face, zero-mean and unit-norm.
struct PixelEmbedder {
  int grid = 15;

  Embedding operator()(const GrayImage& face) const {
    if (face.empty() || grid <= 0 || face.width < grid || face.height < grid)
      throw DomainError("pixel embedder: face smaller than grid");
    Embedding e(static_cast<std::size_t>(grid * grid), 0.0);
    std::vector<int> count(e.size(), 0);
    for (int y = 0; y < face.height; ++y)
      for (int x = 0; x < face.width; ++x) {
        auto cell = static_cast<std::size_t>((y * grid / face.height) * grid + x * grid / face.width);
        e[cell] += face.at(x, y);
        ++count[cell];
      }
    for (std::size_t i = 0; i < e.size(); ++i) e[i] /= count[i];
    const double mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
    double norm = 0.0;
    for (auto& v : e) {
      v -= mean;
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm > 0)
      for (auto& v : e) v /= norm;
    return e;
  }
};

/// Per-filter mean energy over all frames; optionally log-compressed and
/// then made zero-mean and unit-norm (a spectral-shape vector).
struct EnergyEmbedder {
  bool log_compress = false;
  bool normalize = false;
  double floor = 1e-10;

  Embedding operator()(const features::Gammatonegram& g) const {
    Embedding e(static_cast<std::size_t>(g.rows), 0.0);
    for (int r = 0; r < g.rows; ++r) {
      double s = 0.0;
      for (int c = 0; c < g.cols; ++c) s += g.at(r, c);
      e[static_cast<std::size_t>(r)] = s / g.cols;
    }
    if (log_compress)
      for (auto& v : e) v = std::log(std::max(v, floor));
    if (normalize) {
      const double mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
      double norm = 0.0;
      for (auto& v : e) {
        v -= mean;
        norm += v * v;
      }
      norm = std::sqrt(norm);
      if (norm > 0)
        for (auto& v : e) v /= norm;
    }
    return e;
  }
};

/// Test sample for the oracle embedder: the identity is known to it.
struct OracleSample {
  std::string identity;
  std::uint64_t index = 0;
};

/// Per-identity fixed centroid plus bounded jitter. Centroids lie on
/// distinct scaled axes, so any two are exactly `separation` apart.
class OracleEmbedder {
 public:
  OracleEmbedder(std::size_t dim, double separation, double jitter, std::uint64_t seed = 0)
      : dim_(dim), separation_(separation), jitter_(jitter), seed_(seed) {
    if (dim == 0 || !(separation > 0) || !(jitter >= 0)) throw DomainError("bad oracle embedder parameters");
  }

  Embedding centroid(const std::string& identity) {
    auto it = axes_.find(identity);
    if (it == axes_.end()) {
      if (axes_.size() >= dim_) throw DomainError("oracle embedder ran out of axes");
      it = axes_.emplace(identity, axes_.size()).first;
    }
    Embedding c(dim_, 0.0);
    c[it->second] = separation_ / std::sqrt(2.0);
    return c;
  }

  Embedding operator()(const OracleSample& s) {
    Embedding e = centroid(s.identity);
    Rng rng(derive_seed(derive_seed(seed_, s.identity), s.index));
    Embedding dir(dim_);
    double n = 0.0;
    for (auto& v : dir) {
      v = gaussian(rng, 0.0, 1.0);
      n += v * v;
    }
    n = std::sqrt(n);
    const double radius = uniform(rng, 0.0, jitter_);
    for (std::size_t i = 0; i < dim_; ++i) e[i] += n > 0 ? radius * dir[i] / n : 0.0;
    return e;
  }

 private:
  std::size_t dim_;
  double separation_, jitter_;
  std::uint64_t seed_;
  std::map<std::string, std::size_t> axes_;
};

// --------------------------------------------------------- open-set metrics

/// Ground truth for a query: the enrolled label, or nullopt for an impostor.
using QueryTruth = std::optional<std::string>;

struct OpenSetCounts {
  std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
};

/// A Known verdict with the wrong label on an enrolled query counts as FN.
inline OpenSetCounts count_outcomes(const std::vector<OpenSetVerdict>& verdicts, const std::vector<QueryTruth>& truth) {
  if (verdicts.size() != truth.size()) throw DomainError("verdict/truth length mismatch");
  OpenSetCounts c;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto* k = std::get_if<Known>(&verdicts[i]);
    if (truth[i]) {
      (k && k->label == *truth[i]) ? ++c.tp : ++c.fn;
    } else {
      k ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

/// TP / (TP + FN); nullopt when there are no enrolled queries.
inline std::optional<double> positive_accuracy(const OpenSetCounts& c) {
  if (c.tp + c.fn == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

/// TN / (TN + FP); nullopt when there are no impostor queries.
inline std::optional<double> negative_accuracy(const OpenSetCounts& c) {
  if (c.tn + c.fp == 0) return std::nullopt;
  return static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
}

inline std::optional<double> positive_accuracy(const std::vector<OpenSetVerdict>& v, const std::vector<QueryTruth>& t) {
  return positive_accuracy(count_outcomes(v, t));
}
inline std::optional<double> negative_accuracy(const std::vector<OpenSetVerdict>& v, const std::vector<QueryTruth>& t) {
  return negative_accuracy(count_outcomes(v, t));
}

struct SweepPoint {
  double threshold;
  double known_rate;
  std::optional<double> positive;
  std::optional<double> negative;
};

inline std::vector<SweepPoint> threshold_sweep(const EmbeddingDb& db, const std::vector<Embedding>& queries,
                                               const std::vector<QueryTruth>& truth,
                                               const std::vector<double>& thresholds) {
  std::vector<SweepPoint> out;
  for (double t : thresholds) {
    std::vector<OpenSetVerdict> v;
    std::size_t known = 0;
    for (const auto& q : queries) {
      v.push_back(classify_open_set(db, q, t));
      known += std::holds_alternative<Known>(v.back());
    }
    auto c = count_outcomes(v, truth);
    out.push_back({t, queries.empty() ? 0.0 : static_cast<double>(known) / static_cast<double>(queries.size()),
                   positive_accuracy(c), negative_accuracy(c)});
  }
  return out;
}

// ------------------------------------------------------ closed-set models

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<std::string> classes)
      : classes_(std::move(classes)), counts_(classes_.size() * classes_.size(), 0) {}

  void add(std::size_t truth, std::size_t predicted) { ++counts_[truth * classes_.size() + predicted]; }
  std::size_t operator()(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_.size() + predicted];
  }
  std::size_t n_classes() const noexcept { return classes_.size(); }
  const std::vector<std::string>& classes() const noexcept { return classes_; }

  std::size_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }
  std::size_t trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < classes_.size(); ++i) s += (*this)(i, i);
    return s;
  }
  double accuracy() const { return total() ? static_cast<double>(trace()) / static_cast<double>(total()) : 0.0; }
  double chance_level() const { return classes_.empty() ? 0.0 : 1.0 / static_cast<double>(classes_.size()); }

  /// Tab-separated; first row is the predicted-class header.
  std::string to_text() const {
    std::ostringstream os;
    os << "truth\\pred";
    for (const auto& c : classes_) os << '\t' << c;
    os << '\n';
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      os << classes_[i];
      for (std::size_t j = 0; j < classes_.size(); ++j) os << '\t' << (*this)(i, j);
      os << '\n';
    }
    return os.str();
  }

  /// Row-normalized heatmap, `cell` pixels per entry.
  GrayImage heatmap(int cell = 16) const {
    const int n = static_cast<int>(classes_.size());
    GrayImage img(std::max(1, n * cell), std::max(1, n * cell));
    for (int i = 0; i < n; ++i) {
      std::size_t row = 0;
      for (int j = 0; j < n; ++j) row += (*this)(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      for (int j = 0; j < n; ++j) {
        const double frac = row ? static_cast<double>((*this)(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) / row : 0.0;
        const auto v = static_cast<std::uint8_t>(std::lround(255.0 * frac));
        for (int y = i * cell; y < (i + 1) * cell; ++y)
          for (int x = j * cell; x < (j + 1) * cell; ++x) img.at(x, y) = v;
      }
    }
    return img;
  }

 private:
  std::vector<std::string> classes_;
  std::vector<std::size_t> counts_;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Rows are samples.
inline Matrix to_matrix(const std::vector<Embedding>& xs) {
  if (xs.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(xs.front().size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != xs.front().size()) throw DomainError("ragged feature set");
    for (std::size_t j = 0; j < xs[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i][j];
  }
  return m;
}

struct NearestCentroid {
  Matrix centroids;  // one row per class

  std::size_t predict(const Embedding& x) const {
    Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::Index best = 0;
    (centroids.rowwise() - v.transpose()).rowwise().squaredNorm().minCoeff(&best);
    return static_cast<std::size_t>(best);
  }
};

/// Multinomial logistic regression on standardized features.
struct LinearSoftmax {
  Matrix weights;  // classes x dim
  Vector bias;     // classes
  Vector mean, scale;
  double l2 = 1e-3;

  struct LossGrad {
    double loss;
    Matrix grad_w;
    Vector grad_b;
  };

  /// Mean cross-entropy plus (l2 / 2) ||W||^2 on already standardized rows.
  static LossGrad loss_and_gradient(const Matrix& w, const Vector& b, const Matrix& x, const std::vector<std::size_t>& y,
                                    double l2) {
    const auto n = x.rows();
    Matrix logits = (x * w.transpose()).rowwise() + b.transpose();
    LossGrad out{0.0, Matrix::Zero(w.rows(), w.cols()), Vector::Zero(b.size())};
    Matrix delta(n, w.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mx = logits.row(i).maxCoeff();
      Vector p = (logits.row(i).array() - mx).exp().transpose();
      const double z = p.sum();
      p /= z;
      out.loss -= std::log(std::max(p(static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])), 1e-300));
      p(static_cast<Eigen::Index>(y[static_cast<std::size_t>(i)])) -= 1.0;
      delta.row(i) = p.transpose();
    }
    out.loss = out.loss / static_cast<double>(n) + 0.5 * l2 * w.squaredNorm();
    out.grad_w = delta.transpose() * x / static_cast<double>(n) + l2 * w;
    out.grad_b = delta.colwise().sum().transpose() / static_cast<double>(n);
    return out;
  }

  Vector standardize(const Embedding& x) const {
    Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
    return (v - mean).cwiseQuotient(scale);
  }

  std::size_t predict(const Embedding& x) const {
    Vector s = weights * standardize(x) + bias;
    Eigen::Index best = 0;
    s.maxCoeff(&best);
    return static_cast<std::size_t>(best);
  }
};

enum class ClassifierKind { Centroid, Linear };

struct TrainOptions {
  ClassifierKind kind = ClassifierKind::Centroid;
  int epochs = 300;
  double learning_rate = 0.5;
  double l2 = 1e-3;
};

struct ClosedSetModel {
  std::vector<std::string> classes;
  std::variant<NearestCentroid, LinearSoftmax> model;
  std::vector<double> loss_history;  // linear model only

  std::size_t predict_index(const Embedding& x) const {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
  }
  const std::string& predict(const Embedding& x) const { return classes[predict_index(x)]; }
};

/// Trains on the declared class list; every class needs at least one sample.
inline ClosedSetModel train_closed_set(const std::vector<Embedding>& features, const std::vector<std::string>& labels,
                                       std::vector<std::string> classes, const TrainOptions& opt = {}) {
  if (features.size() != labels.size()) throw ConfigError("feature/label count mismatch");
  if (classes.size() < 2) throw ConfigError("closed-set training needs at least two classes");
  std::vector<std::size_t> y;
  std::vector<std::size_t> per_class(classes.size(), 0);
  for (const auto& l : labels) {
    auto it = std::find(classes.begin(), classes.end(), l);
    if (it == classes.end()) throw ConfigError("label not in class list: " + l);
    y.push_back(static_cast<std::size_t>(it - classes.begin()));
    ++per_class[y.back()];
  }
  for (std::size_t c = 0; c < classes.size(); ++c)
    if (per_class[c] == 0) throw ConfigError("class has no training samples: " + classes[c]);

  const Matrix x = to_matrix(features);
  ClosedSetModel out{classes, NearestCentroid{}, {}};
  if (opt.kind == ClassifierKind::Centroid) {
    Matrix c = Matrix::Zero(static_cast<Eigen::Index>(classes.size()), x.cols());
    for (std::size_t i = 0; i < y.size(); ++i) c.row(static_cast<Eigen::Index>(y[i])) += x.row(static_cast<Eigen::Index>(i));
    for (std::size_t k = 0; k < classes.size(); ++k) c.row(static_cast<Eigen::Index>(k)) /= static_cast<double>(per_class[k]);
    out.model = NearestCentroid{std::move(c)};
    return out;
  }

  LinearSoftmax m;
  m.l2 = opt.l2;
  m.mean = x.colwise().mean().transpose();
  m.scale = ((x.rowwise() - m.mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (Eigen::Index j = 0; j < m.scale.size(); ++j)
    if (m.scale(j) < 1e-12) m.scale(j) = 1.0;
  const Matrix xs = (x.rowwise() - m.mean.transpose()).array().rowwise() / m.scale.transpose().array();
  m.weights = Matrix::Zero(static_cast<Eigen::Index>(classes.size()), x.cols());
  m.bias = Vector::Zero(static_cast<Eigen::Index>(classes.size()));
  for (int e = 0; e < opt.epochs; ++e) {
    auto lg = LinearSoftmax::loss_and_gradient(m.weights, m.bias, xs, y, m.l2);
    out.loss_history.push_back(lg.loss);
    m.weights -= opt.learning_rate * lg.grad_w;
    m.bias -= opt.learning_rate * lg.grad_b;
  }
  out.loss_history.push_back(LinearSoftmax::loss_and_gradient(m.weights, m.bias, xs, y, m.l2).loss);
  out.model = std::move(m);
  return out;
}

inline ClosedSetModel train_closed_set(const std::vector<Embedding>& features, const std::vector<std::string>& labels,
                                       const TrainOptions& opt = {}) {
  std::vector<std::string> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return train_closed_set(features, labels, std::move(classes), opt);
}

/// Confusion matrix over the model's classes. Test labels outside the
/// class list are rejected.
inline ConfusionMatrix eval_closed_set(const ClosedSetModel& model, const std::vector<Embedding>& features,
                                       const std::vector<std::string>& labels) {
  if (features.size() != labels.size()) throw ConfigError("feature/label count mismatch");
  ConfusionMatrix cm(model.classes);
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto it = std::find(model.classes.begin(), model.classes.end(), labels[i]);
    if (it == model.classes.end()) throw ConfigError("test label not in class list: " + labels[i]);
    cm.add(static_cast<std::size_t>(it - model.classes.begin()), model.predict_index(features[i]));
  }
  return cm;
}

}  // namespace egomem::recognition
