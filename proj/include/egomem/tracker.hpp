#pragma once

// Multi-object face tracking: one constant-velocity Kalman filter per track,
// IoU association solved with the Hungarian method.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "egomem/errors.hpp"
#include "egomem/hungarian.hpp"

namespace egomem {

/// Pixel-space box, (x1, y1) top-left, (x2, y2) bottom-right.
struct BoundingBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }
  double cx() const noexcept { return 0.5 * (x1 + x2); }
  double cy() const noexcept { return 0.5 * (y1 + y2); }

  bool valid() const noexcept {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
           x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2;
  }
  void validate() const {
    if (!valid()) throw DomainError("invalid bounding box");
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Intersection over union; 0 for disjoint boxes.
inline double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

using TrackId = std::int64_t;

struct TrackerParams {
  double iou_gate = 0.3;
  int max_misses = 5;
  int min_hits = 3;
  double process_noise = 1.0;
  double measurement_noise = 1.0;

  void validate() const {
    if (!(iou_gate > 0.0 && iou_gate < 1.0)) throw ConfigError("iou_gate must lie in (0,1)");
    if (max_misses < 1) throw ConfigError("max_misses must be >= 1");
    if (min_hits < 1) throw ConfigError("min_hits must be >= 1");
    if (!(process_noise >= 0.0) || !(measurement_noise > 0.0))
      throw ConfigError("noise scales must be non-negative (measurement positive)");
  }
};

using TrackState = Eigen::Matrix<double, 7, 1>;
using TrackCov = Eigen::Matrix<double, 7, 7>;

/// State layout: [cx, cy, area, aspect(w/h), vcx, vcy, varea].
struct Track {
  TrackId id = 0;
  TrackState state = TrackState::Zero();
  TrackCov covariance = TrackCov::Identity();
  int hits = 0;
  int age = 0;
  int misses = 0;

  BoundingBox box() const noexcept {
    const double w = std::sqrt(state(2) * state(3));
    const double h = state(2) / w;
    return {state(0) - w / 2, state(1) - h / 2, state(0) + w / 2, state(1) + h / 2};
  }
  bool confirmed(const TrackerParams& p) const noexcept { return hits >= p.min_hits; }
};

namespace kalman {

inline Eigen::Matrix<double, 4, 1> measurement(const BoundingBox& b) {
  return {b.cx(), b.cy(), b.area(), b.width() / b.height()};
}

inline TrackCov transition() {
  TrackCov f = TrackCov::Identity();
  f(0, 4) = f(1, 5) = f(2, 6) = 1.0;
  return f;
}

inline Eigen::Matrix<double, 4, 7> observation() {
  Eigen::Matrix<double, 4, 7> h = Eigen::Matrix<double, 4, 7>::Zero();
  h.leftCols<4>().setIdentity();
  return h;
}

inline TrackCov process_noise(const TrackerParams& p) {
  TrackState d;
  d << 1, 1, 1, 1, 1e-2, 1e-2, 1e-4;
  return TrackCov(d.asDiagonal()) * p.process_noise;
}

inline Eigen::Matrix4d measurement_noise(const TrackerParams& p) {
  return Eigen::Vector4d(1, 1, 10, 10).asDiagonal() * p.measurement_noise;
}

inline void symmetrize(TrackCov& p) { p = 0.5 * (p + p.transpose()); }

// Keeps the box parameterization meaningful after a filter step.
inline void clamp_shape(TrackState& x) {
  x(2) = std::max(x(2), 1e-3);
  x(3) = std::max(x(3), 1e-3);
}

}  // namespace kalman

inline Track make_track(TrackId id, const BoundingBox& det) {
  Track t;
  t.id = id;
  t.state.head<4>() = kalman::measurement(det);
  TrackState d;
  d << 10, 10, 10, 10, 1e4, 1e4, 1e4;
  t.covariance = d.asDiagonal();
  t.hits = 1;
  return t;
}

/// Constant-velocity time update.
inline Track predict(Track t, const TrackerParams& params) {
  if (t.state(2) + t.state(6) <= 0) t.state(6) = 0.0;
  const TrackCov f = kalman::transition();
  t.state = f * t.state;
  t.covariance = f * t.covariance * f.transpose() + kalman::process_noise(params);
  kalman::symmetrize(t.covariance);
  kalman::clamp_shape(t.state);
  ++t.age;
  ++t.misses;
  return t;
}

/// Measurement update (Joseph form, which keeps P symmetric PSD).
inline Track correct(Track t, const BoundingBox& det, const TrackerParams& params) {
  const auto h = kalman::observation();
  const Eigen::Matrix4d r = kalman::measurement_noise(params);
  const Eigen::Vector4d y = kalman::measurement(det) - h * t.state;
  const Eigen::Matrix4d s = h * t.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 7, 4> k = t.covariance * h.transpose() * s.inverse();
  t.state += k * y;
  const TrackCov ikh = TrackCov::Identity() - k * h;
  t.covariance = ikh * t.covariance * ikh.transpose() + k * r * k.transpose();
  kalman::symmetrize(t.covariance);
  kalman::clamp_shape(t.state);
  t.misses = 0;
  ++t.hits;
  return t;
}

struct TrackerUpdate {
  std::vector<std::pair<TrackId, std::size_t>> matched;  // (track id, detection index)
  std::vector<TrackId> new_track_ids;
  std::vector<TrackId> removed_track_ids;
};

/// Owns the live track set and the id counter; ids are never reused.
class Tracker {
 public:
  explicit Tracker(TrackerParams params = {}) : params_(params) { params_.validate(); }

  const TrackerParams& params() const noexcept { return params_; }
  const std::vector<Track>& tracks() const noexcept { return tracks_; }

  const Track* find(TrackId id) const noexcept {
    auto it = std::find_if(tracks_.begin(), tracks_.end(), [&](const Track& t) { return t.id == id; });
    return it == tracks_.end() ? nullptr : &*it;
  }

  TrackerUpdate step(std::span<const BoundingBox> detections) {
    for (const auto& d : detections) d.validate();
    TrackerUpdate out;
    for (auto& t : tracks_) t = predict(std::move(t), params_);

    std::vector<char> det_used(detections.size(), 0);
    if (!tracks_.empty() && !detections.empty()) {
      CostMatrix cost(tracks_.size(), detections.size());
      for (std::size_t i = 0; i < tracks_.size(); ++i) {
        const BoundingBox pb = tracks_[i].box();
        for (std::size_t j = 0; j < detections.size(); ++j) cost(i, j) = 1.0 - iou(pb, detections[j]);
      }
      for (auto [i, j] : hungarian_assign(cost)) {
        if (1.0 - cost(i, j) < params_.iou_gate) continue;
        tracks_[i] = correct(std::move(tracks_[i]), detections[j], params_);
        det_used[j] = 1;
        out.matched.emplace_back(tracks_[i].id, j);
      }
    }

    for (std::size_t j = 0; j < detections.size(); ++j) {
      if (det_used[j]) continue;
      tracks_.push_back(make_track(next_id_++, detections[j]));
      out.new_track_ids.push_back(tracks_.back().id);
    }

    std::erase_if(tracks_, [&](const Track& t) {
      if (t.misses > params_.max_misses) {
        out.removed_track_ids.push_back(t.id);
        return true;
      }
      return false;
    });
    return out;
  }

 private:
  TrackerParams params_;
  std::vector<Track> tracks_;
  TrackId next_id_ = 1;
};

}  // namespace egomem
