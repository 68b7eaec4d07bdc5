#pragma once

// 3-DoF ground-to-satellite (G2S) measurement model.
//
// A prediction for frame k is a body-frame correction (x longitudinal, y
// lateral, theta azimuth) of the pose it was queried at. The pose it claims
// is T_query * [Rz(theta), (x, y, 0)]; z, roll and pitch come from the query.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "g2sfusion/geometry.h"
#include "g2sfusion/trajectory.h"

namespace g2sfusion {

struct G2SDelta {
  int frame = 0;
  double x = 0.0;      // m, body forward
  double y = 0.0;      // m, body left
  double theta = 0.0;  // rad, azimuth change

  Vec2 shift() const { return {x, y}; }
};

/// [Rz(theta), (x, y, 0)].
Pose delta_pose(const G2SDelta& delta);

/// Absolute pose claimed by a prediction: T_query * delta_pose(delta).
Pose compose_correction(const Pose& query, const G2SDelta& delta);

/// Inverse of compose_correction on the 3-DoF subspace.
G2SDelta extract_delta(const Pose& query, const Pose& claim, int frame = 0);

/// Re-expresses a prediction about a new query pose, holding the claimed
/// absolute pose fixed.
G2SDelta reexpress(const G2SDelta& delta, const Pose& old_query, const Pose& new_query);

class G2SProvider {
 public:
  virtual ~G2SProvider() = default;

  /// Prediction for `frame` given the current estimate of its pose, or
  /// nullopt when the provider has nothing for that frame.
  virtual std::optional<G2SDelta> query(int frame, const Pose& query_pose) const = 0;
};

struct OracleNoise {
  double sigma_x = 0.4;
  double sigma_y = 0.2;
  double sigma_theta = deg2rad(0.2);
  double outlier_rate = 0.0;
  double rotation_range = deg2rad(10.0);
  double window_half = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct OracleSample {
  G2SDelta delta;
  bool outlier = false;
};

/// Stand-in for a cross-view registration network: the true correction plus
/// i.i.d. Gaussian noise, or with probability outlier_rate a uniform draw over
/// the search window. Draws are a pure function of (seed, frame, query pose).
class SyntheticOracle final : public G2SProvider {
 public:
  SyntheticOracle(Trajectory ground_truth, OracleNoise noise);

  std::optional<G2SDelta> query(int frame, const Pose& query_pose) const override;

  /// Same draw as query() with its inlier/outlier label. Throws kFrameOutOfRange.
  OracleSample sample(int frame, const Pose& query_pose) const;

  const OracleNoise& noise() const { return noise_; }
  const Trajectory& ground_truth() const { return gt_; }

 private:
  Trajectory gt_;
  OracleNoise noise_;
};

/// Noise-model query against a ground-truth trajectory.
G2SDelta oracle_query(const Trajectory& gt, const OracleNoise& noise, int frame, const Pose& query_pose);

/// A stored prediction anchored to the pose it was originally computed at.
struct G2SRecord {
  G2SDelta delta;
  Pose query_pose;
};

/// Replays precomputed predictions, re-expressed about whatever pose is asked.
class FileProvider final : public G2SProvider {
 public:
  explicit FileProvider(std::map<int, G2SRecord> records);

  /// `predictions`: lines "k x y theta". `query_poses`: KITTI pose file whose
  /// line k holds the pose prediction k was computed at.
  static FileProvider load(const std::filesystem::path& predictions, const std::filesystem::path& query_poses);

  std::optional<G2SDelta> query(int frame, const Pose& query_pose) const override;

  const std::map<int, G2SRecord>& records() const { return records_; }

 private:
  std::map<int, G2SRecord> records_;
};

std::vector<G2SDelta> read_predictions(std::istream& is, const std::string& source = "<stream>");
void write_predictions(std::ostream& os, const std::vector<G2SDelta>& deltas);

}  // namespace g2sfusion
