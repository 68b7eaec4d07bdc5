#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "g2sfusion/geometry.h"

namespace g2sfusion {

struct TrajectoryNode {
  int index = 0;
  std::optional<double> timestamp;
  Pose pose;
};

/// Ordered pose sequence with contiguous indices starting at 0.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(const std::vector<Pose>& poses);
  Trajectory(const std::vector<Pose>& poses, const std::vector<double>& timestamps);

  /// Validates that indices run 0, 1, 2, ... and throws kInvalidTrajectory otherwise.
  static Trajectory from_nodes(std::vector<TrajectoryNode> nodes);

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  const Pose& pose(std::size_t k) const { return nodes_.at(k).pose; }
  void set_pose(std::size_t k, const Pose& pose) { nodes_.at(k).pose = pose; }
  const TrajectoryNode& node(std::size_t k) const { return nodes_.at(k); }
  const std::vector<TrajectoryNode>& nodes() const { return nodes_; }
  std::vector<Pose> poses() const;

 private:
  std::vector<TrajectoryNode> nodes_;
};

enum class PoseFormat { kKitti, kTum };

PoseFormat parse_pose_format(std::string_view name);
std::string_view to_string(PoseFormat format);

// KITTI files store camera poses (x right, y down, z forward). Internally the
// same motion is expressed with x forward, y left, z up: T' = P T P^T.
Pose kitti_to_canonical(const Pose& camera_pose);
Pose canonical_to_kitti(const Pose& pose);

/// Row-major 3x4 [R | t] in KITTI camera convention, converted to canonical.
/// Rotations drifting by more than 1e-6 are re-projected onto SO(3); more
/// than 1e-3 (or a reflection) throws kNonRigidPose.
Pose parse_kitti_pose(const std::vector<double>& twelve, const std::string& source, int line);
void format_kitti_pose(std::ostream& os, const Pose& pose);

Trajectory read_trajectory(std::istream& is, PoseFormat format, const std::string& source = "<stream>");
Trajectory load_trajectory(const std::filesystem::path& path, PoseFormat format);
void write_trajectory(std::ostream& os, const Trajectory& trajectory, PoseFormat format);
void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory, PoseFormat format);

/// T_i^-1 * T_j.
Pose relative_pose(const Pose& t_i, const Pose& t_j);

struct OdometryEdge {
  int i = 0;
  int j = 1;
  Pose relative;
  int covis_count = 0;
  double weight = 1.0;

  bool is_loop() const { return j > i + 1; }
};

/// weight = sqrt(N_ij) / mean_over_edges(sqrt(N)). Throws kEmptyEdgeSet or
/// kAllZeroCovisibility.
std::vector<OdometryEdge> vo_weights(std::vector<OdometryEdge> edges);

/// One line "i j N" of a covisibility file.
struct CovisRecord {
  int i = 0;
  int j = 0;
  int count = 0;
};

std::vector<CovisRecord> read_covisibility(std::istream& is, const std::string& source = "<stream>");
std::vector<CovisRecord> load_covisibility(const std::filesystem::path& path);
void write_covisibility(std::ostream& os, const std::vector<CovisRecord>& records);

/// One line "i j r00 r01 r02 tx r10 ... tz" of a loop-closure edge-pose file.
struct EdgePoseRecord {
  int i = 0;
  int j = 0;
  Pose relative;
};

std::vector<EdgePoseRecord> read_edge_poses(std::istream& is, const std::string& source = "<stream>");
std::vector<EdgePoseRecord> load_edge_poses(const std::filesystem::path& path);
void write_edge_poses(std::ostream& os, const std::vector<EdgePoseRecord>& records);

/// Builds the odometry graph: a consecutive edge per adjacent pair (relative
/// pose from the trajectory) plus loop closures. Consecutive edges absent
/// from the covisibility records get the records' median count. Without
/// covisibility records every weight is 1.
std::vector<OdometryEdge> build_edges(const Trajectory& trajectory,
                                      const std::optional<std::vector<CovisRecord>>& covis,
                                      const std::vector<EdgePoseRecord>& loop_poses = {});

std::vector<CovisRecord> covis_records(const std::vector<OdometryEdge>& edges);

}  // namespace g2sfusion
