#include "g2sfusion/trajectory.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "g2sfusion/error.h"
#include "text_io.h"

namespace g2sfusion {

Trajectory::Trajectory(const std::vector<Pose>& poses) {
  nodes_.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    nodes_.push_back({static_cast<int>(k), std::nullopt, poses[k]});
  }
}

Trajectory::Trajectory(const std::vector<Pose>& poses, const std::vector<double>& timestamps) {
  if (poses.size() != timestamps.size()) {
    throw Error(ErrorCode::kLengthMismatch, "poses and timestamps differ in length");
  }
  nodes_.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    nodes_.push_back({static_cast<int>(k), timestamps[k], poses[k]});
  }
}

Trajectory Trajectory::from_nodes(std::vector<TrajectoryNode> nodes) {
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].index != static_cast<int>(k)) {
      throw Error(ErrorCode::kInvalidTrajectory,
                  "node indices must be contiguous from 0; position " + std::to_string(k) +
                      " holds index " + std::to_string(nodes[k].index));
    }
  }
  Trajectory t;
  t.nodes_ = std::move(nodes);
  return t;
}

std::vector<Pose> Trajectory::poses() const {
  std::vector<Pose> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.pose);
  return out;
}

PoseFormat parse_pose_format(std::string_view name) {
  if (name == "kitti") return PoseFormat::kKitti;
  if (name == "tum") return PoseFormat::kTum;
  throw Error(ErrorCode::kConfigInvalid, "unknown pose format '" + std::string(name) + "'");
}

std::string_view to_string(PoseFormat format) {
  return format == PoseFormat::kKitti ? "kitti" : "tum";
}

namespace {

// Rows: canonical x = camera z, canonical y = -camera x, canonical z = -camera y.
const Mat3& camera_to_canonical() {
  static const Mat3 p = (Mat3() << 0, 0, 1, -1, 0, 0, 0, -1, 0).finished();
  return p;
}

Rotation checked_rotation(const Mat3& r, const std::string& source, int line) {
  const double err = orthonormality_error(r);
  if (err > 1e-3 || r.determinant() < 0.0) {
    throw Error(ErrorCode::kNonRigidPose,
                source + ":" + std::to_string(line) + ": rotation is not rigid (deviation " +
                    std::to_string(err) + ")");
  }
  return err > 1e-6 ? nearest_rotation(r) : r;
}

void write_real(std::ostream& os, double v) { os << std::setprecision(17) << v; }

}  // namespace

Pose kitti_to_canonical(const Pose& camera_pose) {
  const Mat3& p = camera_to_canonical();
  return {p * camera_pose.rotation * p.transpose(), p * camera_pose.translation};
}

Pose canonical_to_kitti(const Pose& pose) {
  const Mat3& p = camera_to_canonical();
  return {p.transpose() * pose.rotation * p, p.transpose() * pose.translation};
}

Pose parse_kitti_pose(const std::vector<double>& v, const std::string& source, int line) {
  if (v.size() != 12) {
    throw ParseError(source, line, "expected 12 reals, got " + std::to_string(v.size()));
  }
  Mat3 r;
  r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
  const Vec3 t(v[3], v[7], v[11]);
  return kitti_to_canonical({checked_rotation(r, source, line), t});
}

void format_kitti_pose(std::ostream& os, const Pose& pose) {
  const Pose c = canonical_to_kitti(pose);
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      if (row + col > 0) os << ' ';
      write_real(os, c.rotation(row, col));
    }
    os << ' ';
    write_real(os, c.translation(row));
  }
}

Trajectory read_trajectory(std::istream& is, PoseFormat format, const std::string& source) {
  std::vector<TrajectoryNode> nodes;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    const auto tokens = detail::split_ws(line);
    std::vector<double> values;
    values.reserve(tokens.size());
    for (auto tok : tokens) values.push_back(detail::parse_double(tok, source, lineno));

    TrajectoryNode node;
    node.index = static_cast<int>(nodes.size());
    if (format == PoseFormat::kKitti) {
      node.pose = parse_kitti_pose(values, source, lineno);
    } else {
      if (values.size() != 8) {
        throw ParseError(source, lineno, "expected 'timestamp tx ty tz qx qy qz qw'");
      }
      Eigen::Quaterniond q(values[7], values[4], values[5], values[6]);
      if (std::abs(q.norm() - 1.0) > 1e-3) {
        throw Error(ErrorCode::kNonRigidPose,
                    source + ":" + std::to_string(lineno) + ": quaternion is not unit length");
      }
      q.normalize();
      node.timestamp = values[0];
      node.pose = Pose(q.toRotationMatrix(), Vec3(values[1], values[2], values[3]));
    }
    nodes.push_back(std::move(node));
  }
  return Trajectory::from_nodes(std::move(nodes));
}

Trajectory load_trajectory(const std::filesystem::path& path, PoseFormat format) {
  auto is = detail::open_input(path);
  return read_trajectory(is, format, path.string());
}

void write_trajectory(std::ostream& os, const Trajectory& trajectory, PoseFormat format) {
  for (const auto& node : trajectory.nodes()) {
    if (format == PoseFormat::kKitti) {
      format_kitti_pose(os, node.pose);
    } else {
      const Eigen::Quaterniond q(node.pose.rotation);
      write_real(os, node.timestamp.value_or(static_cast<double>(node.index)));
      for (double v : {node.pose.translation.x(), node.pose.translation.y(),
                       node.pose.translation.z(), q.x(), q.y(), q.z(), q.w()}) {
        os << ' ';
        write_real(os, v);
      }
    }
    os << '\n';
  }
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory, PoseFormat format) {
  auto os = detail::open_output(path);
  write_trajectory(os, trajectory, format);
}

Pose relative_pose(const Pose& t_i, const Pose& t_j) { return t_i.inverse() * t_j; }

std::vector<OdometryEdge> vo_weights(std::vector<OdometryEdge> edges) {
  if (edges.empty()) {
    throw Error(ErrorCode::kEmptyEdgeSet, "no odometry edges");
  }
  double sum = 0.0;
  for (const auto& e : edges) {
    if (e.covis_count < 0) {
      throw Error(ErrorCode::kInvalidProblem, "negative covisibility count");
    }
    sum += std::sqrt(static_cast<double>(e.covis_count));
  }
  const double mean = sum / static_cast<double>(edges.size());
  if (mean <= 0.0) {
    throw Error(ErrorCode::kAllZeroCovisibility, "every covisibility count is zero");
  }
  for (auto& e : edges) {
    e.weight = std::sqrt(static_cast<double>(e.covis_count)) / mean;
  }
  return edges;
}

std::vector<CovisRecord> read_covisibility(std::istream& is, const std::string& source) {
  std::vector<CovisRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    const auto tok = detail::split_ws(line);
    if (tok.size() != 3) {
      throw ParseError(source, lineno, "expected 'i j N'");
    }
    CovisRecord r{detail::parse_int(tok[0], source, lineno), detail::parse_int(tok[1], source, lineno),
                  detail::parse_int(tok[2], source, lineno)};
    if (r.i < 0 || r.j <= r.i || r.count < 0) {
      throw ParseError(source, lineno, "require 0 <= i < j and N >= 0");
    }
    out.push_back(r);
  }
  return out;
}

std::vector<CovisRecord> load_covisibility(const std::filesystem::path& path) {
  auto is = detail::open_input(path);
  return read_covisibility(is, path.string());
}

void write_covisibility(std::ostream& os, const std::vector<CovisRecord>& records) {
  for (const auto& r : records) {
    os << r.i << ' ' << r.j << ' ' << r.count << '\n';
  }
}

std::vector<EdgePoseRecord> read_edge_poses(std::istream& is, const std::string& source) {
  std::vector<EdgePoseRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    const auto tok = detail::split_ws(line);
    if (tok.size() != 14) {
      throw ParseError(source, lineno, "expected 'i j' followed by 12 reals");
    }
    EdgePoseRecord r;
    r.i = detail::parse_int(tok[0], source, lineno);
    r.j = detail::parse_int(tok[1], source, lineno);
    if (r.i < 0 || r.j <= r.i) {
      throw ParseError(source, lineno, "require 0 <= i < j");
    }
    std::vector<double> values;
    for (std::size_t k = 2; k < tok.size(); ++k) values.push_back(detail::parse_double(tok[k], source, lineno));
    r.relative = parse_kitti_pose(values, source, lineno);
    out.push_back(r);
  }
  return out;
}

std::vector<EdgePoseRecord> load_edge_poses(const std::filesystem::path& path) {
  auto is = detail::open_input(path);
  return read_edge_poses(is, path.string());
}

void write_edge_poses(std::ostream& os, const std::vector<EdgePoseRecord>& records) {
  for (const auto& r : records) {
    os << r.i << ' ' << r.j << ' ';
    format_kitti_pose(os, r.relative);
    os << '\n';
  }
}

std::vector<OdometryEdge> build_edges(const Trajectory& trajectory,
                                      const std::optional<std::vector<CovisRecord>>& covis,
                                      const std::vector<EdgePoseRecord>& loop_poses) {
  const int n = static_cast<int>(trajectory.size());
  if (n < 2) {
    throw Error(ErrorCode::kInvalidTrajectory, "at least two poses are required");
  }
  auto check_range = [n](int i, int j, const char* what) {
    if (i < 0 || j >= n || i >= j) {
      throw Error(ErrorCode::kInvalidProblem, std::string(what) + " edge (" + std::to_string(i) + ", " +
                                                  std::to_string(j) + ") outside the trajectory");
    }
  };

  std::map<std::pair<int, int>, int> counts;
  int median = 1;
  if (covis && !covis->empty()) {
    std::vector<int> all;
    for (const auto& r : *covis) {
      check_range(r.i, r.j, "covisibility");
      counts[{r.i, r.j}] = r.count;
      all.push_back(r.count);
    }
    auto mid = all.begin() + static_cast<std::ptrdiff_t>((all.size() - 1) / 2);
    std::nth_element(all.begin(), mid, all.end());
    median = *mid;
  }

  std::map<std::pair<int, int>, Pose> loop_relatives;
  for (const auto& r : loop_poses) {
    check_range(r.i, r.j, "loop-closure");
    loop_relatives[{r.i, r.j}] = r.relative;
  }

  std::vector<OdometryEdge> edges;
  edges.reserve(static_cast<std::size_t>(n) + loop_relatives.size());
  for (int k = 0; k + 1 < n; ++k) {
    OdometryEdge e;
    e.i = k;
    e.j = k + 1;
    e.relative = relative_pose(trajectory.pose(k), trajectory.pose(k + 1));
    auto it = counts.find({k, k + 1});
    e.covis_count = it != counts.end() ? it->second : median;
    edges.push_back(e);
  }

  // Loop closures: every non-consecutive pair named in either file.
  std::map<std::pair<int, int>, int> loop_keys;
  for (const auto& [key, count] : counts) {
    if (key.second > key.first + 1) loop_keys[key] = count;
  }
  for (const auto& [key, rel] : loop_relatives) {
    if (key.second > key.first + 1 && !loop_keys.contains(key)) loop_keys[key] = median;
  }
  for (const auto& [key, count] : loop_keys) {
    auto rel = loop_relatives.find(key);
    if (rel == loop_relatives.end()) {
      throw Error(ErrorCode::kInvalidProblem, "loop edge (" + std::to_string(key.first) + ", " +
                                                  std::to_string(key.second) + ") has no relative pose");
    }
    edges.push_back({key.first, key.second, rel->second, count, 1.0});
  }

  if (covis && !covis->empty()) {
    return vo_weights(std::move(edges));
  }
  spdlog::info("no covisibility data supplied; all odometry weights set to 1");
  return edges;
}

std::vector<CovisRecord> covis_records(const std::vector<OdometryEdge>& edges) {
  std::vector<CovisRecord> out;
  out.reserve(edges.size());
  for (const auto& e : edges) out.push_back({e.i, e.j, e.covis_count});
  return out;
}

}  // namespace g2sfusion
