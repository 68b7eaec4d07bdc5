#include "g2sfusion/g2s.h"

#include <algorithm>
#include <bit>
#include <iomanip>
#include <ostream>
#include <random>

#include "g2sfusion/error.h"
#include "text_io.h"

namespace g2sfusion {

Pose delta_pose(const G2SDelta& delta) {
  return {rot_z(delta.theta), Vec3(delta.x, delta.y, 0.0)};
}

Pose compose_correction(const Pose& query, const G2SDelta& delta) {
  return query * delta_pose(delta);
}

G2SDelta extract_delta(const Pose& query, const Pose& claim, int frame) {
  const Vec3 shift = query.rotation.transpose() * (claim.translation - query.translation);
  return {frame, shift.x(), shift.y(), azimuth(query.rotation.transpose() * claim.rotation)};
}

G2SDelta reexpress(const G2SDelta& delta, const Pose& old_query, const Pose& new_query) {
  return extract_delta(new_query, compose_correction(old_query, delta), delta.frame);
}

void OracleNoise::validate() const {
  if (sigma_x < 0.0 || sigma_y < 0.0 || sigma_theta < 0.0) {
    throw Error(ErrorCode::kConfigInvalid, "oracle noise sigmas must be non-negative");
  }
  if (outlier_rate < 0.0 || outlier_rate > 1.0) {
    throw Error(ErrorCode::kConfigInvalid, "oracle outlier_rate must lie in [0, 1]");
  }
  if (rotation_range < 0.0 || window_half < 0.0) {
    throw Error(ErrorCode::kConfigInvalid, "oracle search ranges must be non-negative");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t draw_seed(std::uint64_t seed, int frame, const Pose& pose) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(frame)));
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 3; ++r) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(pose.rotation(r, c)));
    h = splitmix64(h ^ std::bit_cast<std::uint64_t>(pose.translation(c)));
  }
  return h;
}

OracleSample draw(const Trajectory& gt, const OracleNoise& noise, int frame, const Pose& query_pose) {
  if (frame < 0 || static_cast<std::size_t>(frame) >= gt.size()) {
    throw Error(ErrorCode::kFrameOutOfRange, "frame " + std::to_string(frame) + " not in ground truth");
  }
  std::mt19937_64 rng(draw_seed(noise.seed, frame, query_pose));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  OracleSample out;
  out.delta.frame = frame;
  if (unit(rng) < noise.outlier_rate) {
    out.outlier = true;
    std::uniform_real_distribution<double> shift(-noise.window_half, noise.window_half);
    std::uniform_real_distribution<double> turn(-noise.rotation_range, noise.rotation_range);
    out.delta.x = shift(rng);
    out.delta.y = shift(rng);
    out.delta.theta = turn(rng);
    return out;
  }

  const G2SDelta truth = extract_delta(query_pose, gt.pose(static_cast<std::size_t>(frame)), frame);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double nx = gauss(rng);
  const double ny = gauss(rng);
  const double nt = gauss(rng);
  out.delta.x = std::clamp(truth.x + noise.sigma_x * nx, -noise.window_half, noise.window_half);
  out.delta.y = std::clamp(truth.y + noise.sigma_y * ny, -noise.window_half, noise.window_half);
  out.delta.theta =
      std::clamp(wrap_angle(truth.theta + noise.sigma_theta * nt), -noise.rotation_range, noise.rotation_range);
  return out;
}

}  // namespace

SyntheticOracle::SyntheticOracle(Trajectory ground_truth, OracleNoise noise)
    : gt_(std::move(ground_truth)), noise_(noise) {
  noise_.validate();
}

std::optional<G2SDelta> SyntheticOracle::query(int frame, const Pose& query_pose) const {
  return sample(frame, query_pose).delta;
}

OracleSample SyntheticOracle::sample(int frame, const Pose& query_pose) const {
  return draw(gt_, noise_, frame, query_pose);
}

G2SDelta oracle_query(const Trajectory& gt, const OracleNoise& noise, int frame, const Pose& query_pose) {
  return draw(gt, noise, frame, query_pose).delta;
}

FileProvider::FileProvider(std::map<int, G2SRecord> records) : records_(std::move(records)) {}

FileProvider FileProvider::load(const std::filesystem::path& predictions, const std::filesystem::path& query_poses) {
  auto is = detail::open_input(predictions);
  const auto deltas = read_predictions(is, predictions.string());
  const Trajectory queries = load_trajectory(query_poses, PoseFormat::kKitti);
  std::map<int, G2SRecord> records;
  for (const auto& d : deltas) {
    if (d.frame < 0 || static_cast<std::size_t>(d.frame) >= queries.size()) {
      throw Error(ErrorCode::kFrameOutOfRange,
                  "prediction for frame " + std::to_string(d.frame) + " has no query pose in " + query_poses.string());
    }
    records[d.frame] = {d, queries.pose(static_cast<std::size_t>(d.frame))};
  }
  return FileProvider(std::move(records));
}

std::optional<G2SDelta> FileProvider::query(int frame, const Pose& query_pose) const {
  auto it = records_.find(frame);
  if (it == records_.end()) return std::nullopt;
  return reexpress(it->second.delta, it->second.query_pose, query_pose);
}

std::vector<G2SDelta> read_predictions(std::istream& is, const std::string& source) {
  std::vector<G2SDelta> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::is_blank_or_comment(line)) continue;
    const auto tok = detail::split_ws(line);
    if (tok.size() != 4) {
      throw ParseError(source, lineno, "expected 'k x y theta'");
    }
    out.push_back({detail::parse_int(tok[0], source, lineno), detail::parse_double(tok[1], source, lineno),
                   detail::parse_double(tok[2], source, lineno), detail::parse_double(tok[3], source, lineno)});
  }
  return out;
}

void write_predictions(std::ostream& os, const std::vector<G2SDelta>& deltas) {
  os << std::setprecision(17);
  for (const auto& d : deltas) {
    os << d.frame << ' ' << d.x << ' ' << d.y << ' ' << d.theta << '\n';
  }
}

}  // namespace g2sfusion
