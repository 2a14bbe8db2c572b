#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "eebf/common.hpp"
#include "eebf/rng.hpp"

namespace eebf {

struct CellGeometry {
  double radius_m = 500.0;    // hexagon circumradius R
  double min_dist_m = 35.0;   // minimum BS-to-user distance R_min

  void validate() const {
    require(radius_m > 0, "geometry: cell radius must be positive");
    require(min_dist_m >= 0 && min_dist_m < radius_m,
            "geometry: min distance must lie in [0, radius)");
  }
};

// Log-distance pathloss, d in meters. 10^(-(38 log10 d + 34.5)/10) linear.
inline double pathloss_db(double dist_m) {
  require(dist_m > 0, "pathloss: distance must be positive");
  return -(38.0 * std::log10(dist_m) + 34.5);
}
inline double pathloss_linear(double dist_m) { return db_to_linear(pathloss_db(dist_m)); }

// Centers of a hex layout with circumradius R: origin first, then rings of
// adjacent cells spiraling outward. Neighboring centers are sqrt(3)*R apart,
// so the first three cells form a mutually adjacent cluster.
inline std::vector<Eigen::Vector2d> hex_centers(int m_cells, double radius) {
  require(m_cells >= 1, "hex_centers: need at least one cell");
  const double d = std::sqrt(3.0) * radius;
  std::vector<Eigen::Vector2d> units(6);
  for (int k = 0; k < 6; ++k) {
    const double ang = M_PI / 6.0 + k * M_PI / 3.0;  // 30 + 60k degrees
    units[k] = d * Eigen::Vector2d(std::cos(ang), std::sin(ang));
  }
  std::vector<Eigen::Vector2d> centers{Eigen::Vector2d::Zero()};
  for (int ring = 1; static_cast<int>(centers.size()) < m_cells; ++ring) {
    Eigen::Vector2d pos = units[0] * ring;
    for (int k = 0; k < 6; ++k) {
      const Eigen::Vector2d step = units[(k + 2) % 6];
      for (int s = 0; s < ring; ++s) {
        centers.push_back(pos);
        pos += step;
      }
    }
  }
  centers.resize(m_cells);
  return centers;
}

// Point-in-hexagon test for a pointy-top hexagon (vertices at (0, +-R)).
inline bool inside_hexagon(const Eigen::Vector2d& p, const Eigen::Vector2d& center, double radius) {
  const double x = std::abs(p.x() - center.x());
  const double y = std::abs(p.y() - center.y());
  const double s3 = std::sqrt(3.0);
  return x <= s3 * radius / 2.0 + 1e-12 && y <= radius - x / s3 + 1e-12;
}

// One user drop: fixed BS grid, user positions uniform in each serving cell
// (redrawn while closer than min_dist to any BS), and the resulting pathloss
// table epsilon(m, j*K+k) from BS m to user k of cell j.
struct UserDrop {
  Eigen::MatrixXd bs_pos;    // M x 2
  Eigen::MatrixXd user_pos;  // (M*K) x 2, row user_index(j,k)
  Eigen::MatrixXd epsilon;   // M x (M*K), linear pathloss
};

inline UserDrop generate_user_drop(const CellGeometry& geo, int cells, int users_per_cell,
                                   std::uint64_t seed) {
  geo.validate();
  require(cells >= 1 && users_per_cell >= 1, "drop: cells and users_per_cell must be >= 1");
  const auto centers = hex_centers(cells, geo.radius_m);
  const int total = cells * users_per_cell;

  UserDrop drop;
  drop.bs_pos.resize(cells, 2);
  for (int m = 0; m < cells; ++m) drop.bs_pos.row(m) = centers[m].transpose();
  drop.user_pos.resize(total, 2);
  drop.epsilon.resize(cells, total);

  Rng rng(derive_seed(seed, {0x64726f70ULL}));  // "drop" substream
  const double s3 = std::sqrt(3.0);
  for (int j = 0; j < cells; ++j) {
    for (int k = 0; k < users_per_cell; ++k) {
      Eigen::Vector2d p;
      for (;;) {
        // rejection sample the bounding box of the hexagon
        const double x = (rng.uniform() * 2.0 - 1.0) * s3 * geo.radius_m / 2.0;
        const double y = (rng.uniform() * 2.0 - 1.0) * geo.radius_m;
        p = centers[j] + Eigen::Vector2d(x, y);
        if (!inside_hexagon(p, centers[j], geo.radius_m)) continue;
        double dmin = std::numeric_limits<double>::infinity();
        for (int m = 0; m < cells; ++m) dmin = std::min(dmin, (p - centers[m]).norm());
        if (dmin >= geo.min_dist_m) break;
      }
      const int q = user_index(j, k, users_per_cell);
      drop.user_pos.row(q) = p.transpose();
      for (int m = 0; m < cells; ++m)
        drop.epsilon(m, q) = pathloss_linear((p - centers[m]).norm());
    }
  }
  return drop;
}

}  // namespace eebf
