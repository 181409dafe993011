#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "mrsi/geometry.hpp"

namespace mrsi {

/// Both fields rescaled so their max |value| is 1 (an all-zero field stays
/// zero), then ||recon - truth||_2 / ||truth||_2 over every frame and voxel of
/// one substance.
double normalized_rmse(const SubstanceDistribution& recon, const SubstanceDistribution& truth,
                       std::size_t substance);

/// Voxel whose temporal maximum is largest (first one on ties).
std::size_t hottest_voxel(const SubstanceDistribution& x, std::size_t substance);

Eigen::VectorXd temporal_profile(const SubstanceDistribution& x, std::size_t voxel,
                                 std::size_t substance);

/// Pearson correlation; 0 when either input is constant.
double pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

/// Least-squares fit of a clamped ramp a + b*clamp(m - t0, 0, t1 - t0) over all
/// breakpoints t0 < t1; returns t1, the frame where the ramp turns into a
/// plateau (n - 1 for a profile still rising at the end).
std::size_t plateau_onset(const Eigen::Ref<const Eigen::VectorXd>& profile);

/// std / |mean|.
double coefficient_of_variation(const Eigen::Ref<const Eigen::VectorXd>& profile);

/// Spatial map of frame m for one substance, scaled by `scale` into [0, 255]
/// (negative values clamp to 0), each voxel repeated `upsample` times per axis.
/// Only 1D and 2D grids are supported.
void write_pgm(const std::filesystem::path& path, const SubstanceDistribution& x,
               const std::vector<int>& spatial_dims, std::size_t frame, std::size_t substance,
               double scale, int upsample = 1);

}  // namespace mrsi
