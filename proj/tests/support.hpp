// Copyright 2026 The UFO Lab Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef UFO_TESTS_SUPPORT_HPP
#define UFO_TESTS_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "ufo/tensor.hpp"
#include "ufo/video.hpp"

namespace ufo::testing {

inline MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline Tensor<double> random_tensor(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  return Tensor<double>::from_matrix(random_matrix(rows, cols, rng, scale));
}

inline VideoTensor random_video(int F, int H, int W, int C, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  VideoTensor v(F, H, W, C);
  for (double& x : v.data()) x = u(rng);
  return v;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ufo-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace ufo::testing

#endif  // UFO_TESTS_SUPPORT_HPP
