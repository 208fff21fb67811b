#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "ssdfi/experiment.hpp"

namespace testutil {

inline std::string data(const std::string& f) { return std::string(SSDFI_DATA_DIR) + "/" + f; }

inline ssdfi::RberCurve flat_curve(double rber = 1e-8) {
  return ssdfi::RberCurve{{{0, rber}, {3000, rber}}};
}

inline ssdfi::SsdModelProfile quiet_profile() {
  ssdfi::SsdModelProfile p;
  p.name = "QUIET";
  p.rber_curve = flat_curve();
  return p;
}

// Pool whose drives never fail on their own.
inline ssdfi::SsdPool quiet_pool(std::size_t n = 16) {
  ssdfi::SsdPool pool;
  pool.profile = quiet_profile();
  pool.drives.resize(n);
  pool.blocks_per_device = 16384;
  return pool;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ssdfi_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testutil
