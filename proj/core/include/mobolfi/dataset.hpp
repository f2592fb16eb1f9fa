#pragma once

#include <string>

#include "mobolfi/mlba.hpp"
#include "mobolfi/toy.hpp"

namespace mobolfi::io {

/// Writes X.csv (x1..xd) and W.csv (w1..wd) into `dir`.
void write_toy(const std::string& dir, const toy::ToyData& data);
/// Reads X.csv and W.csv; column counts must equal cfg.data_dim() and row
/// counts cfg.n_x and cfg.n_w.
toy::ToyData read_toy(const std::string& x_path, const std::string& w_path, const toy::ToyConfig& cfg);

/// rt_ch.csv: rt, ch1..chM (one-hot).
void write_rt_ch(const std::string& path, const mlba::MlbaData& data, int alternatives = 3);
mlba::MlbaData read_rt_ch(const std::string& path);

/// Attribute matrix with header alt{a}_x{k}.
void write_attributes(const std::string& path, const Matrix& attributes);
Matrix read_attributes(const std::string& path);

/// Creates `dir` (and parents); IoError when that fails or it is not writable.
void ensure_directory(const std::string& dir);

}  // namespace mobolfi::io
