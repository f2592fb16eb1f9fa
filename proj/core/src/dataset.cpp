#include "mobolfi/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "mobolfi/csv.hpp"

namespace mobolfi::io {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> numbered(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> h;
  for (Eigen::Index i = 0; i < n; ++i) h.push_back(prefix + std::to_string(i + 1));
  return h;
}

void expect_shape(const Table& t, const std::string& path, Eigen::Index rows, Eigen::Index cols) {
  if (t.data.cols() != cols)
    throw ConfigError(path + ": expected " + std::to_string(cols) + " columns, found " + std::to_string(t.data.cols()));
  if (rows >= 0 && t.data.rows() != rows)
    throw ConfigError(path + ": expected " + std::to_string(rows) + " rows, found " + std::to_string(t.data.rows()));
}

}  // namespace

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory '" + dir + "'");
  const auto probe = fs::path(dir) / ".mobolfi-write-probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
}

void write_toy(const std::string& dir, const toy::ToyData& data) {
  ensure_directory(dir);
  write_csv((fs::path(dir) / "X.csv").string(), numbered("x", data.x.cols()), data.x);
  write_csv((fs::path(dir) / "W.csv").string(), numbered("w", data.w.cols()), data.w);
}

toy::ToyData read_toy(const std::string& x_path, const std::string& w_path, const toy::ToyConfig& cfg) {
  const auto d = static_cast<Eigen::Index>(cfg.data_dim());
  auto x = read_csv(x_path);
  auto w = read_csv(w_path);
  expect_shape(x, x_path, cfg.n_x, d);
  expect_shape(w, w_path, cfg.n_w, d);
  return {std::move(x.data), std::move(w.data)};
}

void write_rt_ch(const std::string& path, const mlba::MlbaData& data, int alternatives) {
  Matrix m(data.size(), 1 + alternatives);
  m.col(0) = data.rt;
  m.rightCols(alternatives) = data.one_hot(alternatives);
  write_csv(path, [&] {
    std::vector<std::string> h{"rt"};
    for (auto& c : numbered("ch", alternatives)) h.push_back(c);
    return h;
  }(), m);
}

mlba::MlbaData read_rt_ch(const std::string& path) {
  const auto t = read_csv(path);
  if (t.data.cols() < 3 || t.header.front() != "rt")
    throw ConfigError(path + ": expected columns rt, ch1, ch2, ...");
  mlba::MlbaData d;
  d.rt = t.data.col(0);
  for (Eigen::Index i = 0; i < t.data.rows(); ++i) {
    int chosen = -1;
    for (Eigen::Index a = 1; a < t.data.cols(); ++a) {
      const double v = t.data(i, a);
      if (v == 1.0 && chosen < 0) {
        chosen = static_cast<int>(a - 1);
      } else if (v != 0.0) {
        chosen = -2;
        break;
      }
    }
    if (chosen < 0) throw ConfigError(path + ":" + std::to_string(i + 2) + ": choice columns must be one-hot");
    if (!(d.rt[i] > 0.0)) throw ConfigError(path + ":" + std::to_string(i + 2) + ": rt must be positive");
    d.choice.push_back(chosen);
  }
  return d;
}

void write_attributes(const std::string& path, const Matrix& attributes) {
  std::vector<std::string> h;
  for (Eigen::Index c = 0; c < attributes.cols(); ++c)
    h.push_back("alt" + std::to_string(c / mlba::kAttributes + 1) + "_x" + std::to_string(c % mlba::kAttributes + 1));
  write_csv(path, h, attributes);
}

Matrix read_attributes(const std::string& path) {
  auto t = read_csv(path);
  if (t.data.cols() == 0 || t.data.cols() % mlba::kAttributes != 0)
    throw ConfigError(path + ": attribute columns must be a multiple of " + std::to_string(mlba::kAttributes));
  return std::move(t.data);
}

}  // namespace mobolfi::io
