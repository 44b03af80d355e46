#pragma once

// Data ingestion: IDX image/label files (big-endian, standard MNIST layout)
// and rectangular numeric CSV, plus Gaussian / mixture fits with ridge
// regularization. Parse errors carry the path and the byte offset or line.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "infogreedy/errors.hpp"
#include "infogreedy/gaussian.hpp"
#include "infogreedy/gmm.hpp"
#include "infogreedy/linalg.hpp"

namespace infogreedy {

struct ImageSet {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;  // count * rows * cols, scaled to [0, 1]

  int dim() const { return rows * cols; }
  Vec image(int i) const {
    const int d = dim();
    return Vec(pixels.begin() + static_cast<std::size_t>(i) * d,
               pixels.begin() + static_cast<std::size_t>(i + 1) * d);
  }
};

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const std::string& path, std::size_t offset) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) {
    std::ostringstream msg;
    msg << path << ": truncated file at byte " << offset;
    throw DataError(msg.str());
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace detail

/// IDX image file (magic 0x00000803): count x rows x cols unsigned bytes,
/// scaled to [0, 1].
inline ImageSet load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  const auto magic = detail::read_be32(in, path, 0);
  if (magic != 0x00000803u) {
    std::ostringstream msg;
    msg << path << ": bad image magic at byte 0 (got 0x" << std::hex << magic
        << ", want 0x803)";
    throw DataError(msg.str());
  }
  ImageSet set;
  set.count = static_cast<int>(detail::read_be32(in, path, 4));
  set.rows = static_cast<int>(detail::read_be32(in, path, 8));
  set.cols = static_cast<int>(detail::read_be32(in, path, 12));
  if (set.count < 0 || set.rows <= 0 || set.cols <= 0)
    throw DataError(path + ": nonsensical image dimensions in header");
  const std::size_t total = static_cast<std::size_t>(set.count) * set.rows * set.cols;
  std::vector<unsigned char> raw(total);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(total));
  if (static_cast<std::size_t>(in.gcount()) != total) {
    std::ostringstream msg;
    msg << path << ": expected " << total << " pixel bytes, file ends at byte "
        << 16 + in.gcount();
    throw DataError(msg.str());
  }
  set.pixels.resize(total);
  for (std::size_t i = 0; i < total; ++i) set.pixels[i] = raw[i] / 255.0;
  return set;
}

/// IDX label file (magic 0x00000801): count unsigned bytes.
inline std::vector<int> load_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file");
  const auto magic = detail::read_be32(in, path, 0);
  if (magic != 0x00000801u) {
    std::ostringstream msg;
    msg << path << ": bad label magic at byte 0 (got 0x" << std::hex << magic
        << ", want 0x801)";
    throw DataError(msg.str());
  }
  const auto count = detail::read_be32(in, path, 4);
  std::vector<unsigned char> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
  if (static_cast<std::size_t>(in.gcount()) != count) {
    std::ostringstream msg;
    msg << path << ": expected " << count << " label bytes, file ends at byte "
        << 8 + in.gcount();
    throw DataError(msg.str());
  }
  return std::vector<int>(raw.begin(), raw.end());
}

/// Per-class empirical Gaussians from labeled vectors: ridge-regularized
/// covariances (Sigma_hat + ridge I) and class weights from frequencies.
/// Classes are 0..max_label; empty classes get zero weight.
inline GmmBelief fit_gmm_from_labels(const ImageSet& images, const std::vector<int>& labels,
                                     double ridge, int limit = -1) {
  if (static_cast<int>(labels.size()) < images.count)
    throw DataError("fit_gmm_from_labels: labels file shorter than images");
  int count = images.count;
  if (limit > 0 && limit < count) count = limit;
  if (count < 1) throw ValidationError("fit_gmm_from_labels: no samples");
  const int d = images.dim();

  int num_classes = 0;
  for (int i = 0; i < count; ++i) {
    if (labels[i] < 0) throw DataError("fit_gmm_from_labels: negative label");
    num_classes = std::max(num_classes, labels[i] + 1);
  }

  std::vector<int> per_class(num_classes, 0);
  std::vector<Vec> sums(num_classes, Vec(d, 0.0));
  for (int i = 0; i < count; ++i) {
    const int c = labels[i];
    per_class[c] += 1;
    const double* px = &images.pixels[static_cast<std::size_t>(i) * d];
    for (int j = 0; j < d; ++j) sums[c][j] += px[j];
  }

  GmmBelief out;
  out.components.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    auto& comp = out.components[c];
    comp.weight = static_cast<double>(per_class[c]) / count;
    comp.mean.assign(d, 0.0);
    comp.cov = SymMatrix(d);
    if (per_class[c] == 0) continue;
    for (int j = 0; j < d; ++j) comp.mean[j] = sums[c][j] / per_class[c];
  }
  Vec centered(d);
  for (int i = 0; i < count; ++i) {
    const int c = labels[i];
    const double* px = &images.pixels[static_cast<std::size_t>(i) * d];
    auto& comp = out.components[c];
    for (int j = 0; j < d; ++j) centered[j] = px[j] - comp.mean[j];
    comp.cov.rank1_downdate(centered, -1.0);  // accumulate centered outer products
  }
  for (int c = 0; c < num_classes; ++c) {
    auto& comp = out.components[c];
    if (per_class[c] > 0)
      for (double& v : comp.cov.a) v /= per_class[c];
    for (int j = 0; j < d; ++j) comp.cov(j, j) += ridge;
  }
  return out;
}

/// Rectangular numeric CSV ('.' decimal separator, no quoting); every row
/// must have the same number of fields.
inline Matrix load_csv_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(field, &pos));
        while (pos < field.size() && (field[pos] == ' ' || field[pos] == '\t')) ++pos;
        if (pos != field.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        std::ostringstream msg;
        msg << path << ": line " << lineno << ": non-numeric field '" << field << "'";
        throw DataError(msg.str());
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      std::ostringstream msg;
      msg << path << ": line " << lineno << ": ragged row (" << row.size() << " fields, want "
          << rows.front().size() << ")";
      throw DataError(msg.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
  return m;
}

/// Empirical mean and ridge-regularized covariance from the given rows.
inline GaussianBelief fit_gaussian(const Matrix& data, const std::vector<int>& row_indices,
                                   double ridge) {
  if (row_indices.empty()) throw ValidationError("fit_gaussian: no sample rows");
  const int d = data.cols;
  GaussianBelief belief;
  belief.mean.assign(d, 0.0);
  for (int r : row_indices) {
    if (r < 0 || r >= data.rows) throw ValidationError("fit_gaussian: row index out of range");
    for (int j = 0; j < d; ++j) belief.mean[j] += data(r, j);
  }
  const double inv = 1.0 / row_indices.size();
  for (double& v : belief.mean) v *= inv;

  belief.cov = SymMatrix(d);
  Vec centered(d);
  for (int r : row_indices) {
    for (int j = 0; j < d; ++j) centered[j] = data(r, j) - belief.mean[j];
    belief.cov.rank1_downdate(centered, -1.0);
  }
  for (double& v : belief.cov.a) v *= inv;
  for (int j = 0; j < d; ++j) belief.cov(j, j) += ridge;
  return belief;
}

}  // namespace infogreedy
