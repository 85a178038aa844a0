#include "pmor/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace pmor {

namespace {

static_assert(std::endian::native == std::endian::little,
              "SMAT I/O assumes a little-endian host");

std::vector<std::pair<Index, Index>> ranges_from_breaks(const std::vector<Index>& breaks,
                                                        Index k) {
  std::vector<std::pair<Index, Index>> out;
  Index begin = 0;
  for (Index b : breaks) {
    out.emplace_back(begin, b);
    begin = b;
  }
  out.emplace_back(begin, k);
  return out;
}

void check_finite(const Matrix& m) {
  if (!m.allFinite()) throw Error("matrix contains non-finite entries");
}

}  // namespace

SnapshotSet SnapshotSet::make(Matrix data, std::vector<double> times,
                              std::vector<Index> trajectory_breaks,
                              std::vector<double> param_labels) {
  const Index k = data.cols();
  require(k >= 1, "snapshot set needs at least one column");
  require(static_cast<Index>(times.size()) == k, "times length must equal column count");
  for (std::size_t i = 0; i < trajectory_breaks.size(); ++i) {
    require(trajectory_breaks[i] > 0 && trajectory_breaks[i] < k,
            "trajectory break out of range");
    require(i == 0 || trajectory_breaks[i] > trajectory_breaks[i - 1],
            "trajectory breaks must be strictly increasing");
  }
  for (auto [b, e] : ranges_from_breaks(trajectory_breaks, k)) {
    for (Index j = b + 1; j < e; ++j) {
      require(times[j] > times[j - 1], "times must increase within a trajectory");
    }
  }
  if (!param_labels.empty()) {
    require(param_labels.size() == trajectory_breaks.size() + 1,
            "one parameter label per trajectory");
  }
  SnapshotSet s;
  s.data = std::move(data);
  s.times = std::move(times);
  s.trajectory_breaks = std::move(trajectory_breaks);
  s.param_labels = std::move(param_labels);
  return s;
}

SnapshotSet SnapshotSet::uniform(Matrix data, double dt, double t0) {
  std::vector<double> t(static_cast<std::size_t>(data.cols()));
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = t0 + dt * static_cast<double>(j);
  return make(std::move(data), std::move(t));
}

std::vector<std::pair<Index, Index>> SnapshotSet::trajectory_ranges() const {
  return ranges_from_breaks(trajectory_breaks, k());
}

std::vector<std::pair<Index, Index>> CenteredSnapshots::trajectory_ranges() const {
  return ranges_from_breaks(trajectory_breaks, centered.cols());
}

SnapshotSet concatenate(const std::vector<SnapshotSet>& parts) {
  require(!parts.empty(), "nothing to concatenate");
  const Index n = parts.front().n();
  Index k = 0;
  for (const auto& p : parts) {
    require(p.n() == n, "trajectories must share the state dimension");
    k += p.k();
  }
  Matrix data(n, k);
  std::vector<double> times;
  std::vector<Index> breaks;
  std::vector<double> labels;
  bool all_labeled = true;
  Index offset = 0;
  for (const auto& p : parts) {
    if (offset > 0) breaks.push_back(offset);
    for (Index b : p.trajectory_breaks) breaks.push_back(offset + b);
    data.middleCols(offset, p.k()) = p.data;
    times.insert(times.end(), p.times.begin(), p.times.end());
    if (p.param_labels.empty()) {
      all_labeled = false;
    } else {
      labels.insert(labels.end(), p.param_labels.begin(), p.param_labels.end());
    }
    offset += p.k();
  }
  if (!all_labeled) labels.clear();
  return SnapshotSet::make(std::move(data), std::move(times), std::move(breaks),
                           std::move(labels));
}

CenteredSnapshots center(const SnapshotSet& set, const CenterMode& mode) {
  Vector s_ref;
  if (std::holds_alternative<ColumnMean>(mode)) {
    s_ref = set.data.rowwise().mean();
  } else if (std::holds_alternative<InitialConditionMean>(mode)) {
    const auto ranges = set.trajectory_ranges();
    s_ref = Vector::Zero(set.n());
    for (auto [b, e] : ranges) s_ref += set.data.col(b);
    s_ref /= static_cast<double>(ranges.size());
  } else {
    s_ref = std::get<CustomReference>(mode).s_ref;
    require(s_ref.size() == set.n(), "custom reference has wrong length");
  }
  CenteredSnapshots cs;
  cs.centered = set.data.colwise() - s_ref;
  cs.s_ref = std::move(s_ref);
  cs.times = set.times;
  cs.trajectory_breaks = set.trajectory_breaks;
  cs.param_labels = set.param_labels;
  return cs;
}

std::pair<Matrix, Vector> left_singular_vectors(const Matrix& a) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU);
  Matrix u = svd.matrixU();
  // Fix the sign ambiguity: largest-magnitude entry of each vector is positive.
  for (Index j = 0; j < u.cols(); ++j) {
    Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    if (u(imax, j) < 0) u.col(j) = -u.col(j);
  }
  return {std::move(u), svd.singularValues()};
}

double SvdSpectrum::energy(Index r) const {
  require(r >= 0, "negative mode count");
  if (r == 0) return 0.0;
  return cumulative_energy(std::min(r, cumulative_energy.size()) - 1);
}

SvdSpectrum svd_spectrum(const Matrix& centered) {
  Eigen::BDCSVD<Matrix> svd(centered);
  Vector sigma = svd.singularValues();
  const double total = sigma.squaredNorm();
  if (sigma.size() == 0 || !(total > 0.0)) throw Error("degenerate snapshot matrix");
  SvdSpectrum spec;
  spec.singular_values = sigma;
  spec.cumulative_energy.resize(sigma.size());
  double acc = 0.0;
  for (Index i = 0; i < sigma.size(); ++i) {
    acc += sigma(i) * sigma(i);
    spec.cumulative_energy(i) = acc / total;
  }
  return spec;
}

SvdSpectrum svd_spectrum(const CenteredSnapshots& cs) { return svd_spectrum(cs.centered); }

// ---------------------------------------------------------------------------

MatrixFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext == ".csv" ? MatrixFormat::Csv : MatrixFormat::Smat;
}

std::optional<MatrixFormat> parse_format(std::string_view name) {
  if (name == "smat" || name == "smat-binary") return MatrixFormat::Smat;
  if (name == "csv") return MatrixFormat::Csv;
  return std::nullopt;
}

std::string encode_smat(const Matrix& m) {
  const auto rows = static_cast<std::uint64_t>(m.rows());
  const auto cols = static_cast<std::uint64_t>(m.cols());
  std::string out;
  out.reserve(kSmatMagic.size() + kSmatHeaderBytes + 8 * rows * cols);
  out.append(kSmatMagic);
  out.append(reinterpret_cast<const char*>(&rows), 8);
  out.append(reinterpret_cast<const char*>(&cols), 8);
  out.append(reinterpret_cast<const char*>(m.data()), 8 * rows * cols);
  return out;
}

Matrix decode_smat(std::string_view bytes) {
  if (bytes.size() < kSmatMagic.size() || bytes.substr(0, kSmatMagic.size()) != kSmatMagic) {
    throw ParseError("bad SMAT magic", 0);
  }
  if (bytes.size() < kSmatMagic.size() + kSmatHeaderBytes) {
    throw ParseError("truncated SMAT header", bytes.size());
  }
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::memcpy(&rows, bytes.data() + kSmatMagic.size(), 8);
  std::memcpy(&cols, bytes.data() + kSmatMagic.size() + 8, 8);
  const std::size_t payload = bytes.size() - kSmatMagic.size() - kSmatHeaderBytes;
  if (cols != 0 && rows > payload / 8 / cols) {
    throw ParseError("SMAT dimension mismatch: header promises more values than present",
                     bytes.size());
  }
  if (payload != 8 * rows * cols) {
    throw ParseError("SMAT dimension mismatch: trailing bytes",
                     kSmatMagic.size() + kSmatHeaderBytes + 8 * rows * cols);
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::memcpy(m.data(), bytes.data() + kSmatMagic.size() + kSmatHeaderBytes, payload);
  for (Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i])) {
      throw ParseError("non-finite SMAT entry",
                       kSmatMagic.size() + kSmatHeaderBytes + 8 * static_cast<std::size_t>(i));
    }
  }
  return m;
}

std::string encode_csv(const Matrix& m) {
  std::string out = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  char buf[64];
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      // Shortest round-trip representation: always reproduces the double.
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), m(i, j));
      (void)ec;
      if (i > 0) out.push_back(',');
      out.append(buf, end);
    }
    out.push_back('\n');
  }
  return out;
}

Matrix decode_csv(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = nl + 1;
    ++line_no;
    return true;
  };
  auto parse_fields = [&](std::string_view line, auto&& sink) {
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      auto tok = line.substr(start, comma == std::string_view::npos ? line.size() - start
                                                                  : comma - start);
      while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
      while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
      sink(tok);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError("empty CSV file", 1);
  std::vector<std::uint64_t> header;
  parse_fields(line, [&](std::string_view tok) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) {
      throw ParseError("malformed CSV header, expected rows,cols", line_no);
    }
    header.push_back(v);
  });
  if (header.size() != 2) throw ParseError("malformed CSV header, expected rows,cols", line_no);
  const auto rows = static_cast<Index>(header[0]);
  const auto cols = static_cast<Index>(header[1]);
  Matrix m(rows, cols);
  Index col = 0;
  while (next_line(line)) {
    if (line.empty()) continue;
    if (col >= cols) throw ParseError("CSV dimension mismatch: too many columns", line_no);
    Index row = 0;
    parse_fields(line, [&](std::string_view tok) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size()) {
        throw ParseError("non-numeric CSV token '" + std::string(tok) + "'", line_no);
      }
      if (!std::isfinite(v)) throw ParseError("non-finite CSV entry", line_no);
      if (row >= rows) throw ParseError("CSV dimension mismatch: row too long", line_no);
      m(row++, col) = v;
    });
    if (row != rows) throw ParseError("CSV dimension mismatch: row too short", line_no);
    ++col;
  }
  if (col != cols) throw ParseError("CSV dimension mismatch: too few columns", line_no);
  return m;
}

Matrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return format == MatrixFormat::Smat ? decode_smat(bytes) : decode_csv(bytes);
}

void save_matrix(const Matrix& m, const std::filesystem::path& path, MatrixFormat format) {
  if (m.cols() == 0 || m.rows() == 0) throw Error("empty matrix");
  check_finite(m);
  const std::string bytes = format == MatrixFormat::Smat ? encode_smat(m) : encode_csv(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace pmor
