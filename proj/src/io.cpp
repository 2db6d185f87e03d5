#include "ebsdict/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ebsdict/errors.hpp"

namespace ebsdict {
namespace {

constexpr std::uint32_t kVersion = 1;

Vec3 unit(const Vec3& v) {
  const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  if (!(n > 0.0)) throw std::invalid_argument("reference direction must be nonzero");
  return {v[0] / n, v[1] / n, v[2] / n};
}

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
  }
  void magic(const char* m) { out_.write(m, 4); }
  template <typename T>
  void put(T v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  template <typename T>
  void put_all(std::span<const T> vs) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(vs.data()), static_cast<std::streamsize>(vs.size_bytes()));
    } else {
      for (T v : vs) put(v);
    }
  }
  void bytes(const std::string& s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }
  void close() {
    out_.close();
    if (!out_) throw IoError("failed writing '" + path_ + "'");
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open '" + path + "'");
    in_.seekg(0, std::ios::end);
    size_ = static_cast<std::uint64_t>(in_.tellg());
    in_.seekg(0);
  }
  void expect_magic(const char* m) {
    char buf[4] = {};
    read_raw(buf, 4);
    if (std::memcmp(buf, m, 4) != 0) throw IoError("'" + path_ + "' is not a " + std::string(m, 4) + " file");
    if (get<std::uint32_t>() != kVersion) throw IoError("'" + path_ + "' has an unsupported version");
  }
  template <typename T>
  T get() {
    T v;
    read_raw(&v, sizeof(T));
    return to_little(v);
  }
  template <typename T>
  void get_all(std::span<T> out) {
    read_raw(out.data(), out.size_bytes());
    if constexpr (std::endian::native == std::endian::big)
      for (T& v : out) v = to_little(v);
  }
  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    read_raw(s.data(), n);
    return s;
  }
  [[nodiscard]] std::uint64_t remaining() const { return size_ - pos_; }
  void require(std::uint64_t n) const {
    if (remaining() < n) throw IoError("'" + path_ + "' is truncated");
  }
  void expect_end() const {
    if (remaining() != 0) throw IoError("'" + path_ + "' has trailing bytes");
  }
  [[nodiscard]] const std::string& path() const { return path_; }

 private:
  void read_raw(void* dst, std::size_t n) {
    require(n);
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!in_) throw IoError("failed reading '" + path_ + "'");
    pos_ += n;
  }
  std::string path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::uint64_t pos_ = 0;
};

std::uint32_t checked_u32(long long v, const char* what) {
  if (v < 0 || v > 0xffffffffLL) throw std::invalid_argument(std::string(what) + " out of range");
  return static_cast<std::uint32_t>(v);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::ifstream open_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

std::ofstream create_text(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

double cell_double(const std::string& s, const std::string& path) {
  if (s.empty() || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad number '" + s + "' in '" + path + "'");
  }
}

int cell_int(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad integer '" + s + "' in '" + path + "'");
  }
}

std::string fmt(const char* f, double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void grid_from_rows(const std::string& path, int& width, int& height, const std::vector<std::pair<int, int>>& xy) {
  width = 0;
  height = 0;
  for (auto [x, y] : xy) {
    if (x < 0 || y < 0) throw IoError("negative pixel coordinate in '" + path + "'");
    width = std::max(width, x + 1);
    height = std::max(height, y + 1);
  }
  if (xy.size() != static_cast<std::size_t>(width) * height)
    throw IoError("'" + path + "' does not cover a full grid");
}

}  // namespace

void save_sample(const std::string& path, const SampleMap& sample) {
  sample.validate();
  Writer w(path);
  w.magic("EBSP");
  w.put(kVersion);
  w.put(checked_u32(sample.height, "height"));
  w.put(checked_u32(sample.width, "width"));
  w.put(checked_u32(sample.patterns.rows(), "rows"));
  w.put(checked_u32(sample.patterns.cols(), "cols"));
  w.put_all(sample.patterns.data());
  w.close();
}

SampleMap load_sample(const std::string& path) {
  Reader r(path);
  r.expect_magic("EBSP");
  const auto h = r.get<std::uint32_t>(), wd = r.get<std::uint32_t>();
  const auto rows = r.get<std::uint32_t>(), cols = r.get<std::uint32_t>();
  const std::uint64_t count = std::uint64_t{h} * wd * rows * cols;
  if (count == 0 || r.remaining() != count * 4) throw IoError("'" + path + "' payload does not match its header");
  std::vector<float> data(count);
  r.get_all(std::span<float>(data));
  SampleMap s{static_cast<int>(wd), static_cast<int>(h),
              PatternSet(static_cast<int>(rows), static_cast<int>(cols), std::move(data))};
  return s;
}

void save_dictionary(const std::string& path, const Dictionary& dict, const std::vector<double>* principal) {
  const auto& grid = dict.grid();
  const auto& pats = dict.patterns();
  if (principal && principal->size() != pats.length()) throw std::invalid_argument("principal component length mismatch");
  Writer w(path);
  w.magic("EBSD");
  w.put(kVersion);
  w.put(static_cast<std::uint64_t>(dict.size()));
  w.put(checked_u32(pats.rows(), "rows"));
  w.put(checked_u32(pats.cols(), "cols"));
  w.put(checked_u32(grid.N, "N"));
  const std::string& name = grid.group->name();
  w.put(static_cast<std::uint32_t>(name.size()));
  w.bytes(name);
  for (const auto& q : grid.orientations)
    for (double c : q.array()) w.put(c);
  w.put_all(pats.data());
  if (principal) {
    std::vector<float> pc(principal->begin(), principal->end());
    w.put_all(std::span<const float>(pc));
  }
  w.close();
}

DictionaryFile load_dictionary(const std::string& path) {
  Reader r(path);
  r.expect_magic("EBSD");
  const auto d = r.get<std::uint64_t>();
  const auto rows = r.get<std::uint32_t>(), cols = r.get<std::uint32_t>();
  const auto N = r.get<std::uint32_t>();
  const auto name_len = r.get<std::uint32_t>();
  if (name_len > 64) throw IoError("'" + path + "' has a corrupt group name");
  const std::string name = r.bytes(name_len);
  const SymmetryGroup* group = nullptr;
  try {
    group = &SymmetryGroup::from_name(name);
  } catch (const ConfigError&) {
    throw IoError("'" + path + "' uses unknown symmetry group '" + name + "'");
  }
  const std::uint64_t len = std::uint64_t{rows} * cols;
  const std::uint64_t body = d * 32 + d * len * 4;
  if (d == 0 || len == 0 || r.remaining() < body) throw IoError("'" + path + "' payload does not match its header");
  const std::uint64_t extra = r.remaining() - body;
  if (extra != 0 && extra != len * 4) throw IoError("'" + path + "' has an unexpected trailer");

  OrientationGrid grid;
  grid.N = static_cast<int>(N);
  grid.group = group;
  grid.orientations.resize(d);
  for (auto& q : grid.orientations) {
    q.w = r.get<double>();
    q.x = r.get<double>();
    q.y = r.get<double>();
    q.z = r.get<double>();
    if (std::abs(q.norm() - 1.0) > 1e-9) throw IoError("'" + path + "' contains a non-unit quaternion");
  }
  std::vector<float> data(d * len);
  r.get_all(std::span<float>(data));
  DictionaryFile out{Dictionary(std::move(grid), PatternSet(static_cast<int>(rows), static_cast<int>(cols), std::move(data))),
                     std::nullopt};
  if (extra != 0) {
    std::vector<float> pc(len);
    r.get_all(std::span<float>(pc));
    out.principal = std::vector<double>(pc.begin(), pc.end());
  }
  r.expect_end();
  return out;
}

void save_knn(const std::string& path, const KnnTable& knn, int width, int height) {
  if (knn.pixels != static_cast<std::size_t>(width) * height) throw std::invalid_argument("kNN table does not match grid");
  Writer w(path);
  w.magic("EKNN");
  w.put(kVersion);
  w.put(checked_u32(height, "height"));
  w.put(checked_u32(width, "width"));
  w.put(checked_u32(knn.k, "k"));
  for (const auto& m : knn.entries) {
    w.put(m.index);
    w.put(m.rho);
  }
  w.close();
}

KnnFile load_knn(const std::string& path) {
  Reader r(path);
  r.expect_magic("EKNN");
  KnnFile f;
  f.height = static_cast<int>(r.get<std::uint32_t>());
  f.width = static_cast<int>(r.get<std::uint32_t>());
  f.knn.k = static_cast<int>(r.get<std::uint32_t>());
  f.knn.pixels = static_cast<std::size_t>(f.width) * f.height;
  const std::uint64_t n = std::uint64_t{f.knn.pixels} * f.knn.k;
  if (f.knn.k < 1 || r.remaining() != n * 12) throw IoError("'" + path + "' payload does not match its header");
  f.knn.entries.resize(n);
  for (auto& m : f.knn.entries) {
    m.index = r.get<std::uint32_t>();
    m.rho = r.get<double>();
  }
  return f;
}

void save_similarity(const std::string& path, const SimilarityMaps& maps) {
  const std::size_t n = static_cast<std::size_t>(maps.width) * maps.height;
  if (maps.mean_ip.size() != n || maps.overlap_raw.size() != n || maps.neighbor_count.size() != n)
    throw std::invalid_argument("similarity maps do not cover the grid");
  Writer w(path);
  w.magic("ESIM");
  w.put(kVersion);
  w.put(checked_u32(maps.height, "height"));
  w.put(checked_u32(maps.width, "width"));
  w.put(checked_u32(maps.k, "k"));
  w.put_all(std::span<const double>(maps.mean_ip));
  w.put_all(std::span<const std::uint32_t>(maps.overlap_raw));
  w.put_all(std::span<const std::uint8_t>(maps.neighbor_count));
  w.close();
}

SimilarityMaps load_similarity(const std::string& path) {
  Reader r(path);
  r.expect_magic("ESIM");
  SimilarityMaps m;
  m.height = static_cast<int>(r.get<std::uint32_t>());
  m.width = static_cast<int>(r.get<std::uint32_t>());
  m.k = static_cast<int>(r.get<std::uint32_t>());
  const std::size_t n = static_cast<std::size_t>(m.width) * m.height;
  if (m.k < 1 || r.remaining() != n * 13) throw IoError("'" + path + "' payload does not match its header");
  m.mean_ip.resize(n);
  m.overlap_raw.resize(n);
  m.neighbor_count.resize(n);
  r.get_all(std::span<double>(m.mean_ip));
  r.get_all(std::span<std::uint32_t>(m.overlap_raw));
  r.get_all(std::span<std::uint8_t>(m.neighbor_count));
  m.overlap_norm.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    m.overlap_norm[i] = m.neighbor_count[i] > 0 ? static_cast<double>(m.overlap_raw[i]) /
                                                      (static_cast<double>(m.k) * m.neighbor_count[i])
                                                : 0.0;
  return m;
}

void write_class_csv(const std::string& path, const ClassMap& map) {
  auto out = create_text(path);
  out << "x,y,label\n";
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x)
      out << x << ',' << y << ',' << class_name(map.labels[static_cast<std::size_t>(y) * map.width + x]) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

ClassMap read_class_csv(const std::string& path) {
  auto in = open_text(path);
  std::string line;
  std::getline(in, line);
  if (line != "x,y,label") throw IoError("'" + path + "' is not a class map");
  std::vector<std::pair<int, int>> xy;
  std::vector<PixelClass> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 3) throw IoError("malformed row in '" + path + "'");
    xy.push_back({cell_int(c[0], path), cell_int(c[1], path)});
    try {
      labels.push_back(class_from_name(c[2]));
    } catch (const std::invalid_argument& e) {
      throw IoError(std::string(e.what()) + " in '" + path + "'");
    }
  }
  ClassMap m;
  grid_from_rows(path, m.width, m.height, xy);
  m.labels.resize(labels.size());
  for (std::size_t i = 0; i < xy.size(); ++i)
    m.labels[static_cast<std::size_t>(xy[i].second) * m.width + xy[i].first] = labels[i];
  return m;
}

void write_truth_csv(const std::string& path, const GroundTruth& t) {
  auto out = create_text(path);
  out << "x,y,grain,label,phi1,Phi,phi2,q0,q1,q2,q3\n";
  for (int y = 0; y < t.height; ++y)
    for (int x = 0; x < t.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * t.width + x;
      const Quaternion& q = t.orientation[i];
      const auto e = quaternion_to_euler(q);
      out << x << ',' << y << ',' << t.grain_id[i] << ',' << class_name(t.label[i]) << ',' << fmt("%.6f", e.phi1 * kDeg)
          << ',' << fmt("%.6f", e.Phi * kDeg) << ',' << fmt("%.6f", e.phi2 * kDeg) << ',' << fmt("%.17g", q.w) << ','
          << fmt("%.17g", q.x) << ',' << fmt("%.17g", q.y) << ',' << fmt("%.17g", q.z) << '\n';
    }
  if (!out) throw IoError("failed writing '" + path + "'");
}

GroundTruth read_truth_csv(const std::string& path) {
  auto in = open_text(path);
  std::string line;
  std::getline(in, line);
  if (line != "x,y,grain,label,phi1,Phi,phi2,q0,q1,q2,q3") throw IoError("'" + path + "' is not a ground-truth file");
  struct Row {
    int x, y, grain;
    PixelClass label;
    Quaternion q;
  };
  std::vector<Row> rows;
  std::vector<std::pair<int, int>> xy;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 11) throw IoError("malformed row in '" + path + "'");
    Row r{cell_int(c[0], path), cell_int(c[1], path), cell_int(c[2], path), PixelClass::GrainInterior,
          Quaternion{cell_double(c[7], path), cell_double(c[8], path), cell_double(c[9], path), cell_double(c[10], path)}};
    try {
      r.label = class_from_name(c[3]);
    } catch (const std::invalid_argument& e) {
      throw IoError(std::string(e.what()) + " in '" + path + "'");
    }
    rows.push_back(r);
    xy.push_back({r.x, r.y});
  }
  GroundTruth t;
  grid_from_rows(path, t.width, t.height, xy);
  const std::size_t n = rows.size();
  t.grain_id.resize(n);
  t.orientation.resize(n);
  t.label.resize(n);
  int grains = 0;
  for (const auto& r : rows) {
    const std::size_t i = static_cast<std::size_t>(r.y) * t.width + r.x;
    t.grain_id[i] = r.grain;
    t.orientation[i] = r.q;
    t.label[i] = r.label;
    grains = std::max(grains, r.grain + 1);
  }
  t.grain_orientation.resize(static_cast<std::size_t>(grains));
  for (std::size_t i = 0; i < n; ++i) t.grain_orientation[t.grain_id[i]] = t.orientation[i];
  return t;
}

void write_orientation_csv(const std::string& path, int width, int height,
                           const std::vector<OrientationEstimate>& est, const ClassMap* labels) {
  if (est.size() != static_cast<std::size_t>(width) * height) throw std::invalid_argument("estimates do not cover the grid");
  if (labels && labels->labels.size() != est.size()) throw std::invalid_argument("class map does not match the grid");
  auto out = create_text(path);
  out << "x,y,phi1,Phi,phi2,q0,q1,q2,q3,kappa,delta_theta_deg,label,status\n";
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      const auto& e = est[i];
      const auto eu = quaternion_to_euler(e.mu);
      out << x << ',' << y << ',' << fmt("%.6f", eu.phi1 * kDeg) << ',' << fmt("%.6f", eu.Phi * kDeg) << ','
          << fmt("%.6f", eu.phi2 * kDeg) << ',' << fmt("%.17g", e.mu.w) << ',' << fmt("%.17g", e.mu.x) << ','
          << fmt("%.17g", e.mu.y) << ',' << fmt("%.17g", e.mu.z) << ',' << fmt("%.10g", e.kappa) << ','
          << fmt("%.10g", e.delta_theta_deg) << ',' << (labels ? class_name(labels->labels[i]) : "") << ','
          << status_name(e.status) << '\n';
    }
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<OrientationRow> read_orientation_csv(const std::string& path) {
  auto in = open_text(path);
  std::string line;
  std::getline(in, line);
  if (line != "x,y,phi1,Phi,phi2,q0,q1,q2,q3,kappa,delta_theta_deg,label,status")
    throw IoError("'" + path + "' is not an orientation file");
  std::vector<OrientationRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 13) throw IoError("malformed row in '" + path + "'");
    rows.push_back({cell_int(c[0], path), cell_int(c[1], path),
                    Quaternion{cell_double(c[5], path), cell_double(c[6], path), cell_double(c[7], path),
                               cell_double(c[8], path)},
                    cell_double(c[9], path), cell_double(c[10], path), c[11], c[12]});
  }
  return rows;
}

void write_threshold_report(const std::string& path, const ThresholdReport& rep) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : v < 0 ? "-inf" : "nan"); };
  json j;
  j["t_anomaly"] = num(rep.thresholds.t_anomaly);
  j["t_subclass"] = num(rep.thresholds.t_subclass);
  j["t_boundary"] = num(rep.thresholds.t_boundary);
  j["boundary_fallback"] = rep.boundary_fallback;
  j["mean_ip_modes"] = json::array();
  for (const auto& m : rep.mean_ip_modes)
    j["mean_ip_modes"].push_back({{"location", m.location}, {"height", m.height}, {"mass", m.mass}});
  if (rep.overlap_mixture) {
    const auto& m = *rep.overlap_mixture;
    j["overlap_mixture"] = {{"weights", m.weights},     {"means", m.means},
                            {"variances", m.variances}, {"log_likelihood", m.log_likelihood},
                            {"iterations", m.iterations}, {"unimodal", m.unimodal}};
  }
  j["notes"] = rep.notes;
  j["failures"] = rep.failures;
  auto out = create_text(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

void write_png(const std::string& path, int width, int height, const std::vector<Rgb>& pixels) {
  if (width < 1 || height < 1 || pixels.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("image size does not match its pixel count");
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open '" + path + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("failed writing PNG '" + path + "'");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(pixels[static_cast<std::size_t>(y) * width].data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("failed writing PNG '" + path + "'");
}

std::vector<Rgb> read_png(const std::string& path, int& width, int& height) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open '" + path + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  std::vector<Rgb> pixels;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("failed reading PNG '" + path + "'");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  if (png_get_bit_depth(png, info) != 8 || png_get_color_type(png, info) != PNG_COLOR_TYPE_RGB) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("'" + path + "' is not an 8-bit RGB PNG");
  }
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  pixels.resize(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) png_read_row(png, pixels[static_cast<std::size_t>(y) * width].data(), nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return pixels;
}

Rgb class_color(PixelClass c) {
  switch (c) {
    case PixelClass::GrainInterior: return {255, 255, 255};
    case PixelClass::GrainBoundary: return {0, 0, 0};
    case PixelClass::NoisyBackground: return {255, 0, 0};
    case PixelClass::ShiftedBackground: return {0, 0, 255};
  }
  return {128, 128, 128};
}

std::array<double, 3> ipf_color(const Quaternion& q, const Vec3& ref) {
  const Vec3 h = sample_to_crystal(q.normalized(), unit(ref));
  std::array<double, 3> a{std::abs(h[0]), std::abs(h[1]), std::abs(h[2])};
  std::sort(a.begin(), a.end());  // a[0] <= a[1] <= a[2]: the 001-101-111 triangle
  // Stereographic projection with 001 at the origin, 101 on the x axis and 111 on the diagonal.
  const double px = a[1] / (1.0 + a[2]);
  const double py = a[0] / (1.0 + a[2]);
  const double gx = std::tan(kPi / 8.0);
  const double bs = 1.0 / (std::sqrt(3.0) + 1.0);
  // Barycentric weights, not rescaled to a full channel: rescaling would make
  // the color jump near the middle of the triangle.
  const double blue = std::clamp(py / bs, 0.0, 1.0);
  const double green = std::clamp((px - py) / gx, 0.0, 1.0);
  const double red = std::max(0.0, 1.0 - green - blue);
  const double sum = red + green + blue;
  return {red / sum, green / sum, blue / sum};
}

Rgb uncertainty_color(double delta_theta_deg, double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("display cap must be positive");
  const double v = std::isnan(delta_theta_deg) ? 1.0 : std::clamp(delta_theta_deg / cap, 0.0, 1.0);
  const auto g = static_cast<std::uint8_t>(std::lround(255.0 * v));
  return {g, g, g};
}

}  // namespace ebsdict
