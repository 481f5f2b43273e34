#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dcc/matrix.hpp"
#include "dcc/rng.hpp"

namespace dcc {

enum class Split : std::uint8_t { Train = 0, Query = 1, Gallery = 2 };

struct LabeledDataset {
  Matrix features;               // raw encoder inputs, not necessarily unit norm
  std::vector<int> labels;       // identity ids
  std::vector<int> cameras;      // empty when the dataset carries no camera ids
  std::vector<Split> splits;     // per-sample split tag
  std::vector<int> true_labels;  // ground truth before noise injection; empty
                                 // when identical to labels

  std::size_t size() const { return features.rows; }
  bool has_cameras() const { return !cameras.empty(); }

  const std::vector<int>& ground_truth() const {
    return true_labels.empty() ? labels : true_labels;
  }

  std::vector<std::size_t> indices_of(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < splits.size(); ++i)
      if (splits[i] == split) out.push_back(i);
    return out;
  }

  LabeledDataset subset(const std::vector<std::size_t>& indices) const {
    LabeledDataset out;
    out.features = Matrix(indices.size(), features.cols);
    out.labels.reserve(indices.size());
    out.splits.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      const std::size_t i = indices[r];
      std::copy_n(features.row(i).data(), features.cols, out.features.row(r).data());
      out.labels.push_back(labels[i]);
      out.splits.push_back(splits[i]);
      if (has_cameras()) out.cameras.push_back(cameras[i]);
      if (!true_labels.empty()) out.true_labels.push_back(true_labels[i]);
    }
    return out;
  }

  std::size_t num_classes(Split split) const {
    int max_label = -1;
    for (std::size_t i = 0; i < splits.size(); ++i)
      if (splits[i] == split) max_label = std::max(max_label, labels[i]);
    return static_cast<std::size_t>(max_label + 1);
  }
};

struct SynthSpec {
  std::size_t num_ids = 50;
  std::size_t samples_per_id = 40;
  std::size_t input_dim = 32;
  double intra_class_sigma = 0.25;
  double noise_rate = 0.0;           // fraction of train labels reassigned
  double camera_shift_sigma = 0.0;   // per-camera additive shift scale
  std::size_t num_cameras = 1;       // 1 = no camera ids emitted
  std::size_t query_per_id = 4;
  std::size_t gallery_per_id = 8;
  std::uint64_t seed = 7;
};

inline void validate(const SynthSpec& spec) {
  check(spec.num_ids >= 1, ErrorCode::SpecInvalid, "num_ids must be >= 1");
  check(spec.samples_per_id >= 1, ErrorCode::SpecInvalid,
        "samples_per_id must be >= 1");
  check(spec.input_dim >= 1, ErrorCode::SpecInvalid, "input_dim must be >= 1");
  check(spec.intra_class_sigma >= 0.0, ErrorCode::SpecInvalid,
        "intra_class_sigma must be >= 0");
  check(spec.noise_rate >= 0.0 && spec.noise_rate < 1.0, ErrorCode::SpecInvalid,
        "noise_rate must be in [0,1)");
  check(spec.noise_rate == 0.0 || spec.num_ids >= 2, ErrorCode::SpecInvalid,
        "noise_rate > 0 needs at least two ids");
  check(spec.camera_shift_sigma >= 0.0, ErrorCode::SpecInvalid,
        "camera_shift_sigma must be >= 0");
  check(spec.num_cameras >= 1, ErrorCode::SpecInvalid, "num_cameras must be >= 1");
}

// Class prototypes drawn uniformly on the hypersphere; samples are
// prototype + Gaussian noise. Exactly round(noise_rate * N_train) training
// labels are reassigned to a different id; query/gallery stay clean.
inline LabeledDataset generate_synthetic(const SynthSpec& spec) {
  validate(spec);
  Rng rng = Rng::stream(spec.seed, 100);

  std::vector<std::vector<double>> prototypes(spec.num_ids);
  for (auto& proto : prototypes) {
    proto.resize(spec.input_dim);
    for (double& v : proto) v = rng.normal();
    l2_normalize_in_place(proto);
  }

  const bool cameras_on = spec.num_cameras >= 2;
  std::vector<std::vector<double>> camera_shift(spec.num_cameras);
  for (auto& shift : camera_shift) {
    shift.assign(spec.input_dim, 0.0);
    if (cameras_on && spec.camera_shift_sigma > 0.0)
      for (double& v : shift) v = rng.normal(0.0, spec.camera_shift_sigma);
  }

  const std::size_t per_id =
      spec.samples_per_id + spec.query_per_id + spec.gallery_per_id;
  const std::size_t total = spec.num_ids * per_id;
  LabeledDataset ds;
  ds.features = Matrix(total, spec.input_dim);
  ds.labels.reserve(total);
  ds.splits.reserve(total);
  if (cameras_on) ds.cameras.reserve(total);

  std::size_t row = 0;
  for (std::size_t id = 0; id < spec.num_ids; ++id) {
    for (std::size_t s = 0; s < per_id; ++s, ++row) {
      const int cam = cameras_on
                          ? static_cast<int>(rng.uniform_int(spec.num_cameras))
                          : 0;
      auto out = ds.features.row(row);
      const auto& proto = prototypes[id];
      const auto& shift = camera_shift[static_cast<std::size_t>(cam)];
      for (std::size_t k = 0; k < spec.input_dim; ++k)
        out[k] = proto[k] + rng.normal(0.0, spec.intra_class_sigma) + shift[k];
      ds.labels.push_back(static_cast<int>(id));
      if (cameras_on) ds.cameras.push_back(cam);
      if (s < spec.samples_per_id)
        ds.splits.push_back(Split::Train);
      else if (s < spec.samples_per_id + spec.query_per_id)
        ds.splits.push_back(Split::Query);
      else
        ds.splits.push_back(Split::Gallery);
    }
  }

  const std::size_t n_train = spec.num_ids * spec.samples_per_id;
  const auto n_noisy = static_cast<std::size_t>(
      std::llround(spec.noise_rate * static_cast<double>(n_train)));
  if (n_noisy > 0) {
    ds.true_labels = ds.labels;
    std::vector<std::size_t> train_idx = ds.indices_of(Split::Train);
    rng.shuffle(train_idx);
    for (std::size_t i = 0; i < n_noisy; ++i) {
      const std::size_t target = train_idx[i];
      const int old_label = ds.labels[target];
      auto drawn = static_cast<int>(rng.uniform_int(spec.num_ids - 1));
      if (drawn >= old_label) ++drawn;
      ds.labels[target] = drawn;
    }
  }
  return ds;
}

// ---------------------------------------------------------------------
// Feature files.
// Text: header "id,camera,f_0,...,f_{D-1}", one sample per row; camera -1
// when the dataset has no camera ids.
// Binary: magic "DCCF", version, N, D as u32 little-endian, then N*D f32
// little-endian. Labels/cameras ride in an optional "<file>.labels.csv"
// sidecar since the binary layout carries features only.
// ---------------------------------------------------------------------

enum class FeatureFileFormat { Text, Binary };

namespace detail {

inline void put_u32_le(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> bytes = {
      static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
      static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes.data(), bytes.size());
}

inline std::uint32_t get_u32_le(std::istream& in, const std::string& what) {
  std::array<unsigned char, 4> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  check(in.gcount() == 4, ErrorCode::ParseError, "truncated " + what);
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

inline std::string labels_sidecar_path(const std::string& path) {
  return path + ".labels.csv";
}

inline double parse_double_field(const std::string& field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  check(ec == std::errc() && ptr == end, ErrorCode::ParseError,
        "line " + std::to_string(line_no) + ": bad number '" + field + "'");
  return value;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace detail

inline void save_features_text(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), ErrorCode::IoError, "cannot open " + path + " for writing");
  out << "id,camera";
  for (std::size_t k = 0; k < ds.features.cols; ++k) out << ",f_" << k;
  out << "\n";
  out.precision(17);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i] << ',' << (ds.has_cameras() ? ds.cameras[i] : -1);
    const auto row = ds.features.row(i);
    for (double v : row) out << ',' << v;
    out << "\n";
  }
  check(out.good(), ErrorCode::IoError, "write failed for " + path);
}

inline void save_features_binary(const LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), ErrorCode::IoError, "cannot open " + path + " for writing");
  out.write("DCCF", 4);
  detail::put_u32_le(out, 1);  // version
  detail::put_u32_le(out, static_cast<std::uint32_t>(ds.features.rows));
  detail::put_u32_le(out, static_cast<std::uint32_t>(ds.features.cols));
  for (double v : ds.features.data) {
    const auto f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof(bits));
    detail::put_u32_le(out, bits);
  }
  check(out.good(), ErrorCode::IoError, "write failed for " + path);

  std::ofstream side(detail::labels_sidecar_path(path));
  check(side.good(), ErrorCode::IoError, "cannot write labels sidecar");
  side << "id,camera\n";
  for (std::size_t i = 0; i < ds.size(); ++i)
    side << ds.labels[i] << ',' << (ds.has_cameras() ? ds.cameras[i] : -1) << "\n";
}

inline void save_features(const LabeledDataset& ds, const std::string& path,
                          FeatureFileFormat format) {
  if (format == FeatureFileFormat::Text)
    save_features_text(ds, path);
  else
    save_features_binary(ds, path);
}

inline LabeledDataset load_features_text(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), ErrorCode::IoError, "cannot open " + path);
  std::string line;
  check(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError,
        path + ": missing header");
  const auto header = detail::split_csv(line);
  check(header.size() >= 3 && header[0] == "id" && header[1] == "camera",
        ErrorCode::ParseError, path + ": header must start with id,camera");
  const std::size_t dim = header.size() - 2;

  LabeledDataset ds;
  std::vector<double> values;
  std::vector<int> cameras;
  bool any_camera = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = detail::split_csv(line);
    check(fields.size() == dim + 2, ErrorCode::ParseError,
          path + ": line " + std::to_string(line_no) + " has " +
              std::to_string(fields.size()) + " fields, expected " +
              std::to_string(dim + 2));
    ds.labels.push_back(
        static_cast<int>(detail::parse_double_field(fields[0], line_no)));
    const int cam =
        static_cast<int>(detail::parse_double_field(fields[1], line_no));
    cameras.push_back(cam);
    if (cam >= 0) any_camera = true;
    for (std::size_t k = 0; k < dim; ++k)
      values.push_back(detail::parse_double_field(fields[k + 2], line_no));
  }
  const std::size_t n = ds.labels.size();
  ds.features = Matrix(n, dim, std::move(values));
  if (any_camera) ds.cameras = std::move(cameras);
  ds.splits.assign(n, Split::Train);
  return ds;
}

inline LabeledDataset load_features_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), ErrorCode::IoError, "cannot open " + path);
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  check(in.gcount() == 4 && std::string_view(magic.data(), 4) == "DCCF",
        ErrorCode::ParseError, path + ": bad magic bytes");
  const std::uint32_t version = detail::get_u32_le(in, "version");
  check(version == 1, ErrorCode::VersionMismatch,
        path + ": unsupported version " + std::to_string(version));
  const std::uint32_t n = detail::get_u32_le(in, "row count");
  const std::uint32_t dim = detail::get_u32_le(in, "column count");

  LabeledDataset ds;
  ds.features = Matrix(n, dim);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n) * dim; ++i) {
    const std::uint32_t bits = detail::get_u32_le(in, "feature payload");
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    ds.features.data[i] = static_cast<double>(f);
  }

  ds.labels.assign(n, 0);
  ds.splits.assign(n, Split::Train);
  const std::string sidecar = detail::labels_sidecar_path(path);
  if (std::filesystem::exists(sidecar)) {
    std::ifstream side(sidecar);
    std::string line;
    check(static_cast<bool>(std::getline(side, line)), ErrorCode::ParseError,
          sidecar + ": missing header");
    std::vector<int> cameras;
    bool any_camera = false;
    std::size_t row = 0, line_no = 1;
    while (std::getline(side, line)) {
      ++line_no;
      if (line.empty()) continue;
      check(row < n, ErrorCode::ParseError, sidecar + ": more rows than features");
      const auto fields = detail::split_csv(line);
      check(fields.size() == 2, ErrorCode::ParseError,
            sidecar + ": line " + std::to_string(line_no));
      ds.labels[row] =
          static_cast<int>(detail::parse_double_field(fields[0], line_no));
      const int cam =
          static_cast<int>(detail::parse_double_field(fields[1], line_no));
      cameras.push_back(cam);
      if (cam >= 0) any_camera = true;
      ++row;
    }
    check(row == n, ErrorCode::ParseError, sidecar + ": fewer rows than features");
    if (any_camera) ds.cameras = std::move(cameras);
  }
  return ds;
}

inline LabeledDataset load_features(const std::string& path,
                                    FeatureFileFormat format) {
  return format == FeatureFileFormat::Text ? load_features_text(path)
                                           : load_features_binary(path);
}

// ---------------------------------------------------------------------
// PK sampling: batches of P distinct ids x K instances each.
// ---------------------------------------------------------------------

// One epoch of batches over `labels` (indices are positions in `labels`).
// Every id with samples appears in at least one batch; ids with fewer than
// K samples are drawn with replacement; a final short chunk is topped up
// with already-covered ids so each batch holds exactly P distinct ids.
inline std::vector<std::vector<std::size_t>> pk_sample(
    const std::vector<int>& labels, std::size_t p, std::size_t k, Rng& rng) {
  check(p >= 1 && k >= 1, ErrorCode::InvalidArgument, "P and K must be >= 1");
  int max_label = -1;
  for (int y : labels) max_label = std::max(max_label, y);
  std::vector<std::vector<std::size_t>> by_id(
      static_cast<std::size_t>(max_label + 1));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    check(labels[i] >= 0, ErrorCode::LabelOutOfRange, "negative label");
    by_id[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<int> ids;
  for (std::size_t y = 0; y < by_id.size(); ++y)
    if (!by_id[y].empty()) ids.push_back(static_cast<int>(y));
  check(p <= ids.size(), ErrorCode::TooFewIds,
        "P=" + std::to_string(p) + " exceeds " + std::to_string(ids.size()) +
            " populated ids");

  rng.shuffle(ids);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < ids.size(); start += p) {
    std::vector<int> chunk(ids.begin() + static_cast<std::ptrdiff_t>(start),
                           ids.begin() + static_cast<std::ptrdiff_t>(
                                             std::min(start + p, ids.size())));
    if (chunk.size() < p) {
      // top up from ids outside the chunk, drawn without replacement
      std::vector<int> pool(ids.begin(),
                            ids.begin() + static_cast<std::ptrdiff_t>(start));
      rng.shuffle(pool);
      chunk.insert(chunk.end(), pool.begin(),
                   pool.begin() + static_cast<std::ptrdiff_t>(p - chunk.size()));
    }
    std::vector<std::size_t> batch;
    batch.reserve(p * k);
    for (int id : chunk) {
      const auto& members = by_id[static_cast<std::size_t>(id)];
      if (members.size() >= k) {
        std::vector<std::size_t> picks(members);
        for (std::size_t j = 0; j < k; ++j) {
          const std::size_t swap_with =
              j + static_cast<std::size_t>(rng.uniform_int(picks.size() - j));
          std::swap(picks[j], picks[swap_with]);
          batch.push_back(picks[j]);
        }
      } else {
        for (std::size_t j = 0; j < k; ++j)
          batch.push_back(
              members[static_cast<std::size_t>(rng.uniform_int(members.size()))]);
      }
    }
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace dcc
