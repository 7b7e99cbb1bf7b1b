#include "alearn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "alearn/format.hpp"

namespace alearn {

namespace {

std::vector<char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return bytes;
}

std::uint32_t read_be32(const std::vector<char>& bytes, std::size_t offset,
                        const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw ParseError(path + ": truncated at byte " + std::to_string(offset) +
                     ", expected 4 more bytes");
  }
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  return (std::uint32_t(u[0]) << 24) | (std::uint32_t(u[1]) << 16) |
         (std::uint32_t(u[2]) << 8) | std::uint32_t(u[3]);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_field_double(std::string_view field, std::size_t line_no, std::size_t col) {
  double out = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError("line " + std::to_string(line_no) + ", field " + std::to_string(col + 1) +
                     ": not a number: '" + std::string(field) + "'");
  }
  return out;
}

int parse_field_label(std::string_view field, std::size_t line_no, std::size_t col) {
  int out = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), out);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || out < 0) {
    throw ParseError("line " + std::to_string(line_no) + ", field " + std::to_string(col + 1) +
                     ": label must be a non-negative integer, got '" + std::string(field) + "'");
  }
  return out;
}

std::vector<Example> load_delimited(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);

  std::vector<Example> out;
  std::size_t n_fields = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;

    std::vector<std::string_view> fields;
    std::string_view rest = line;
    while (true) {
      const std::size_t comma = rest.find(',');
      fields.push_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 2) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": need at least one feature and a label");
    }
    if (n_fields == 0) {
      n_fields = fields.size();
    } else if (fields.size() != n_fields) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(n_fields) + " fields, got " +
                       std::to_string(fields.size()));
    }

    Example ex;
    ex.id = out.size();
    ex.features.reserve(n_fields - 1);
    for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
      ex.features.push_back(parse_field_double(fields[i], line_no, i));
    }
    ex.true_label = parse_field_label(fields.back(), line_no, fields.size() - 1);
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw ParseError(path + ": no data rows");

  // Min-max scale each feature column to [0, 1]; constant columns go to 0.
  const std::size_t dim = out.front().features.size();
  for (std::size_t j = 0; j < dim; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const Example& ex : out) {
      lo = std::min(lo, ex.features[j]);
      hi = std::max(hi, ex.features[j]);
    }
    const double span = hi - lo;
    for (Example& ex : out) {
      ex.features[j] = span > 0.0 ? (ex.features[j] - lo) / span : 0.0;
    }
  }
  return out;
}

std::string derive_labels_path(const std::string& images_path) {
  const std::size_t pos = images_path.rfind("images");
  if (pos == std::string::npos) {
    throw ParseError("cannot derive labels file from '" + images_path +
                     "': path does not contain 'images'");
  }
  std::string labels = images_path;
  labels.replace(pos, 6, "labels");
  return labels;
}

std::vector<Example> load_idx(const std::string& path, std::string labels_path) {
  if (labels_path.empty()) labels_path = derive_labels_path(path);

  const std::vector<char> img = read_file_bytes(path);
  const std::uint32_t img_magic = read_be32(img, 0, path);
  if (img_magic != 0x00000803u) {
    throw ParseError(path + ": byte 0: bad image magic " + std::to_string(img_magic));
  }
  const std::uint32_t n = read_be32(img, 4, path);
  const std::uint32_t rows = read_be32(img, 8, path);
  const std::uint32_t cols = read_be32(img, 12, path);
  const std::size_t pixels = std::size_t(rows) * cols;
  const std::size_t expected = 16 + std::size_t(n) * pixels;
  if (img.size() != expected) {
    throw ParseError(path + ": byte " + std::to_string(img.size()) + ": expected " +
                     std::to_string(expected) + " bytes total");
  }

  const std::vector<char> lab = read_file_bytes(labels_path);
  const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
  if (lab_magic != 0x00000801u) {
    throw ParseError(labels_path + ": byte 0: bad label magic " + std::to_string(lab_magic));
  }
  const std::uint32_t n_lab = read_be32(lab, 4, labels_path);
  if (n_lab != n) {
    throw ParseError(labels_path + ": holds " + std::to_string(n_lab) +
                     " labels for " + std::to_string(n) + " images");
  }
  if (lab.size() != 8 + std::size_t(n)) {
    throw ParseError(labels_path + ": byte " + std::to_string(lab.size()) +
                     ": expected " + std::to_string(8 + std::size_t(n)) + " bytes total");
  }

  std::vector<Example> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Example ex;
    ex.id = i;
    ex.features.resize(pixels);
    const auto* px = reinterpret_cast<const unsigned char*>(img.data() + 16 + std::size_t(i) * pixels);
    for (std::size_t j = 0; j < pixels; ++j) {
      ex.features[j] = static_cast<double>(px[j]) / 255.0;
    }
    ex.true_label = static_cast<unsigned char>(lab[8 + i]);
    out.push_back(std::move(ex));
  }
  if (out.empty()) throw ParseError(path + ": no images");
  return out;
}

}  // namespace

std::vector<std::size_t> largest_remainder_counts(std::span<const double> weights,
                                                  std::size_t total) {
  if (weights.empty()) throw PreconditionError("largest_remainder_counts: no weights");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw PreconditionError("largest_remainder_counts: weights must be finite and non-negative");
    }
    sum += w;
  }
  if (sum <= 0.0) throw PreconditionError("largest_remainder_counts: weights sum to zero");

  std::vector<std::size_t> counts(weights.size(), 0);
  std::vector<double> fracs(weights.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = static_cast<double>(total) * weights[i] / sum;
    counts[i] = static_cast<std::size_t>(std::floor(quota));
    fracs[i] = quota - std::floor(quota);
    assigned += counts[i];
  }
  // Hand out the leftovers by descending fractional remainder, lower index
  // first on ties. Only positive remainders can receive one, so no count
  // overshoots its quota's ceiling.
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fracs[a] > fracs[b]; });
  for (std::size_t k = 0; assigned < total; ++k) {
    counts[order[k]] += 1;
    assigned += 1;
  }
  return counts;
}

std::vector<Example> make_blobs(std::size_t n, std::size_t dim, std::size_t n_classes,
                                double separation, std::span<const double> class_weights,
                                std::uint64_t seed) {
  if (n == 0) throw ConfigError("make_blobs: n must be positive");
  if (dim == 0) throw ConfigError("make_blobs: dim must be positive");
  if (n_classes < 2) throw ConfigError("make_blobs: need at least two classes");
  if (n < n_classes) throw ConfigError("make_blobs: n must be at least n_classes");
  if (!(separation >= 0.0)) throw ConfigError("make_blobs: separation must be non-negative");
  if (!class_weights.empty()) {
    if (class_weights.size() != n_classes) {
      throw ConfigError("make_blobs: class_weights size must match n_classes");
    }
    double sum = 0.0;
    for (double w : class_weights) {
      if (!(w >= 0.0)) throw ConfigError("make_blobs: class_weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("make_blobs: class_weights must sum to 1");
    }
  }

  std::vector<double> weights(class_weights.begin(), class_weights.end());
  if (weights.empty()) weights.assign(n_classes, 1.0);
  const std::vector<std::size_t> counts = largest_remainder_counts(weights, n);

  RngStream rng(seed);

  // Class centers: separation times mutually orthogonal seeded directions.
  // Plain random directions can land nearly parallel (two classes then
  // overlap no matter how large the separation), so each direction is
  // Gram-Schmidt-orthogonalized against the ones before it; any two
  // centers end up sqrt(2) * separation apart. With more classes than
  // dimensions the surplus directions stay plain random unit vectors.
  std::vector<std::vector<double>> centers(n_classes, std::vector<double>(dim, 0.0));
  std::vector<std::vector<double>> basis;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::vector<double>& center = centers[c];
    double norm = 0.0;
    do {
      for (double& v : center) v = rng.next_normal();
      if (basis.size() < dim) {
        for (const auto& b : basis) {
          double dot = 0.0;
          for (std::size_t j = 0; j < dim; ++j) dot += center[j] * b[j];
          for (std::size_t j = 0; j < dim; ++j) center[j] -= dot * b[j];
        }
      }
      norm = 0.0;
      for (double v : center) norm += v * v;
      norm = std::sqrt(norm);
    } while (norm < 1e-6);
    for (double& v : center) v /= norm;
    if (basis.size() < dim) basis.push_back(center);
    for (double& v : center) v *= separation;
  }

  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t k = 0; k < counts[c]; ++k) {
      Example ex;
      ex.true_label = static_cast<int>(c);
      ex.features.resize(dim);
      for (std::size_t j = 0; j < dim; ++j) {
        ex.features[j] = centers[c][j] + rng.next_normal();
      }
      out.push_back(std::move(ex));
    }
  }
  rng.shuffle(out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = i;
  return out;
}

std::vector<Example> load_table(const std::string& path, TableFormat format,
                                const std::string& labels_path) {
  switch (format) {
    case TableFormat::delimited:
      if (!labels_path.empty()) {
        throw ConfigError("load_table: labels_path only applies to idx_images");
      }
      return load_delimited(path);
    case TableFormat::idx_images:
      return load_idx(path, labels_path);
  }
  throw ConfigError("load_table: unknown format");
}

void save_delimited(const std::string& path, std::span<const Example> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  std::string line;
  for (const Example& ex : examples) {
    line.clear();
    for (double v : ex.features) {
      line += format_double(v);
      line += ',';
    }
    line += std::to_string(ex.true_label);
    line += '\n';
    out << line;
  }
  if (!out) throw ParseError("write failed: " + path);
}

std::pair<std::vector<Example>, std::vector<Example>> stratified_split(
    std::span<const Example> examples, double test_fraction, std::uint64_t seed) {
  if (examples.empty()) throw PreconditionError("stratified_split: no examples");
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    throw ConfigError("stratified_split: test_fraction must be in (0, 1)");
  }
  const std::size_t n = examples.size();
  const std::size_t test_total =
      static_cast<std::size_t>(std::ceil(static_cast<double>(n) * test_fraction));
  if (test_total >= n) {
    throw ConfigError("stratified_split: test_fraction leaves no training pool");
  }

  int max_label = 0;
  for (const Example& ex : examples) max_label = std::max(max_label, ex.true_label);
  const std::size_t n_classes = static_cast<std::size_t>(max_label) + 1;

  std::vector<std::vector<std::size_t>> by_class(n_classes);  // positions, ascending id
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return examples[a].id < examples[b].id;
  });
  for (std::size_t pos : order) {
    by_class[static_cast<std::size_t>(examples[pos].true_label)].push_back(pos);
  }

  std::vector<double> weights(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    weights[c] = static_cast<double>(by_class[c].size());
  }
  const std::vector<std::size_t> test_counts = largest_remainder_counts(weights, test_total);

  RngStream rng(seed);
  std::vector<char> is_test(n, 0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (test_counts[c] == 0) continue;
    const std::vector<std::size_t> picks =
        rng.sample_indices(by_class[c].size(), test_counts[c]);
    for (std::size_t k : picks) is_test[by_class[c][k]] = 1;
  }

  std::vector<Example> pool, test;
  pool.reserve(n - test_total);
  test.reserve(test_total);
  for (std::size_t pos : order) {
    (is_test[pos] ? test : pool).push_back(examples[pos]);
  }
  return {std::move(pool), std::move(test)};
}

DatasetPool::DatasetPool(std::vector<Example> pool_part, std::vector<Example> test_part,
                         std::vector<Example> val_part) {
  if (pool_part.empty()) throw DataError("dataset: labelable pool is empty");

  const auto ingest = [this](std::vector<Example>& src, Part part) {
    for (Example& ex : src) {
      part_.push_back(part);
      examples_.push_back(std::move(ex));
    }
    src.clear();
  };
  ingest(pool_part, Part::oracle);
  ingest(test_part, Part::test);
  ingest(val_part, Part::val);

  std::size_t max_id = 0;
  for (const Example& ex : examples_) max_id = std::max(max_id, ex.id);
  id_to_pos_.assign(max_id + 1, std::numeric_limits<std::size_t>::max());

  feature_dim_ = examples_.front().features.size();
  int max_label = 0;
  for (std::size_t pos = 0; pos < examples_.size(); ++pos) {
    const Example& ex = examples_[pos];
    if (ex.features.size() != feature_dim_) {
      throw DataError("dataset: example " + std::to_string(ex.id) +
                      " has inconsistent feature width");
    }
    if (ex.true_label < 0) {
      throw DataError("dataset: example " + std::to_string(ex.id) + " has negative label");
    }
    if (id_to_pos_[ex.id] != std::numeric_limits<std::size_t>::max()) {
      throw DataError("dataset: duplicate id " + std::to_string(ex.id));
    }
    id_to_pos_[ex.id] = pos;
    max_label = std::max(max_label, ex.true_label);

    switch (part_[pos]) {
      case Part::oracle: oracle_ids_.push_back(ex.id); break;
      case Part::test: test_ids_.push_back(ex.id); break;
      case Part::val: val_ids_.push_back(ex.id); break;
      case Part::train: break;
    }
  }
  n_classes_ = static_cast<std::size_t>(max_label) + 1;
  if (n_classes_ < 2) {
    throw DataError("dataset: need at least two classes, found " + std::to_string(n_classes_));
  }
  std::sort(oracle_ids_.begin(), oracle_ids_.end());
  std::sort(test_ids_.begin(), test_ids_.end());
  std::sort(val_ids_.begin(), val_ids_.end());
}

const Example& DatasetPool::example_at(std::size_t id) const {
  if (id >= id_to_pos_.size() ||
      id_to_pos_[id] == std::numeric_limits<std::size_t>::max()) {
    throw DataError("dataset: unknown id " + std::to_string(id));
  }
  return examples_[id_to_pos_[id]];
}

Matrix DatasetPool::features_of(std::span<const std::size_t> ids) const {
  Matrix out(ids.size(), feature_dim_);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Example& ex = example_at(ids[i]);
    std::copy(ex.features.begin(), ex.features.end(), out.data.begin() + i * feature_dim_);
  }
  return out;
}

std::vector<int> DatasetPool::labels_of(std::span<const std::size_t> ids) const {
  std::vector<int> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) {
    const Example& ex = example_at(id);
    if (part_[id_to_pos_[id]] == Part::oracle) {
      throw DataError("dataset: label of id " + std::to_string(id) +
                      " is hidden until it is labeled");
    }
    out.push_back(ex.true_label);
  }
  return out;
}

void DatasetPool::label(std::span<const std::size_t> span_ids) {
  // Copy first: callers may pass a view of oracle_ids(), which the second
  // loop below mutates.
  const std::vector<std::size_t> ids(span_ids.begin(), span_ids.end());
  std::vector<char> seen(id_to_pos_.size(), 0);
  for (std::size_t id : ids) {
    const Example& ex = example_at(id);  // validates existence
    const std::size_t pos = id_to_pos_[ex.id];
    if (part_[pos] != Part::oracle) {
      throw PreconditionError("dataset: id " + std::to_string(id) +
                              " is not in the oracle partition");
    }
    if (seen[id]) {
      throw PreconditionError("dataset: duplicate id " + std::to_string(id) +
                              " in label batch");
    }
    seen[id] = 1;
  }
  for (std::size_t id : ids) {
    part_[id_to_pos_[id]] = Part::train;
    train_ids_.push_back(id);
    const auto it = std::lower_bound(oracle_ids_.begin(), oracle_ids_.end(), id);
    oracle_ids_.erase(it);
  }
}

std::vector<std::size_t> DatasetPool::stratified_oracle_draw(std::size_t count,
                                                             RngStream& rng) const {
  if (count > oracle_ids_.size()) {
    throw PreconditionError("stratified_oracle_draw: asked for " + std::to_string(count) +
                            " of " + std::to_string(oracle_ids_.size()) + " oracle ids");
  }
  if (count == 0) return {};

  // Setup-time stratification: this reads hidden labels to balance the
  // initial draw, exactly like the offline split that produced the pool.
  // Training paths never call it after the loop starts.
  std::vector<std::vector<std::size_t>> by_class(n_classes_);
  for (std::size_t id : oracle_ids_) {
    by_class[static_cast<std::size_t>(example_at(id).true_label)].push_back(id);
  }
  std::vector<double> weights(n_classes_, 0.0);
  for (std::size_t c = 0; c < n_classes_; ++c) {
    weights[c] = static_cast<double>(by_class[c].size());
  }
  const std::vector<std::size_t> class_counts = largest_remainder_counts(weights, count);

  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t c = 0; c < n_classes_; ++c) {
    if (class_counts[c] == 0) continue;
    for (std::size_t k : rng.sample_indices(by_class[c].size(), class_counts[c])) {
      out.push_back(by_class[c][k]);
    }
  }
  // Shuffle so labeling order carries no class signal.
  rng.shuffle(out);
  return out;
}

bool DatasetPool::is_labeled(std::size_t id) const {
  return part_[id_to_pos_[example_at(id).id]] == Part::train;
}

}  // namespace alearn
