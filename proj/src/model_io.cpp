#include "qnpg/model_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "json.hpp"

#include "qnpg/errors.hpp"

namespace qnpg {

namespace {

constexpr std::array<unsigned char, 8> kMagic = {'Q', 'N', 'P', 'G',
                                                 'M', 'D', 'P', '\0'};
constexpr std::uint32_t kByteOrderMark = 0x01020304;
constexpr std::uint32_t kSwappedByteOrderMark = 0x04030201;
constexpr std::size_t kGeneratorField = 16;

class ByteWriter {
 public:
  void put_bytes(const unsigned char* data, std::size_t n) {
    bytes_.insert(bytes_.end(), data, data + n);
  }
  void put_u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back((v >> (8 * i)) & 0xff);
  }
  void put_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back((v >> (8 * i)) & 0xff);
  }
  void put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<unsigned char>& bytes, std::size_t end)
      : bytes_(bytes), end_(end) {}

  std::uint64_t offset() const { return pos_; }
  std::size_t remaining() const { return end_ - pos_; }

  const unsigned char* take(std::size_t n) {
    if (n > remaining()) throw FormatError("truncated model file", pos_);
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32() {
    const unsigned char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  std::uint64_t u64() {
    const unsigned char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path,
                 const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void check_writable(const MdpModel& model, const ModelMetadata& metadata) {
  if (metadata.generator.size() > kGeneratorField) {
    throw SpecError("generator name longer than 16 bytes");
  }
  if (model.rewards.rows() != model.num_states ||
      model.rewards.cols() != model.num_actions ||
      static_cast<Eigen::Index>(model.transitions.size()) !=
          model.num_actions) {
    throw DimensionError("model dimensions are inconsistent");
  }
}

}  // namespace

std::uint64_t fnv1a64(const unsigned char* data, std::size_t size,
                      std::uint64_t basis) {
  std::uint64_t h = basis;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return fnv1a64(bytes.data(), bytes.size());
}

void write_model(const MdpModel& model, const std::filesystem::path& path,
                 const ModelMetadata& metadata) {
  check_writable(model, metadata);
  ByteWriter w;
  w.put_bytes(kMagic.data(), kMagic.size());
  w.put_u32(kModelFormatVersion);
  w.put_u32(kByteOrderMark);
  w.put_u64(static_cast<std::uint64_t>(model.num_states));
  w.put_u64(static_cast<std::uint64_t>(model.num_actions));
  w.put_f64(model.discount);
  std::array<unsigned char, kGeneratorField> name{};
  std::memcpy(name.data(), metadata.generator.data(), metadata.generator.size());
  w.put_bytes(name.data(), name.size());
  w.put_u64(metadata.seed);
  w.put_u64(metadata.support_size);

  for (Eigen::Index s = 0; s < model.num_states; ++s) {
    for (Eigen::Index a = 0; a < model.num_actions; ++a) {
      w.put_f64(model.rewards(s, a));
    }
  }
  for (const auto& p : model.transitions) {
    w.put_u64(static_cast<std::uint64_t>(p.nonZeros()));
    for (Eigen::Index s = 0; s < model.num_states; ++s) {
      w.put_u32(static_cast<std::uint32_t>(p.outerIndexPtr()[s + 1] -
                                           p.outerIndexPtr()[s]));
    }
    for (Eigen::Index s = 0; s < model.num_states; ++s) {
      for (SparseMatrix::InnerIterator it(p, s); it; ++it) {
        w.put_u32(static_cast<std::uint32_t>(it.col()));
      }
    }
    for (Eigen::Index s = 0; s < model.num_states; ++s) {
      for (SparseMatrix::InnerIterator it(p, s); it; ++it) {
        w.put_f64(it.value());
      }
    }
  }
  auto& bytes = w.bytes();
  w.put_u64(fnv1a64(bytes.data(), bytes.size()));
  write_bytes(path, bytes);
}

ModelFile read_model_file(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  const std::size_t head = std::min(bytes.size(), kMagic.size());
  if (std::memcmp(bytes.data(), kMagic.data(), head) != 0) {
    throw FormatError("not a model file (bad magic)", 0);
  }
  if (bytes.size() < 8) throw FormatError("truncated model file", 0);
  const std::size_t body = bytes.size() - 8;
  ByteReader r(bytes, body);

  const unsigned char* magic = r.take(kMagic.size());
  if (std::memcmp(magic, kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("not a model file (bad magic)", 0);
  }
  const auto version_at = r.offset();
  const std::uint32_t version = r.u32();
  const auto bom_at = r.offset();
  const std::uint32_t bom = r.u32();
  if (bom == kSwappedByteOrderMark) {
    throw FormatError("model file has foreign (big-endian) byte order", bom_at);
  }
  if (bom != kByteOrderMark) {
    throw FormatError("bad byte-order mark", bom_at);
  }
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " +
                          std::to_string(version),
                      version_at);
  }

  ByteReader trailer(bytes, bytes.size());
  trailer.take(body);
  const std::uint64_t stored = trailer.u64();
  if (stored != fnv1a64(bytes.data(), body)) {
    throw FormatError("checksum mismatch", body);
  }

  ModelFile file;
  MdpModel& model = file.model;
  const auto dims_at = r.offset();
  const std::uint64_t n = r.u64();
  const std::uint64_t m = r.u64();
  // Cheap sanity bound before allocating: rewards alone need 8·n·m bytes.
  if (n == 0 || m == 0 || n > r.remaining() || m > r.remaining() ||
      n * m > r.remaining() / 8) {
    throw FormatError("implausible model dimensions", dims_at);
  }
  model.num_states = static_cast<Eigen::Index>(n);
  model.num_actions = static_cast<Eigen::Index>(m);
  model.discount = r.f64();
  const unsigned char* name = r.take(kGeneratorField);
  file.metadata.generator.assign(
      reinterpret_cast<const char*>(name),
      strnlen(reinterpret_cast<const char*>(name), kGeneratorField));
  file.metadata.seed = r.u64();
  file.metadata.support_size = r.u64();

  model.rewards.resize(model.num_states, model.num_actions);
  for (Eigen::Index s = 0; s < model.num_states; ++s) {
    for (Eigen::Index a = 0; a < model.num_actions; ++a) {
      model.rewards(s, a) = r.f64();
    }
  }

  model.transitions.reserve(static_cast<std::size_t>(m));
  for (std::uint64_t a = 0; a < m; ++a) {
    const auto nnz_at = r.offset();
    const std::uint64_t nnz = r.u64();
    if (nnz > r.remaining() / 12) {
      throw FormatError("transition block larger than the file", nnz_at);
    }
    std::vector<std::uint32_t> counts(n);
    std::uint64_t total = 0;
    for (auto& c : counts) {
      c = r.u32();
      total += c;
    }
    if (total != nnz) {
      throw FormatError("row counts do not add up to nnz", nnz_at);
    }
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(nnz);
    std::vector<std::uint32_t> cols(nnz);
    for (auto& c : cols) {
      const auto at = r.offset();
      c = r.u32();
      if (c >= n) throw FormatError("column index out of range", at);
    }
    std::size_t idx = 0;
    for (std::uint64_t s = 0; s < n; ++s) {
      std::int64_t last_col = -1;
      for (std::uint32_t j = 0; j < counts[s]; ++j, ++idx) {
        const auto at = r.offset();
        if (static_cast<std::int64_t>(cols[idx]) <= last_col) {
          throw FormatError("column indices must be strictly increasing", at);
        }
        last_col = cols[idx];
        entries.emplace_back(static_cast<Eigen::Index>(s),
                             static_cast<Eigen::Index>(cols[idx]), r.f64());
      }
    }
    SparseMatrix p(model.num_states, model.num_states);
    p.setFromTriplets(entries.begin(), entries.end());
    p.makeCompressed();
    model.transitions.push_back(std::move(p));
  }
  if (r.remaining() != 0) {
    throw FormatError("trailing bytes after transition blocks", r.offset());
  }
  validate_model(model);
  return file;
}

MdpModel read_model(const std::filesystem::path& path) {
  return read_model_file(path).model;
}

void write_model_json(const MdpModel& model, const std::filesystem::path& path,
                      const ModelMetadata& metadata) {
  check_writable(model, metadata);
  nlohmann::json doc;
  doc["format"] = "qnpg-mdp";
  doc["version"] = kModelFormatVersion;
  doc["num_states"] = model.num_states;
  doc["num_actions"] = model.num_actions;
  doc["discount"] = model.discount;
  doc["generator"] = {{"name", metadata.generator},
                      {"seed", metadata.seed},
                      {"support_size", metadata.support_size}};
  auto& rewards = doc["rewards"] = nlohmann::json::array();
  for (Eigen::Index s = 0; s < model.num_states; ++s) {
    auto row = nlohmann::json::array();
    for (Eigen::Index a = 0; a < model.num_actions; ++a) {
      row.push_back(model.rewards(s, a));
    }
    rewards.push_back(std::move(row));
  }
  auto& transitions = doc["transitions"] = nlohmann::json::array();
  for (const auto& p : model.transitions) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index s = 0; s < model.num_states; ++s) {
      auto row = nlohmann::json::array();
      for (SparseMatrix::InnerIterator it(p, s); it; ++it) {
        row.push_back({it.col(), it.value()});
      }
      rows.push_back(std::move(row));
    }
    transitions.push_back(std::move(rows));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << doc.dump(1) << '\n';
}

ModelFile read_model_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  ModelFile file;
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.at("version").get<std::uint32_t>() != kModelFormatVersion) {
      throw FormatError("unsupported model format version", 0);
    }
    MdpModel& model = file.model;
    model.num_states = doc.at("num_states").get<Eigen::Index>();
    model.num_actions = doc.at("num_actions").get<Eigen::Index>();
    model.discount = doc.at("discount").get<double>();
    if (doc.contains("generator")) {
      const auto& g = doc["generator"];
      file.metadata.generator = g.value("name", "");
      file.metadata.seed = g.value("seed", std::uint64_t{0});
      file.metadata.support_size = g.value("support_size", std::uint64_t{0});
    }
    const auto& rewards = doc.at("rewards");
    model.rewards.resize(model.num_states, model.num_actions);
    if (static_cast<Eigen::Index>(rewards.size()) != model.num_states) {
      throw DimensionError("reward table must have |S| rows");
    }
    for (Eigen::Index s = 0; s < model.num_states; ++s) {
      const auto& row = rewards.at(s);
      if (static_cast<Eigen::Index>(row.size()) != model.num_actions) {
        throw DimensionError("reward rows must have |A| entries");
      }
      for (Eigen::Index a = 0; a < model.num_actions; ++a) {
        model.rewards(s, a) = row.at(a).get<double>();
      }
    }
    for (const auto& block : doc.at("transitions")) {
      if (static_cast<Eigen::Index>(block.size()) != model.num_states) {
        throw DimensionError("transition blocks must have |S| rows");
      }
      std::vector<Eigen::Triplet<double>> entries;
      for (Eigen::Index s = 0; s < model.num_states; ++s) {
        for (const auto& entry : block.at(s)) {
          const auto col = entry.at(0).get<Eigen::Index>();
          if (col < 0 || col >= model.num_states) {
            throw DimensionError("transition column out of range");
          }
          entries.emplace_back(s, col, entry.at(1).get<double>());
        }
      }
      SparseMatrix p(model.num_states, model.num_states);
      p.setFromTriplets(entries.begin(), entries.end());
      p.makeCompressed();
      model.transitions.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed JSON model: ") + e.what(), 0);
  }
  validate_model(file.model);
  return file;
}

ModelFile load_model(const std::filesystem::path& path) {
  return path.extension() == ".json" ? read_model_json(path)
                                     : read_model_file(path);
}

bool bitwise_equal(const MdpModel& a, const MdpModel& b) {
  auto same_bits = [](double x, double y) {
    return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
  };
  if (a.num_states != b.num_states || a.num_actions != b.num_actions ||
      !same_bits(a.discount, b.discount) ||
      a.transitions.size() != b.transitions.size() ||
      a.rewards.rows() != b.rewards.rows() ||
      a.rewards.cols() != b.rewards.cols()) {
    return false;
  }
  for (Eigen::Index i = 0; i < a.rewards.size(); ++i) {
    if (!same_bits(a.rewards.data()[i], b.rewards.data()[i])) return false;
  }
  for (std::size_t k = 0; k < a.transitions.size(); ++k) {
    const auto& p = a.transitions[k];
    const auto& q = b.transitions[k];
    if (p.rows() != q.rows() || p.cols() != q.cols() ||
        p.nonZeros() != q.nonZeros()) {
      return false;
    }
    for (Eigen::Index s = 0; s < p.outerSize(); ++s) {
      SparseMatrix::InnerIterator it(p, s), jt(q, s);
      for (; it && jt; ++it, ++jt) {
        if (it.col() != jt.col() || !same_bits(it.value(), jt.value())) {
          return false;
        }
      }
      if (it || jt) return false;
    }
  }
  return true;
}

}  // namespace qnpg
