#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "qnpg/mdp.hpp"

namespace qnpg {

/// Provenance stored in the model file header.
struct ModelMetadata {
  /// Generator name, at most 16 ASCII bytes; empty when unknown.
  std::string generator;
  std::uint64_t seed = 0;
  std::uint64_t support_size = 0;
};

struct ModelFile {
  MdpModel model;
  ModelMetadata metadata;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

/**
 * Binary model file, all integers and floats little-endian:
 *
 *   offset  size  field
 *        0     8  magic "QNPGMDP\0"
 *        8     4  u32 format version (1)
 *       12     4  u32 byte-order mark 0x01020304
 *       16     8  u64 |S|
 *       24     8  u64 |A|
 *       32     8  f64 discount
 *       40    16  generator name, NUL padded
 *       56     8  u64 seed
 *       64     8  u64 support size (0 if unknown)
 *       72        rewards: |S|·|A| f64, state-major
 *                 per action a = 0..|A|−1:
 *                   u64 nnz, |S| × u32 row counts,
 *                   nnz × u32 column indices, nnz × f64 probabilities
 *      end-8   8  u64 FNV-1a-64 checksum of every preceding byte
 *
 * A byte-order mark that reads back as 0x04030201 marks a file written with
 * the opposite endianness and is rejected.
 */
void write_model(const MdpModel& model, const std::filesystem::path& path,
                 const ModelMetadata& metadata = {});

/// Reads and validates (validate_model) a binary model file. Throws
/// FormatError with the failing byte offset.
ModelFile read_model_file(const std::filesystem::path& path);

MdpModel read_model(const std::filesystem::path& path);

/// JSON variant for small or hand-written models.
void write_model_json(const MdpModel& model, const std::filesystem::path& path,
                      const ModelMetadata& metadata = {});
ModelFile read_model_json(const std::filesystem::path& path);

/// Dispatches on the ".json" extension.
ModelFile load_model(const std::filesystem::path& path);

/// FNV-1a-64 over a byte range.
std::uint64_t fnv1a64(const unsigned char* data, std::size_t size,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

/// FNV-1a-64 of a whole file.
std::uint64_t file_checksum(const std::filesystem::path& path);

/// Same dimensions, sparsity pattern and bit-identical values.
bool bitwise_equal(const MdpModel& a, const MdpModel& b);

}  // namespace qnpg
