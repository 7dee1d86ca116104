#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "zq/codec.hpp"
#include "zq/model.hpp"

namespace zq {

/// Binary trajectory dump.
///
/// Header (24 bytes, little-endian):
///   bytes 0..7   magic "ZQTRACE1"
///   bytes 8..11  u32 n (state dimension)
///   bytes 12..15 u32 reserved (0)
///   bytes 16..23 u64 scheme-parameter hash
/// Records, little-endian, one per step:
///   t: u64, x: n x f64, delta_exp: i32, adaptive: u32, fixed: n x u16
struct TraceRecord {
    std::uint64_t t = 0;
    std::vector<double> x;
    std::int32_t delta_exp = 0;
    std::uint32_t adaptive = 0;
    std::vector<std::uint16_t> fixed;
};

/// FNV-1a over the canonical parameter rendering; ties a dump to the
/// scheme that produced it.
std::uint64_t params_hash(const SchemeParams& params);

class TraceWriter {
  public:
    TraceWriter(const std::filesystem::path& path, int n,
                const SchemeParams& params);
    void write(const StepRecord& rec);
    void write(const TraceRecord& rec);
    std::uint64_t records_written() const { return count_; }

  private:
    std::ofstream out_;
    int n_;
    std::uint64_t count_ = 0;
};

class TraceReader {
  public:
    explicit TraceReader(const std::filesystem::path& path);
    int n() const { return n_; }
    std::uint64_t hash() const { return hash_; }
    /// Reads the next record; false at end of file.
    bool next(TraceRecord& rec);

  private:
    std::ifstream in_;
    int n_ = 0;
    std::uint64_t hash_ = 0;
};

/// Rebuilds full step records from a dump: e, xhat and u are recomputed
/// from the symbols, bit-identical to the live run.
std::vector<StepRecord> reconstruct_records(const std::filesystem::path& path,
                                            const SystemModel& model,
                                            const SchemeParams& params);

} // namespace zq
