#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace glue {

/// Quantile with linear interpolation between order statistics:
/// q(p) lands at fractional index (n-1)*p of the sorted sample. This is the
/// single quantile convention used everywhere in the toolkit.
double quantile_sorted(std::span<const double> sorted, double p);

/// Sorts a copy, then interpolates.
double quantile(std::span<const double> values, double p);

double median(std::span<const double> values);

/// Splits [0, n) into contiguous chunks and runs them on up to `threads`
/// workers. Callers keep determinism by writing to disjoint slots.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

/// FNV-1a 64-bit, used for config fingerprints in reports.
std::uint64_t fnv1a64(std::string_view bytes);

std::string to_hex(std::uint64_t v);

/// Locale-independent float formatting (shortest round-trip, %.17g fallback).
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

/// Little-endian binary encoder for the toolkit's persisted artifacts.
/// Doubles are stored as their IEEE-754 bit patterns, so round-trips are
/// bitwise exact.
class BinWriter {
  public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f64_span(std::span<const double> v);
    void str(std::string_view s);  // u64 length + raw bytes
    void raw(std::string_view bytes) { buf_.append(bytes); }
    const std::string& bytes() const { return buf_; }
    void save(const std::string& path) const;

  private:
    std::string buf_;
};

/// Matching decoder; every accessor throws IoError on truncation.
class BinReader {
  public:
    explicit BinReader(std::string bytes, std::string origin = "<memory>")
        : buf_(std::move(bytes)), origin_(std::move(origin)) {}
    static BinReader open(const std::string& path);

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    void f64_span(std::span<double> out);
    std::string str();
    std::string raw(std::size_t n);
    bool at_end() const { return pos_ == buf_.size(); }
    const std::string& origin() const { return origin_; }

  private:
    void need(std::size_t n) const;
    std::string buf_;
    std::string origin_;
    std::size_t pos_ = 0;
};

}  // namespace glue
