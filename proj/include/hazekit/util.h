#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hazekit {

// Explicit little-endian serialization so artifact files are identical on
// any host. Readers throw Error(Format) on truncation.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v);
    void u32(uint32_t v);
    void u64(uint64_t v);
    void f32(float v);
    void bytes(const void* p, size_t n);
    void f32_array(const float* p, size_t n);
    const std::vector<uint8_t>& data() const { return buf_; }

private:
    std::vector<uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<uint8_t> data) : buf_(std::move(data)) {}
    uint8_t u8();
    uint16_t u16();
    uint32_t u32();
    uint64_t u64();
    float f32();
    void f32_array(float* p, size_t n);
    size_t remaining() const { return buf_.size() - pos_; }
    void expect_end(const std::string& what) const;

private:
    void need(size_t n) const;
    std::vector<uint8_t> buf_;
    size_t pos_ = 0;
};

// whole-file io; throws Error(Io)
std::vector<uint8_t> read_file(const std::string& path);
// writes to <path>.tmp then renames, so failures never leave partial files
void write_file_atomic(const std::string& path, const void* data, size_t n);
void write_file_atomic(const std::string& path, const std::string& text);

uint64_t hash_file(const std::string& path);

// shortest round-trip decimal formatting for CSV/JSON payloads
std::string fmt_double(double v);
std::string fmt_float(float v);

std::string path_join(const std::string& a, const std::string& b);
void ensure_dir(const std::string& path);

// split on a delimiter, no trimming
std::vector<std::string> split(const std::string& s, char delim);

// Minimal CSV: header + rows of plain (unquoted) fields. Values in this
// project never contain commas or newlines.
struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const;
    static Csv parse(const std::string& text);
    int col(const std::string& name) const;  // -1 when missing
};

}  // namespace hazekit
