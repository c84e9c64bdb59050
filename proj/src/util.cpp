#include "hazekit/util.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "hazekit/error.h"
#include "hazekit/rng.h"

namespace hazekit {

void ByteWriter::u16(uint16_t v) {
    buf_.push_back(static_cast<uint8_t>(v));
    buf_.push_back(static_cast<uint8_t>(v >> 8));
}
void ByteWriter::u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void ByteWriter::u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
void ByteWriter::f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
void ByteWriter::bytes(const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
}
void ByteWriter::f32_array(const float* p, size_t n) {
    for (size_t i = 0; i < n; ++i) f32(p[i]);
}

void ByteReader::need(size_t n) const {
    if (pos_ + n > buf_.size()) throw_format("unexpected end of file");
}
uint8_t ByteReader::u8() {
    need(1);
    return buf_[pos_++];
}
uint16_t ByteReader::u16() {
    need(2);
    uint16_t v = static_cast<uint16_t>(buf_[pos_] | (buf_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
}
uint32_t ByteReader::u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}
uint64_t ByteReader::u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
}
float ByteReader::f32() { return std::bit_cast<float>(u32()); }
void ByteReader::f32_array(float* p, size_t n) {
    for (size_t i = 0; i < n; ++i) p[i] = f32();
}
void ByteReader::expect_end(const std::string& what) const {
    if (pos_ != buf_.size())
        throw_format(what + ": " + std::to_string(buf_.size() - pos_) + " trailing bytes");
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw_io("cannot open " + path);
    f.seekg(0, std::ios::end);
    const auto len = f.tellg();
    f.seekg(0);
    std::vector<uint8_t> data(static_cast<size_t>(len));
    if (len > 0) f.read(reinterpret_cast<char*>(data.data()), len);
    if (!f) throw_io("cannot read " + path);
    return data;
}

void write_file_atomic(const std::string& path, const void* data, size_t n) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw_io("cannot create " + tmp);
        if (n > 0) f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        if (!f) throw_io("cannot write " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw_io("cannot rename " + tmp + " -> " + path + ": " + ec.message());
}

void write_file_atomic(const std::string& path, const std::string& text) {
    write_file_atomic(path, text.data(), text.size());
}

uint64_t hash_file(const std::string& path) {
    const auto data = read_file(path);
    return fnv1a64(data.data(), data.size());
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // prefer the shortest representation that round-trips
    for (int prec = 1; prec <= 16; ++prec) {
        char s[64];
        std::snprintf(s, sizeof s, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(s, "%lf", &back);
        if (back == v) return s;
    }
    return buf;
}

std::string fmt_float(float v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    for (int prec = 1; prec <= 8; ++prec) {
        char s[48];
        std::snprintf(s, sizeof s, "%.*g", prec, v);
        float back = 0.0f;
        std::sscanf(s, "%f", &back);
        if (back == v) return s;
    }
    return buf;
}

std::string path_join(const std::string& a, const std::string& b) {
    return (std::filesystem::path(a) / b).string();
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw_io("cannot create directory " + path + ": " + ec.message());
}

std::vector<std::string> split(const std::string& s, char delim) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == delim) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::string Csv::to_string() const {
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

Csv Csv::parse(const std::string& text) {
    Csv csv;
    bool first = true;
    for (const auto& line : split(text, '\n')) {
        if (line.empty()) continue;
        auto fields = split(line, ',');
        if (first) {
            csv.header = std::move(fields);
            first = false;
        } else {
            csv.rows.push_back(std::move(fields));
        }
    }
    if (first) throw_format("empty csv");
    return csv;
}

int Csv::col(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

}  // namespace hazekit
