#include "hazekit/image.h"

#include <cmath>
#include <cstdio>

#include "hazekit/util.h"

namespace hazekit {

void write_ppm(const std::string& path, const Tensor& image) {
    const Shape s = image.shape;
    if (s.n != 1 || s.c != 3) throw_shape("ppm export expects a (1,3,H,W) tensor, got " + s.str());
    std::string out = "P6\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n";
    out.reserve(out.size() + static_cast<size_t>(s.h) * s.w * 3);
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = image.at(0, c, y, x);
                v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
                out.push_back(static_cast<char>(static_cast<unsigned>(std::lround(255.0 * v))));
            }
    write_file_atomic(path, out);
}

namespace {
// next whitespace-delimited token, skipping '#' comments
std::string next_token(const std::vector<uint8_t>& data, size_t& pos) {
    while (pos < data.size()) {
        const char ch = static_cast<char>(data[pos]);
        if (ch == '#') {
            while (pos < data.size() && data[pos] != '\n') ++pos;
        } else if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
            ++pos;
        } else {
            break;
        }
    }
    const size_t start = pos;
    while (pos < data.size()) {
        const char ch = static_cast<char>(data[pos]);
        if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') break;
        ++pos;
    }
    if (start == pos) throw_format("ppm: unexpected end of header");
    return std::string(data.begin() + static_cast<long>(start), data.begin() + static_cast<long>(pos));
}

int parse_int(const std::string& tok) {
    int v = 0;
    if (std::sscanf(tok.c_str(), "%d", &v) != 1) throw_format("ppm: bad header token '" + tok + "'");
    return v;
}
}  // namespace

Tensor read_ppm(const std::string& path) {
    const auto data = read_file(path);
    size_t pos = 0;
    if (next_token(data, pos) != "P6") throw_format("ppm: not a P6 file: " + path);
    const int w = parse_int(next_token(data, pos));
    const int h = parse_int(next_token(data, pos));
    const int maxv = parse_int(next_token(data, pos));
    if (w <= 0 || h <= 0) throw_format("ppm: bad dimensions");
    if (maxv != 255) throw_format("ppm: only maxval 255 supported");
    ++pos;  // single whitespace byte after maxval
    const size_t need = static_cast<size_t>(w) * h * 3;
    if (pos + need > data.size()) throw_format("ppm: truncated pixel data");
    Tensor img(Shape{1, 3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(0, c, y, x) = static_cast<float>(data[pos++]) / 255.0f;
    return img;
}

}  // namespace hazekit
