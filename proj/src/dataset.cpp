#include "hazekit/dataset.h"

#include "hazekit/util.h"

namespace hazekit {

namespace {
constexpr uint16_t kVersion = 1;
}

void save_dataset(const std::string& path, const Dataset& ds) {
    const Shape s = ds.hazy.shape;
    if (!(s == ds.clear.shape)) throw_shape("dataset hazy/clear shape mismatch");
    if (s.c != 3) throw_shape("dataset must have 3 channels");
    if (s.n < 0 || s.h > 0xffff || s.w > 0xffff) throw_shape("dataset dims out of range");
    ByteWriter w;
    w.bytes("HZDS", 4);
    w.u16(kVersion);
    w.u32(static_cast<uint32_t>(s.n));
    w.u16(static_cast<uint16_t>(s.c));
    w.u16(static_cast<uint16_t>(s.h));
    w.u16(static_cast<uint16_t>(s.w));
    const size_t img = static_cast<size_t>(s.c) * s.h * s.w;
    for (int i = 0; i < s.n; ++i) {
        w.f32_array(ds.hazy.data() + static_cast<size_t>(i) * img, img);
        w.f32_array(ds.clear.data() + static_cast<size_t>(i) * img, img);
    }
    write_file_atomic(path, w.data().data(), w.data().size());
}

Dataset load_dataset(const std::string& path) {
    ByteReader r(read_file(path));
    char magic[4];
    for (char& ch : magic) ch = static_cast<char>(r.u8());
    if (std::string(magic, 4) != "HZDS") throw_format(path + ": not a dataset file");
    const uint16_t version = r.u16();
    if (version != kVersion)
        throw_format(path + ": unsupported dataset version " + std::to_string(version));
    const uint32_t count = r.u32();
    const uint16_t c = r.u16();
    const uint16_t h = r.u16();
    const uint16_t w = r.u16();
    if (c != 3) throw_format(path + ": dataset must have 3 channels");
    if (h == 0 || w == 0) throw_format(path + ": zero image dimensions");
    Dataset ds;
    const Shape s{static_cast<int>(count), c, h, w};
    ds.hazy = Tensor(s);
    ds.clear = Tensor(s);
    const size_t img = static_cast<size_t>(c) * h * w;
    for (uint32_t i = 0; i < count; ++i) {
        r.f32_array(ds.hazy.data() + static_cast<size_t>(i) * img, img);
        r.f32_array(ds.clear.data() + static_cast<size_t>(i) * img, img);
    }
    r.expect_end(path);
    return ds;
}

}  // namespace hazekit
