#pragma once

#include <string>

#include "hazekit/tensor.h"

namespace hazekit {

// Binary PPM (P6), 8-bit. Export clamps to [0,1] and quantizes with
// round(255*v); import maps back as v = byte/255.
void write_ppm(const std::string& path, const Tensor& image);  // (1,3,H,W)
Tensor read_ppm(const std::string& path);

}  // namespace hazekit
