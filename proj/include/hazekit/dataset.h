#pragma once

#include <string>

#include "hazekit/tensor.h"

namespace hazekit {

// Paired hazy/clear image set held as two (N,3,H,W) tensors.
struct Dataset {
    Tensor hazy, clear;

    int count() const { return hazy.shape.n; }
    Shape image_shape() const { return Shape{1, hazy.shape.c, hazy.shape.h, hazy.shape.w}; }
};

// On-disk layout (little-endian):
//   "HZDS"  u16 version=1  u32 count  u16 channels=3  u16 height  u16 width
//   then count records of hazy planes (C*H*W f32) followed by clear planes.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

}  // namespace hazekit
