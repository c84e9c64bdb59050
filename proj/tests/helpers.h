#pragma once

#include <filesystem>
#include <string>

#include "hazekit/kernels.h"
#include "hazekit/rng.h"
#include "hazekit/tensor.h"

namespace hazekit::test {

inline Tensor random_tensor(Shape s, Rng& rng, float lo = 0.0f, float hi = 1.0f) {
    Tensor t(s);
    for (float& x : t.v) x = rng.uniform_f(lo, hi);
    return t;
}

// values kept away from 0 so relu/clamp kinks cannot sit inside a finite
// difference's step
inline Tensor random_tensor_off_kinks(Shape s, Rng& rng, float margin = 0.15f) {
    Tensor t(s);
    for (float& x : t.v) {
        const float m = rng.uniform_f(margin, 0.9f);
        x = rng.next_below(2) == 0 ? -m : m;
    }
    return t;
}

// run `fn` under an explicitly selected kernel backend, then restore
template <typename F>
void with_backend(kernels::Backend b, F&& fn) {
    const kernels::Backend saved = kernels::active_backend();
    kernels::select(b);
    try {
        fn();
    } catch (...) {
        kernels::select(saved);
        throw;
    }
    kernels::select(saved);
}

// fresh scratch directory under the system temp root
inline std::string make_temp_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("hazekit_test_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace hazekit::test
