#pragma once

#include <array>
#include <string>
#include <vector>

#include "gator/tensor.hpp"

namespace gator {

// Wavefront OBJ with 17-significant-digit vertices so a round trip through
// text recovers the doubles bit-exactly.
void export_obj(const Tensor& vertices, const std::vector<std::array<int, 3>>& faces, const std::string& path);

struct ObjMesh {
    Tensor vertices;
    std::vector<std::array<int, 3>> faces;
};

ObjMesh import_obj(const std::string& path);

// N rows x V comma-separated columns
Tensor import_regressor_csv(const std::string& path);

}  // namespace gator
