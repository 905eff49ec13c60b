#include "gator/obj_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "gator/error.hpp"

namespace gator {

void export_obj(const Tensor& vertices, const std::vector<std::array<int, 3>>& faces, const std::string& path) {
    if (vertices.rank() != 2 || vertices.cols() != 3) {
        throw ContractError("export_obj: vertices must be [V,3], got " + shape_str(vertices.shape()));
    }
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw IoError("export_obj: cannot open '" + path + "' for writing");
    for (int v = 0; v < vertices.rows(); ++v) {
        std::fprintf(f, "v %.17g %.17g %.17g\n", vertices.at(v, 0), vertices.at(v, 1), vertices.at(v, 2));
    }
    for (const auto& face : faces) {
        std::fprintf(f, "f %d %d %d\n", face[0] + 1, face[1] + 1, face[2] + 1);
    }
    if (std::fclose(f) != 0) throw IoError("export_obj: failed to write '" + path + "'");
}

ObjMesh import_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("import_obj: cannot open '" + path + "'");
    std::vector<double> coords;
    std::vector<std::array<int, 3>> faces;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream is(line);
        std::string tag;
        if (!(is >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(is >> x >> y >> z)) throw IoError("import_obj: bad vertex at line " + std::to_string(lineno));
            coords.push_back(x);
            coords.push_back(y);
            coords.push_back(z);
        } else if (tag == "f") {
            std::array<int, 3> face{};
            for (int c = 0; c < 3; ++c) {
                std::string tok;
                if (!(is >> tok)) throw IoError("import_obj: bad face at line " + std::to_string(lineno));
                // tolerate v/vt/vn forms from external exporters
                face[static_cast<size_t>(c)] = std::stoi(tok.substr(0, tok.find('/'))) - 1;
            }
            faces.push_back(face);
        }
    }
    if (coords.empty()) throw IoError("import_obj: no vertices in '" + path + "'");
    ObjMesh mesh;
    mesh.vertices = Tensor::from_values({static_cast<int>(coords.size() / 3), 3}, std::move(coords));
    mesh.faces = std::move(faces);
    return mesh;
}

Tensor import_regressor_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("import_regressor_csv: cannot open '" + path + "'");
    std::vector<double> values;
    int rows = 0, cols = -1;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string cell;
        int this_cols = 0;
        while (std::getline(is, cell, ',')) {
            values.push_back(std::stod(cell));
            ++this_cols;
        }
        if (cols < 0) cols = this_cols;
        else if (cols != this_cols) throw IoError("import_regressor_csv: ragged row in '" + path + "'");
        ++rows;
    }
    if (rows == 0 || cols <= 0) throw IoError("import_regressor_csv: empty file '" + path + "'");
    return Tensor::from_values({rows, cols}, std::move(values));
}

}  // namespace gator
