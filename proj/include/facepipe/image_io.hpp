#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "facepipe/error.hpp"
#include "facepipe/image.hpp"

namespace facepipe {

// Binary PPM (P6, maxval 255) is the bit-exact baseline image format.

inline Image read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InvalidInputError("cannot open image file: " + path);

    auto next_token = [&]() -> std::string {
        std::string tok;
        while (in) {
            int ch = in.peek();
            if (ch == '#') { // comment runs to end of line
                std::string line;
                std::getline(in, line);
                continue;
            }
            if (std::isspace(ch)) {
                in.get();
                continue;
            }
            in >> tok;
            return tok;
        }
        throw InvalidInputError("truncated PPM header: " + path);
    };

    if (next_token() != "P6")
        throw InvalidInputError("not a binary PPM (P6) file: " + path);
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw InvalidInputError("malformed PPM header: " + path);
    }
    if (w <= 0 || h <= 0)
        throw InvalidInputError("invalid PPM dimensions: " + path);
    if (maxval != 255)
        throw InvalidInputError("only maxval 255 PPM supported: " + path);
    in.get(); // single whitespace after maxval

    Image img(w, h);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (static_cast<size_t>(in.gcount()) != img.pixels.size())
        throw InvalidInputError("truncated PPM pixel data: " + path);
    return img;
}

inline void write_ppm(const std::string& path, const Image& img) {
    if (!img.valid())
        throw InvalidInputError("write_ppm: empty or inconsistent image");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidInputError("cannot write image file: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
}

// Dispatch on extension. Only PPM is built in; PNG inputs get a clear error
// instead of a silent misparse.
inline Image load_image(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    for (auto& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".ppm")
        return read_ppm(path);
    if (ext == ".png")
        throw InvalidInputError("PNG support not built in; convert to PPM first: " + path);
    // unknown extension: try PPM, the baseline format
    return read_ppm(path);
}

} // namespace facepipe
