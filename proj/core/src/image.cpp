#include "nevae/image.hpp"

#include <fstream>
#include <string>

#include "nevae/errors.hpp"

namespace nevae {

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
    if (image.pixels.size() != image.width * image.height)
        throw ShapeError("write_pgm: " + std::to_string(image.pixels.size()) +
                         " pixels for a " + std::to_string(image.width) + "x" +
                         std::to_string(image.height) + " image");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(image.pixels.data()),
             static_cast<std::streamsize>(image.pixels.size()));
    if (!os) throw IoError("write failed for " + path.string());
}

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::string magic;
    is >> magic;
    if (magic != "P5") throw BadMagicError(path.string() + ": not a binary PGM (P5)");
    std::size_t width = 0, height = 0, maxval = 0;
    is >> width >> height >> maxval;
    if (!is || maxval != 255)
        throw IoError(path.string() + ": unsupported PGM header");
    is.get();  // single whitespace after maxval
    GrayImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(width * height);
    if (!is.read(reinterpret_cast<char*>(img.pixels.data()),
                 static_cast<std::streamsize>(img.pixels.size())))
        throw TruncatedFileError(path.string() + " ends inside pixel data");
    return img;
}

}  // namespace nevae
