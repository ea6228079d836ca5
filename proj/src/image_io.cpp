#include "splatstyle/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <png.h>

#include "splatstyle/error.hpp"

namespace splatstyle {

namespace {

// RAII owner for the simplified libpng API state.
class PngImage {
 public:
  PngImage() {
    std::memset(&image_, 0, sizeof(image_));
    image_.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image_); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;

  png_image* get() { return &image_; }
  png_image* operator->() { return &image_; }

 private:
  png_image image_;
};

void begin_read(PngImage& png, const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw IoError("missing image file: " + path.string());
  if (!png_image_begin_read_from_file(png.get(), path.c_str())) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + png->message);
  }
}

}  // namespace

std::pair<std::uint32_t, std::uint32_t> read_png_size(const std::filesystem::path& path) {
  PngImage png;
  begin_read(png, path);
  return {png->width, png->height};
}

FeatureMap load_png(const std::filesystem::path& path) {
  PngImage png;
  begin_read(png, path);
  png->format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(*png.get()));
  if (!png_image_finish_read(png.get(), nullptr, buffer.data(), 0, nullptr)) {
    throw FormatError("cannot decode PNG " + path.string() + ": " + png->message);
  }
  FeatureMap image(png->height, png->width, 3);
  std::transform(buffer.begin(), buffer.end(), image.data.begin(),
                 [](png_byte b) { return static_cast<float>(b) / 255.0f; });
  return image;
}

void save_png(const FeatureMap& image, const std::filesystem::path& path) {
  if (image.channels != 3 && image.channels != 1) {
    throw DimensionError("PNG output needs 1 or 3 channels, got " +
                         std::to_string(image.channels));
  }
  image.validate();
  std::vector<png_byte> buffer(image.data.size());
  std::transform(image.data.begin(), image.data.end(), buffer.begin(), [](float v) {
    return static_cast<png_byte>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
  });
  PngImage png;
  png->width = image.width;
  png->height = image.height;
  png->format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(png.get(), path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + png->message);
  }
}

}  // namespace splatstyle
