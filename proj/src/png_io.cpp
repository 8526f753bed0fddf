#include "ionpot/png_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "ionpot/errors.hpp"

namespace ionpot {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

thread_local std::string g_png_error;

// libpng error handling contract: the error callback must not return, so it
// longjmps back to the setjmp point established below. No C++ objects live
// in the skipped libpng frames.
void png_error_capture(png_structp png, png_const_charp msg) {
    g_png_error = msg ? msg : "unknown png error";
    std::longjmp(*static_cast<std::jmp_buf*>(png_get_error_ptr(png)), 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

} // namespace

void write_frame_png(const std::string& path, const Frame& frame,
                     const std::vector<std::pair<std::string, std::string>>& extra_text) {
    frame.validate();
    for (const auto& [key, value] : extra_text) {
        if (key.empty() || key.size() > 79) throw InvalidArgument("tEXt key length: " + key);
    }
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open for writing: " + path);

    std::jmp_buf jump;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &jump,
                                              png_error_capture, png_warning_ignore);
    if (!png) throw IoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png_create_info_struct failed");
    }

    // Everything below must stay free of C++ locals needing destructors
    // between the longjmp target and the png_* calls; buffers are prepared
    // up front. libpng copies the text entries inside png_set_text, so the
    // backing strings only need to outlive that call.
    std::vector<png_byte> row(std::size_t(frame.width) * 2);
    char pitch_buf[40], exposure_buf[40];
    std::snprintf(pitch_buf, sizeof pitch_buf, "%.17g", frame.pitch_um);
    std::snprintf(exposure_buf, sizeof exposure_buf, "%.17g", frame.exposure_ms);
    std::vector<std::string> keys = {"pitch_um", "exposure_ms"};
    std::vector<std::string> values = {pitch_buf, exposure_buf};
    for (const auto& [key, value] : extra_text) {
        keys.push_back(key);
        values.push_back(value);
    }
    std::vector<png_text> texts(keys.size());
    std::memset(texts.data(), 0, texts.size() * sizeof(png_text));
    for (std::size_t i = 0; i < keys.size(); ++i) {
        texts[i].compression = PNG_TEXT_COMPRESSION_NONE;
        texts[i].key = const_cast<char*>(keys[i].c_str());
        texts[i].text = const_cast<char*>(values[i].c_str());
    }

    if (setjmp(jump)) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png write failed: " + g_png_error);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(frame.width), png_uint_32(frame.height), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_text(png, info, texts.data(), int(texts.size()));
    png_write_info(png, info);

    for (int r = 0; r < frame.height; ++r) {
        for (int c = 0; c < frame.width; ++c) {
            double v = std::round(frame.at(r, c));
            if (v < 0.0) v = 0.0;
            if (v > 65535.0) v = 65535.0;
            const auto u = std::uint16_t(v);
            row[std::size_t(c) * 2] = png_byte(u >> 8);  // network byte order
            row[std::size_t(c) * 2 + 1] = png_byte(u & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, info);
    png_destroy_write_struct(&png, &info);
}

Frame read_frame_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open for reading: " + path);

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8) != 0) {
        throw IoError("not a PNG file: " + path);
    }

    std::jmp_buf jump;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &jump,
                                             png_error_capture, png_warning_ignore);
    if (!png) throw IoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png_create_info_struct failed");
    }

    Frame frame;
    std::vector<png_byte> row;
    std::string bad;

    if (setjmp(jump)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png read failed: " + g_png_error);
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int colour = png_get_color_type(png, info);
    if (colour != PNG_COLOR_TYPE_GRAY) {
        bad = "expected grayscale PNG: " + path;
    } else {
        if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);

        frame.width = int(width);
        frame.height = int(height);
        frame.counts.assign(std::size_t(width) * height, 0.0);

        png_textp texts = nullptr;
        int ntext = 0;
        png_get_text(png, info, &texts, &ntext);
        for (int i = 0; i < ntext; ++i) {
            if (!texts[i].key || !texts[i].text) continue;
            if (std::strcmp(texts[i].key, "pitch_um") == 0) {
                frame.pitch_um = std::strtod(texts[i].text, nullptr);
            } else if (std::strcmp(texts[i].key, "exposure_ms") == 0) {
                frame.exposure_ms = std::strtod(texts[i].text, nullptr);
            }
        }

        const bool wide = bit_depth == 16;
        row.resize(std::size_t(width) * (wide ? 2 : 1));
        for (png_uint_32 r = 0; r < height; ++r) {
            png_read_row(png, row.data(), nullptr);
            for (png_uint_32 c = 0; c < width; ++c) {
                const double v = wide ? double((unsigned(row[c * 2]) << 8) | row[c * 2 + 1])
                                      : double(row[c]);
                frame.counts[std::size_t(r) * width + c] = v;
            }
        }
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!bad.empty()) throw IoError(bad);
    frame.validate();
    return frame;
}

} // namespace ionpot
