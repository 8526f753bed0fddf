#ifndef IONPOT_PNG_IO_HPP
#define IONPOT_PNG_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include "ionpot/imaging.hpp"

namespace ionpot {

// 16-bit grayscale PNG, one ADU per count; counts are rounded and clipped
// to [0, 65535]. Pixel pitch and exposure ride along as tEXt entries
// ("pitch_um", "exposure_ms") so frames round-trip; extra_text adds further
// tEXt entries (keys must stay under 80 characters).
void write_frame_png(const std::string& path, const Frame& frame,
                     const std::vector<std::pair<std::string, std::string>>& extra_text = {});

// Reads 8- or 16-bit grayscale; colour inputs are rejected. Missing tEXt
// metadata falls back to the Frame defaults.
Frame read_frame_png(const std::string& path);

} // namespace ionpot

#endif
