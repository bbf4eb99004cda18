#pragma once

#include "touchrecon/common/grid2.hpp"
#include "touchrecon/common/types.hpp"

#include <string>

namespace touchrecon {

// PFM: single channel ("Pf"), little-endian (negative scale), scanlines
// bottom-up. Grid row 0 is written first.
void write_pfm(const std::string& path, const Grid2<double>& image);
Grid2<double> read_pfm(const std::string& path);

// Three-channel PFM ("PF").
void write_pfm_rgb(const std::string& path, const Grid2<Vec3>& image);
Grid2<Vec3> read_pfm_rgb(const std::string& path);

// Binary PGM (P5, maxval 255), top-down scanlines; true pixels are stored as 255.
void write_pgm_mask(const std::string& path, const Mask& mask);
Mask read_pgm_mask(const std::string& path);

}  // namespace touchrecon
