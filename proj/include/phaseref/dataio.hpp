#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "phaseref/core.hpp"
#include "phaseref/measurement.hpp"

namespace phaseref {

/// Filesystem-level failure: missing path, unreadable file, short write.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structurally invalid content: bad magic, wrong format variant.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Content shorter or longer than its own header promises.
struct LengthError : FormatError {
    using FormatError::FormatError;
};

/// Decoded IDX unsigned-byte rank-3 container. Raw bytes are scaled by
/// 1/255, so 255 maps to 1.0 exactly.
struct IdxDataset {
    int count = 0;
    int rows = 0;
    int cols = 0;
    std::vector<Image> items;
};

/// Decode an IDX image stream (magic 0x00000803, three big-endian u32
/// dimensions, then count*rows*cols payload bytes). Total over byte
/// streams: any input yields a dataset or throws FormatError/LengthError.
/// Items must be square since downstream code operates on square grids.
IdxDataset parse_idx_images(const std::vector<std::uint8_t>& bytes);

/// Read an IDX file from disk; gzip-compressed files (magic 0x1f 0x8b) are
/// decompressed transparently.
IdxDataset load_idx_file(const std::string& path);

/// Quantize items to bytes (round(v*255), clamped) and write an IDX file;
/// gzip-compress when the path ends in ".gz".
void write_idx_images(const std::vector<Image>& items, const std::string& path);

/// Read every "*.pgm" file in a directory, sorted by filename for
/// determinism. All images must share one side.
std::vector<Image> load_pgm_dir(const std::string& dir);

/// Directory path -> load_pgm_dir; file path -> load_idx_file items.
std::vector<Image> load_dataset(const std::string& path);

/// Binary PGM (P5). maxval must be 255 (one byte per pixel) or 65535 (two
/// bytes, big-endian). Pixels are round(v*maxval) clamped to [0, maxval],
/// so the write/read round trip errs by at most 1/(2*maxval) for v in
/// [0,1]. Byte output is deterministic for equal inputs.
void write_pgm(const Image& img, const std::string& path, int maxval = 255);

/// Read a binary PGM (P5 only; P2 and other PNM variants are rejected).
/// Accepts any maxval in [1, 65535]; values above 255 use two big-endian
/// bytes per pixel. Pixels are scaled to [0,1] by 1/maxval.
Image read_pgm(const std::string& path);

/// Minimal 8-bit grayscale PNG export (single zlib-compressed IDAT,
/// filter type 0 per scanline).
void write_png_gray8(const Image& img, const std::string& path);

/// One evaluation-cell result: a (dataset, method, oversampling) triple
/// with MSE statistics over n_images reconstructions.
struct MetricsRow {
    std::string dataset;
    std::string method;
    int oversampling = 1;
    double mse_mean = 0.0;
    double mse_stddev = 0.0;
    int n_images = 0;
    std::uint64_t seed = 0;
};

/// Six significant digits, shortest form (printf %.6g), matching the
/// precision used for reported reconstruction errors.
std::string format_mse(double v);

/// Header line "dataset,method,oversampling,mse_mean,mse_stddev,n_images,seed"
/// plus one line per row in order. Empty input writes the header only.
void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

/// Measurement container: magic "PRM1", u32 LE side, u32 LE oversampling,
/// then side*side doubles in row-major order, little-endian IEEE-754.
void write_measurement(const Measurement& y, const std::string& path);
Measurement read_measurement(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

} // namespace phaseref
