#include "phaseref/dataio.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <climits>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

namespace phaseref {

namespace {

constexpr int kMaxSide = 1 << 14; // sanity cap on item dimensions

std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) |
           std::uint32_t(p[3]);
}

void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v >> 24));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v));
}

void push_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v));
    out.push_back(std::uint8_t(v >> 8));
    out.push_back(std::uint8_t(v >> 16));
    out.push_back(std::uint8_t(v >> 24));
}

std::uint32_t le32(const std::uint8_t* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::string hex_bytes(const std::uint8_t* p, size_t n) {
    std::string out;
    char buf[8];
    for (size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), i ? " %02x" : "%02x", p[i]);
        out += buf;
    }
    return out;
}

std::uint8_t quantize(double v, int maxval) {
    const double q = std::lround(std::clamp(v, 0.0, 1.0) * maxval);
    return std::uint8_t(std::clamp<long>(long(q), 0, maxval));
}

bool is_gzip(const std::vector<std::uint8_t>& bytes) {
    return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in) {
    z_stream strm{};
    if (inflateInit2(&strm, 15 + 32) != Z_OK) // auto-detect zlib/gzip wrapper
        throw FormatError("gzip: inflate initialization failed");
    std::vector<std::uint8_t> out(std::max<size_t>(in.size() * 4, size_t(1) << 16));
    strm.next_in = const_cast<Bytef*>(in.data());
    strm.avail_in = uInt(in.size());
    int ret = Z_OK;
    while (ret != Z_STREAM_END) {
        if (strm.total_out == out.size()) out.resize(out.size() * 2);
        strm.next_out = out.data() + strm.total_out;
        strm.avail_out = uInt(out.size() - strm.total_out);
        ret = inflate(&strm, Z_NO_FLUSH);
        if (ret != Z_OK && ret != Z_STREAM_END) {
            std::string msg = strm.msg ? strm.msg : zError(ret);
            inflateEnd(&strm);
            throw FormatError("gzip: corrupt stream (" + msg + ")");
        }
    }
    out.resize(strm.total_out);
    inflateEnd(&strm);
    return out;
}

std::vector<std::uint8_t> gzip_compress(const std::vector<std::uint8_t>& in) {
    z_stream strm{};
    if (deflateInit2(&strm, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) !=
        Z_OK)
        throw IoError("gzip: deflate initialization failed");
    std::vector<std::uint8_t> out(deflateBound(&strm, uLong(in.size())));
    strm.next_in = const_cast<Bytef*>(in.data());
    strm.avail_in = uInt(in.size());
    strm.next_out = out.data();
    strm.avail_out = uInt(out.size());
    const int ret = deflate(&strm, Z_FINISH);
    if (ret != Z_STREAM_END) {
        deflateEnd(&strm);
        throw IoError("gzip: compression failed");
    }
    out.resize(strm.total_out);
    deflateEnd(&strm);
    return out;
}

void push_png_chunk(std::vector<std::uint8_t>& out, const char type[4],
                    const std::vector<std::uint8_t>& data) {
    push_be32(out, std::uint32_t(data.size()));
    const size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc =
        crc32(0L, out.data() + crc_start, uInt(out.size() - crc_start));
    push_be32(out, std::uint32_t(crc));
}

} // namespace

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure: " + path);
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failure: " + path);
}

IdxDataset parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4)
        throw LengthError("idx: stream holds " + std::to_string(bytes.size()) +
                          " bytes; the 4-byte magic alone needs more");
    if (!(bytes[0] == 0x00 && bytes[1] == 0x00 && bytes[2] == 0x08 && bytes[3] == 0x03))
        throw FormatError("idx: magic bytes are " + hex_bytes(bytes.data(), 4) +
                          "; expected 00 00 08 03 (unsigned-byte rank-3 images)");
    if (bytes.size() < 16)
        throw LengthError("idx: header needs 16 bytes (magic + 3 dimensions), got " +
                          std::to_string(bytes.size()));
    const std::uint32_t count = be32(bytes.data() + 4);
    const std::uint32_t rows = be32(bytes.data() + 8);
    const std::uint32_t cols = be32(bytes.data() + 12);
    if (rows == 0 || cols == 0)
        throw FormatError("idx: zero-sized items (rows=" + std::to_string(rows) +
                          ", cols=" + std::to_string(cols) + ")");
    if (rows != cols)
        throw FormatError("idx: only square items are supported, got " + std::to_string(rows) +
                          "x" + std::to_string(cols));
    if (rows > kMaxSide)
        throw FormatError("idx: item side " + std::to_string(rows) + " exceeds the cap of " +
                          std::to_string(kMaxSide));
    const std::uint64_t per_item = std::uint64_t(rows) * cols;
    if (count != 0 && per_item > (std::numeric_limits<std::uint64_t>::max() - 16) / count)
        throw LengthError("idx: declared payload of " + std::to_string(count) + " items of " +
                          std::to_string(per_item) + " bytes overflows; stream holds " +
                          std::to_string(bytes.size()) + " bytes");
    const std::uint64_t expected = 16 + std::uint64_t(count) * per_item;
    if (bytes.size() != expected)
        throw LengthError("idx: header declares " + std::to_string(expected) +
                          " bytes total, stream holds " + std::to_string(bytes.size()));

    IdxDataset ds;
    ds.count = int(count);
    ds.rows = int(rows);
    ds.cols = int(cols);
    ds.items.reserve(count);
    const std::uint8_t* p = bytes.data() + 16;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::vector<double> px(per_item);
        for (std::uint64_t j = 0; j < per_item; ++j) px[j] = p[j] / 255.0;
        p += per_item;
        ds.items.emplace_back(int(rows), std::move(px));
    }
    return ds;
}

IdxDataset load_idx_file(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (is_gzip(bytes)) bytes = gunzip(bytes);
    return parse_idx_images(bytes);
}

void write_idx_images(const std::vector<Image>& items, const std::string& path) {
    if (items.empty()) throw std::invalid_argument("write_idx_images: empty item list");
    const int d = items.front().side;
    for (const Image& img : items)
        if (img.side != d)
            throw std::invalid_argument("write_idx_images: mixed item sides " +
                                        std::to_string(d) + " and " + std::to_string(img.side));
    std::vector<std::uint8_t> bytes;
    bytes.reserve(16 + items.size() * size_t(d) * d);
    push_be32(bytes, 0x00000803u);
    push_be32(bytes, std::uint32_t(items.size()));
    push_be32(bytes, std::uint32_t(d));
    push_be32(bytes, std::uint32_t(d));
    for (const Image& img : items)
        for (double v : img.data) bytes.push_back(quantize(v, 255));
    if (path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0)
        bytes = gzip_compress(bytes);
    write_file_bytes(path, bytes);
}

std::vector<Image> load_pgm_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            paths.push_back(entry.path().string());
    if (paths.empty()) throw FormatError("no .pgm files in directory: " + dir);
    std::sort(paths.begin(), paths.end());
    std::vector<Image> items;
    items.reserve(paths.size());
    for (const std::string& p : paths) {
        items.push_back(read_pgm(p));
        if (items.back().side != items.front().side)
            throw FormatError("mixed image sides in " + dir + ": " +
                              std::to_string(items.front().side) + " and " +
                              std::to_string(items.back().side) + " (" + p + ")");
    }
    return items;
}

std::vector<Image> load_dataset(const std::string& path) {
    if (std::filesystem::is_directory(path)) return load_pgm_dir(path);
    return load_idx_file(path).items;
}

void write_pgm(const Image& img, const std::string& path, int maxval) {
    if (img.side < 1) throw std::invalid_argument("write_pgm: empty image");
    if (maxval != 255 && maxval != 65535)
        throw std::invalid_argument("write_pgm: maxval must be 255 or 65535, got " +
                                    std::to_string(maxval));
    std::vector<std::uint8_t> bytes;
    const std::string header = "P5\n" + std::to_string(img.side) + " " +
                               std::to_string(img.side) + "\n" + std::to_string(maxval) + "\n";
    bytes.insert(bytes.end(), header.begin(), header.end());
    for (double v : img.data) {
        const long q = std::clamp<long>(std::lround(std::clamp(v, 0.0, 1.0) * maxval), 0, maxval);
        if (maxval > 255) bytes.push_back(std::uint8_t(q >> 8));
        bytes.push_back(std::uint8_t(q & 0xff));
    }
    write_file_bytes(path, bytes);
}

namespace {

/// PNM token scanner: skips whitespace and '#' comments that run to
/// end-of-line, then reads one unsigned decimal token.
long pnm_uint(const std::vector<std::uint8_t>& bytes, size_t& pos, const std::string& path) {
    while (pos < bytes.size()) {
        if (std::isspace(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
        throw FormatError("pgm: malformed header in " + path);
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 1'000'000'000L) throw FormatError("pgm: header value out of range in " + path);
        ++pos;
    }
    return v;
}

} // namespace

Image read_pgm(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 2 || bytes[0] != 'P')
        throw FormatError("pgm: not a PNM file: " + path);
    if (bytes[1] != '5')
        throw FormatError("pgm: only binary P5 is supported, got P" +
                          std::string(1, char(bytes[1])) + ": " + path);
    size_t pos = 2;
    const long width = pnm_uint(bytes, pos, path);
    const long height = pnm_uint(bytes, pos, path);
    const long maxval = pnm_uint(bytes, pos, path);
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw FormatError("pgm: missing separator before payload in " + path);
    ++pos; // exactly one whitespace byte separates header and payload
    if (width < 1 || height < 1 || width > kMaxSide || height > kMaxSide)
        throw FormatError("pgm: bad dimensions " + std::to_string(width) + "x" +
                          std::to_string(height) + " in " + path);
    if (width != height)
        throw FormatError("pgm: only square images are supported, got " + std::to_string(width) +
                          "x" + std::to_string(height) + " in " + path);
    if (maxval < 1 || maxval > 65535)
        throw FormatError("pgm: maxval " + std::to_string(maxval) + " out of range in " + path);
    const int bytes_per = maxval > 255 ? 2 : 1;
    const size_t need = size_t(width) * size_t(height) * bytes_per;
    if (bytes.size() - pos != need)
        throw LengthError("pgm: payload should be " + std::to_string(need) + " bytes, got " +
                          std::to_string(bytes.size() - pos) + " in " + path);
    std::vector<double> px(size_t(width) * height);
    const std::uint8_t* p = bytes.data() + pos;
    for (double& v : px) {
        long q = *p++;
        if (bytes_per == 2) q = (q << 8) | *p++;
        v = double(q) / double(maxval);
    }
    return Image(int(width), std::move(px));
}

void write_png_gray8(const Image& img, const std::string& path) {
    if (img.side < 1) throw std::invalid_argument("write_png_gray8: empty image");
    const int d = img.side;
    std::vector<std::uint8_t> raw;
    raw.reserve(size_t(d) * (d + 1));
    for (int r = 0; r < d; ++r) {
        raw.push_back(0); // filter type: None
        for (int c = 0; c < d; ++c) raw.push_back(quantize(img.at(r, c), 255));
    }
    uLongf comp_len = compressBound(uLong(raw.size()));
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), uLong(raw.size()), Z_DEFAULT_COMPRESSION) !=
        Z_OK)
        throw IoError("png: compression failed");
    comp.resize(comp_len);

    std::vector<std::uint8_t> ihdr;
    push_be32(ihdr, std::uint32_t(d));
    push_be32(ihdr, std::uint32_t(d));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(0); // color type: grayscale
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter
    ihdr.push_back(0); // interlace

    std::vector<std::uint8_t> bytes = {137, 80, 78, 71, 13, 10, 26, 10};
    push_png_chunk(bytes, "IHDR", ihdr);
    push_png_chunk(bytes, "IDAT", comp);
    push_png_chunk(bytes, "IEND", {});
    write_file_bytes(path, bytes);
}

std::string format_mse(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::string text = "dataset,method,oversampling,mse_mean,mse_stddev,n_images,seed\n";
    for (const MetricsRow& r : rows) {
        text += r.dataset + "," + r.method + "," + std::to_string(r.oversampling) + "," +
                format_mse(r.mse_mean) + "," + format_mse(r.mse_stddev) + "," +
                std::to_string(r.n_images) + "," + std::to_string(r.seed) + "\n";
    }
    write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void write_measurement(const Measurement& y, const std::string& path) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(12 + y.data.size() * 8);
    const char magic[4] = {'P', 'R', 'M', '1'};
    bytes.insert(bytes.end(), magic, magic + 4);
    push_le32(bytes, std::uint32_t(y.side));
    push_le32(bytes, std::uint32_t(y.oversampling));
    for (double v : y.data) {
        const auto u = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) bytes.push_back(std::uint8_t(u >> (8 * i)));
    }
    write_file_bytes(path, bytes);
}

Measurement read_measurement(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < 12)
        throw LengthError("measurement: header needs 12 bytes, got " +
                          std::to_string(bytes.size()) + " in " + path);
    if (std::memcmp(bytes.data(), "PRM1", 4) != 0)
        throw FormatError("measurement: magic bytes are " + hex_bytes(bytes.data(), 4) +
                          "; expected 50 52 4d 31 (\"PRM1\") in " + path);
    const std::uint32_t side = le32(bytes.data() + 4);
    const std::uint32_t over = le32(bytes.data() + 8);
    if (side == 0 || side > kMaxSide)
        throw FormatError("measurement: bad side " + std::to_string(side) + " in " + path);
    const std::uint64_t need = 12 + std::uint64_t(side) * side * 8;
    if (bytes.size() != need)
        throw LengthError("measurement: expected " + std::to_string(need) + " bytes, got " +
                          std::to_string(bytes.size()) + " in " + path);
    std::vector<double> data(size_t(side) * side);
    const std::uint8_t* p = bytes.data() + 12;
    for (double& v : data) {
        std::uint64_t u = 0;
        for (int i = 0; i < 8; ++i) u |= std::uint64_t(*p++) << (8 * i);
        v = std::bit_cast<double>(u);
    }
    try {
        return Measurement(int(side), int(over), std::move(data));
    } catch (const std::invalid_argument& e) {
        throw FormatError("measurement: " + std::string(e.what()) + " in " + path);
    }
}

} // namespace phaseref
