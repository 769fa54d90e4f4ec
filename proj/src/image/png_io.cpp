#include "image/png_io.h"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace canonify {
namespace {

constexpr std::uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

std::uint32_t read_be32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& payload) {
    push_be32(out, static_cast<std::uint32_t>(payload.size()));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
    push_be32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, size_t size,
                                       size_t expected_size) {
    std::vector<std::uint8_t> out(expected_size);
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw std::runtime_error("png: inflateInit failed");
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(size);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.avail_out != 0) {
        throw std::runtime_error("png: corrupt or truncated pixel data");
    }
    return out;
}

std::vector<std::uint8_t> zlib_deflate(const std::uint8_t* data, size_t size) {
    uLongf bound = compressBound(static_cast<uLong>(size));
    std::vector<std::uint8_t> out(bound);
    if (compress2(out.data(), &bound, data, static_cast<uLong>(size), 6) != Z_OK) {
        throw std::runtime_error("png: compression failed");
    }
    out.resize(bound);
    return out;
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    return pb <= pc ? b : c;
}

}  // namespace

ImageU8 decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) {
        throw std::runtime_error("png: bad signature");
    }
    size_t pos = 8;
    int width = 0, height = 0, bit_depth = 0, color_type = 0, interlace = 0;
    std::vector<std::uint8_t> idat;
    bool saw_ihdr = false, saw_iend = false;

    while (pos + 8 <= bytes.size() && !saw_iend) {
        const std::uint32_t len = read_be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw std::runtime_error("png: truncated chunk");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* payload = &bytes[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("png: bad IHDR");
            width = static_cast<int>(read_be32(payload));
            height = static_cast<int>(read_be32(payload + 4));
            bit_depth = payload[8];
            color_type = payload[9];
            interlace = payload[12];
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || width <= 0 || height <= 0) throw std::runtime_error("png: missing IHDR");
    if (bit_depth != 8) throw std::runtime_error("png: only 8-bit images are supported");
    if (interlace != 0) throw std::runtime_error("png: interlaced images are not supported");
    int channels;
    switch (color_type) {
        case 0: channels = 1; break;
        case 2: channels = 3; break;
        case 4: channels = 2; break;
        case 6: channels = 4; break;
        default: throw std::runtime_error("png: unsupported color type (palette?)");
    }
    if (idat.empty()) throw std::runtime_error("png: no pixel data");

    const size_t stride = static_cast<size_t>(width) * channels;
    auto raw = zlib_inflate(idat.data(), idat.size(), (stride + 1) * height);

    // Undo per-row filters in place.
    std::vector<std::uint8_t> prev(stride, 0);
    ImageU8 out(width, height);
    std::vector<std::uint8_t> row(stride);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[(stride + 1) * y];
        const std::uint8_t* src = &raw[(stride + 1) * y + 1];
        for (size_t i = 0; i < stride; ++i) {
            const int a = i >= static_cast<size_t>(channels) ? row[i - channels] : 0;
            const int b = prev[i];
            const int c = i >= static_cast<size_t>(channels) ? prev[i - channels] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw std::runtime_error("png: unknown filter type");
            }
            row[i] = static_cast<std::uint8_t>(v);
        }
        for (int x = 0; x < width; ++x) {
            std::uint8_t* dst = out.px(y, x);
            const std::uint8_t* s = &row[static_cast<size_t>(x) * channels];
            switch (color_type) {
                case 0: dst[0] = dst[1] = dst[2] = s[0]; break;
                case 2: dst[0] = s[0], dst[1] = s[1], dst[2] = s[2]; break;
                case 4: dst[0] = dst[1] = dst[2] = s[0]; break;
                case 6: dst[0] = s[0], dst[1] = s[1], dst[2] = s[2]; break;
            }
        }
        prev = row;
    }
    return out;
}

std::vector<std::uint8_t> encode_png(const ImageU8& img) {
    if (img.w <= 0 || img.h <= 0) throw std::invalid_argument("png: empty image");
    std::vector<std::uint8_t> out(kSignature, kSignature + 8);

    std::vector<std::uint8_t> ihdr;
    push_be32(ihdr, static_cast<std::uint32_t>(img.w));
    push_be32(ihdr, static_cast<std::uint32_t>(img.h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // RGB
    ihdr.push_back(0);  // deflate
    ihdr.push_back(0);  // adaptive filtering
    ihdr.push_back(0);  // no interlace
    push_chunk(out, "IHDR", ihdr);

    const size_t stride = static_cast<size_t>(img.w) * 3;
    std::vector<std::uint8_t> raw((stride + 1) * img.h);
    for (int y = 0; y < img.h; ++y) {
        raw[(stride + 1) * y] = 0;  // filter: none
        std::memcpy(&raw[(stride + 1) * y + 1], img.px(y, 0), stride);
    }
    push_chunk(out, "IDAT", zlib_deflate(raw.data(), raw.size()));
    push_chunk(out, "IEND", {});
    return out;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

ImageU8 load_png(const std::string& path) {
    try {
        return decode_png(read_file(path));
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void save_png(const std::string& path, const ImageU8& img) {
    write_file(path, encode_png(img));
}

}  // namespace canonify
