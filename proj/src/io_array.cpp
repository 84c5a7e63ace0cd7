#include "gsjbu/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace gsjbu {

namespace {

constexpr char kMagic[6] = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::string npy_header(int channels, int height, int width) {
    std::ostringstream dict;
    dict << "{'descr': '<f4', 'fortran_order': False, 'shape': (" << channels << ", " << height
         << ", " << width << "), }";
    std::string h = dict.str();
    // Pad with spaces so that magic + version + length + header is a
    // multiple of 64 bytes, newline-terminated.
    std::size_t unpadded = 10 + h.size() + 1;
    h.append((64 - unpadded % 64) % 64, ' ');
    h.push_back('\n');
    return h;
}

// Pulls the value substring for `key` out of the header dict literal.
std::string dict_value(const std::string& header, const std::string& key) {
    std::size_t k = header.find("'" + key + "'");
    if (k == std::string::npos)
        throw InvalidInput("npy: header is missing key '" + key + "'");
    std::size_t colon = header.find(':', k);
    if (colon == std::string::npos)
        throw InvalidInput("npy: malformed header");
    std::size_t v = header.find_first_not_of(" \t", colon + 1);
    std::size_t end;
    if (header[v] == '\'') {
        end = header.find('\'', v + 1);
        if (end == std::string::npos)
            throw InvalidInput("npy: malformed header");
        return header.substr(v + 1, end - v - 1);
    }
    if (header[v] == '(') {
        end = header.find(')', v);
        if (end == std::string::npos)
            throw InvalidInput("npy: malformed header");
        return header.substr(v, end - v + 1);
    }
    end = header.find_first_of(",}", v);
    return header.substr(v, end - v);
}

} // namespace

PlanarMap read_array(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw InvalidInput("cannot open array file: " + path);

    char magic[8];
    if (!f.read(magic, 8) || std::memcmp(magic, kMagic, 6) != 0)
        throw InvalidInput("not an npy file: " + path);
    int ver_major = magic[6], ver_minor = magic[7];
    if ((ver_major != 1 && ver_major != 2) || ver_minor != 0)
        throw InvalidInput("npy: unsupported version " + std::to_string(ver_major) + "." +
                           std::to_string(ver_minor) + " in " + path);

    std::uint32_t hlen = 0;
    if (ver_major == 1) {
        unsigned char b[2];
        if (!f.read(reinterpret_cast<char*>(b), 2))
            throw InvalidInput("npy: truncated header in " + path);
        hlen = b[0] | (b[1] << 8);
    } else {
        unsigned char b[4];
        if (!f.read(reinterpret_cast<char*>(b), 4))
            throw InvalidInput("npy: truncated header in " + path);
        hlen = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::string header(hlen, '\0');
    if (!f.read(header.data(), hlen))
        throw InvalidInput("npy: truncated header in " + path);

    if (dict_value(header, "descr") != "<f4")
        throw InvalidInput("npy: unsupported dtype '" + dict_value(header, "descr") +
                           "' (need little-endian float32) in " + path);
    std::string order = dict_value(header, "fortran_order");
    if (order.find("True") != std::string::npos)
        throw InvalidInput("npy: fortran-ordered arrays are not supported: " + path);

    std::string shape_str = dict_value(header, "shape");
    std::vector<long> shape;
    for (std::size_t i = 1; i < shape_str.size();) {
        std::size_t end = shape_str.find_first_of(",)", i);
        std::string tok = shape_str.substr(i, end - i);
        std::size_t first = tok.find_first_not_of(" \t");
        if (first != std::string::npos) {
            try {
                shape.push_back(std::stol(tok.substr(first)));
            } catch (const std::exception&) {
                throw InvalidInput("npy: malformed shape '" + shape_str + "' in " + path);
            }
        }
        i = end + 1;
        if (shape_str[end] == ')')
            break;
    }
    int channels, height, width;
    if (shape.size() == 2) {
        channels = 1;
        height = static_cast<int>(shape[0]);
        width = static_cast<int>(shape[1]);
    } else if (shape.size() == 3) {
        channels = static_cast<int>(shape[0]);
        height = static_cast<int>(shape[1]);
        width = static_cast<int>(shape[2]);
    } else {
        throw InvalidInput("npy: need a rank 2 or 3 array, got rank " + std::to_string(shape.size()) +
                           " in " + path);
    }
    if (channels < 1 || height < 1 || width < 1)
        throw InvalidInput("npy: degenerate shape in " + path);

    std::size_t count = static_cast<std::size_t>(channels) * height * width;
    std::vector<unsigned char> raw(count * 4);
    if (!f.read(reinterpret_cast<char*>(raw.data()), raw.size()))
        throw InvalidInput("npy: payload truncated (expected " + std::to_string(raw.size()) +
                           " bytes) in " + path);
    if (f.peek() != std::ifstream::traits_type::eof())
        throw InvalidInput("npy: trailing bytes after payload in " + path);

    std::vector<float> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t u = raw[4 * i] | (raw[4 * i + 1] << 8) | (raw[4 * i + 2] << 16) |
                          (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
        float v = std::bit_cast<float>(u);
        if (!std::isfinite(v))
            throw InvalidInput("npy: non-finite value at flat index " + std::to_string(i) + " in " + path);
        values[i] = v;
    }
    return PlanarMap::from_data(channels, height, width, std::move(values));
}

void write_array(const PlanarMap& map, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw InvalidInput("cannot open for writing: " + path);

    std::string header = npy_header(map.channels(), map.height(), map.width());
    f.write(kMagic, 6);
    f.put('\x01');
    f.put('\x00');
    f.put(static_cast<char>(header.size() & 0xff));
    f.put(static_cast<char>((header.size() >> 8) & 0xff));
    f.write(header.data(), header.size());

    std::vector<unsigned char> raw(map.size() * 4);
    const float* vals = map.data();
    for (std::size_t i = 0; i < map.size(); ++i) {
        std::uint32_t u = std::bit_cast<std::uint32_t>(vals[i]);
        raw[4 * i] = u & 0xff;
        raw[4 * i + 1] = (u >> 8) & 0xff;
        raw[4 * i + 2] = (u >> 16) & 0xff;
        raw[4 * i + 3] = (u >> 24) & 0xff;
    }
    f.write(reinterpret_cast<const char*>(raw.data()), raw.size());
    if (!f)
        throw InvalidInput("write failed: " + path);
}

void write_kernel_field(const KernelField& field, const RenderConfig& cfg, const std::string& path) {
    cfg.validate();
    std::size_t n = field.pixel_count();
    if (n == 0 || field.log_sigma_x.size() != n || field.log_sigma_y.size() != n ||
        field.theta.size() != n || field.log_sigma_r.size() != n)
        throw InvalidInput("write_kernel_field: field planes do not match its grid");

    std::vector<float> planes;
    planes.reserve(4 * n);
    planes.insert(planes.end(), field.log_sigma_x.begin(), field.log_sigma_x.end());
    planes.insert(planes.end(), field.log_sigma_y.begin(), field.log_sigma_y.end());
    planes.insert(planes.end(), field.theta.begin(), field.theta.end());
    planes.insert(planes.end(), field.log_sigma_r.begin(), field.log_sigma_r.end());
    write_array(PlanarMap::from_data(4, field.lr_height, field.lr_width, std::move(planes)), path);

    std::ofstream meta(path + ".meta", std::ios::trunc);
    if (!meta)
        throw InvalidInput("cannot open for writing: " + path + ".meta");
    meta.precision(17);
    meta << "gsjbu-field v1\n"
         << "scale " << field.scale.value() << "\n"
         << "r_max " << cfg.r_max << "\n"
         << "alpha_dyn " << cfg.alpha_dyn << "\n";
    if (!meta)
        throw InvalidInput("write failed: " + path + ".meta");
}

KernelField read_kernel_field(const std::string& path, RenderConfig* cfg_out) {
    PlanarMap planes = read_array(path);
    if (planes.channels() != 4)
        throw InvalidInput("kernel field file must have 4 channels, got " +
                           std::to_string(planes.channels()) + " in " + path);

    std::ifstream meta(path + ".meta");
    if (!meta)
        throw InvalidInput("kernel field sidecar missing: " + path + ".meta");
    std::string line;
    if (!std::getline(meta, line) || line != "gsjbu-field v1")
        throw InvalidInput("unrecognized kernel field sidecar: " + path + ".meta");

    int scale = 0;
    RenderConfig cfg;
    bool have_scale = false, have_rmax = false, have_alpha = false;
    std::string key;
    while (meta >> key) {
        if (key == "scale") {
            have_scale = static_cast<bool>(meta >> scale);
        } else if (key == "r_max") {
            have_rmax = static_cast<bool>(meta >> cfg.r_max);
        } else if (key == "alpha_dyn") {
            have_alpha = static_cast<bool>(meta >> cfg.alpha_dyn);
        } else {
            throw InvalidInput("kernel field sidecar has unknown key '" + key + "': " + path + ".meta");
        }
    }
    if (!have_scale || !have_rmax || !have_alpha)
        throw InvalidInput("kernel field sidecar is incomplete: " + path + ".meta");

    KernelField f;
    f.lr_height = planes.height();
    f.lr_width = planes.width();
    f.scale = ScaleFactor(scale);
    auto plane = [&](int c) {
        auto s = planes.channel(c);
        return std::vector<float>(s.begin(), s.end());
    };
    f.log_sigma_x = plane(0);
    f.log_sigma_y = plane(1);
    f.theta = plane(2);
    f.log_sigma_r = plane(3);
    if (cfg_out) {
        cfg.validate();
        *cfg_out = cfg;
    }
    return f;
}

} // namespace gsjbu
