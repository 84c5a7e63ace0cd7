#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gsjbu {

// Bad arguments, malformed files, shape mismatches. CLI maps this to exit code 2.
struct InvalidInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf detected where the pipeline requires finite values. CLI exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Integer upsampling factor, >= 1.
class ScaleFactor {
  public:
    explicit ScaleFactor(int s) : s_(s) {
        if (s < 1)
            throw InvalidInput("scale factor must be >= 1, got " + std::to_string(s));
    }
    int value() const { return s_; }
    bool operator==(const ScaleFactor&) const = default;

  private:
    int s_;
};

// Dense raster with channel-major (c, y, x) layout, float32 storage.
// Math is done in double; this is the at-rest representation.
class PlanarMap {
  public:
    PlanarMap() = default;

    PlanarMap(int channels, int height, int width, float fill = 0.f)
        : channels_(channels), height_(height), width_(width) {
        if (channels < 1 || height < 1 || width < 1)
            throw InvalidInput("map dims must be positive, got (" + std::to_string(channels) +
                               ", " + std::to_string(height) + ", " + std::to_string(width) + ")");
        data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
    }

    static PlanarMap from_data(int channels, int height, int width, std::vector<float> values) {
        PlanarMap m(channels, height, width);
        if (values.size() != m.size())
            throw InvalidInput("map data length " + std::to_string(values.size()) +
                               " does not match shape product " + std::to_string(m.size()));
        for (float v : values)
            if (!std::isfinite(v))
                throw InvalidInput("map data contains a non-finite value");
        m.data_ = std::move(values);
        return m;
    }

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }

    float& at(int c, int y, int x) { return data_[plane_size() * c + static_cast<std::size_t>(y) * width_ + x]; }
    float at(int c, int y, int x) const { return data_[plane_size() * c + static_cast<std::size_t>(y) * width_ + x]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    std::span<float> channel(int c) { return {data_.data() + plane_size() * c, plane_size()}; }
    std::span<const float> channel(int c) const { return {data_.data() + plane_size() * c, plane_size()}; }

    bool same_shape(const PlanarMap& o) const {
        return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
    }

  private:
    int channels_ = 0, height_ = 0, width_ = 0;
    std::vector<float> data_;
};

} // namespace gsjbu
