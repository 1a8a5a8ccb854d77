#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace scoopsim {

// Dense 2-D grid over the bin, indexed (ix, iy) with x along the bin width
// and y along the bin length. Row-major in ix.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t nx, std::size_t ny, T fill = T{})
        : nx_(nx), ny_(ny), data_(nx * ny, fill) {}

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(std::size_t ix, std::size_t iy) { return data_[ix * ny_ + iy]; }
    const T& at(std::size_t ix, std::size_t iy) const { return data_[ix * ny_ + iy]; }

    T& operator()(std::size_t ix, std::size_t iy) { return at(ix, iy); }
    const T& operator()(std::size_t ix, std::size_t iy) const { return at(ix, iy); }

    bool in_bounds(long ix, long iy) const {
        return ix >= 0 && iy >= 0 && ix < static_cast<long>(nx_) && iy < static_cast<long>(ny_);
    }

    bool same_shape(const Grid& other) const { return nx_ == other.nx_ && ny_ == other.ny_; }

    std::vector<T>& raw() { return data_; }
    const std::vector<T>& raw() const { return data_; }

    bool operator==(const Grid& other) const = default;

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    std::vector<T> data_;
};

}  // namespace scoopsim
