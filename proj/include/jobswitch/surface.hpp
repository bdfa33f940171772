#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jobswitch {

/// Dense row-major array of node values; row k is one time slice.
class Surface {
public:
    Surface() = default;
    Surface(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t k, std::size_t i) { return data_[k * cols_ + i]; }
    double operator()(std::size_t k, std::size_t i) const { return data_[k * cols_ + i]; }

    std::span<double> row(std::size_t k) { return {data_.data() + k * cols_, cols_}; }
    std::span<const double> row(std::size_t k) const { return {data_.data() + k * cols_, cols_}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace jobswitch
