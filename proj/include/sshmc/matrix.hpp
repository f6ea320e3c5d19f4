#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sshmc {

// Dense row-major matrix of doubles. NaN entries mark missing values.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// One binary label row; index = node id, length = |L|.
using LabelVector = std::vector<std::uint8_t>;

}  // namespace sshmc
