#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace emu::ad {

// Dense row-major array of 64-bit floats. The product of the shape always
// equals the element count; rank 0 with one element is a scalar.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor full(std::vector<std::size_t> shape, double v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double& at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) {
        return data_[((b * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }
    double at(std::size_t b, std::size_t y, std::size_t x, std::size_t c) const {
        return data_[((b * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    void fill(double v);
    double item() const;  // requires size() == 1
    bool all_finite() const;
    std::string shape_str() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

}  // namespace emu::ad
