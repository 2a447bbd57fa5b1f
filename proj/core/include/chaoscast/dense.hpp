#ifndef CHAOSCAST_DENSE_HPP
#define CHAOSCAST_DENSE_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace chaoscast {

/// Row-major dense array of 64-bit floats. The only numeric carrier in the
/// library; vectors are stored as 1xN matrices by convention.
struct DenseArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    DenseArray() = default;
    explicit DenseArray(std::vector<std::size_t> s);
    DenseArray(std::vector<std::size_t> s, std::vector<double> d);

    static DenseArray zeros(std::vector<std::size_t> shape);
    static DenseArray full(std::vector<std::size_t> shape, double value);
    static DenseArray scalar(double value);
    /// 1xN row vector.
    static DenseArray row(std::vector<double> values);
    static DenseArray matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 0 : 1) : shape[1]; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    std::span<const double> row_span(std::size_t r) const {
        return std::span<const double>(data).subspan(r * cols(), cols());
    }

    bool same_shape(const DenseArray& other) const { return shape == other.shape; }
    bool all_finite() const;

    std::string shape_string() const;
};

/// Element count implied by a shape.
std::size_t shape_product(const std::vector<std::size_t>& shape);

} // namespace chaoscast

#endif
