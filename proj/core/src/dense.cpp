#include "chaoscast/dense.hpp"

#include "chaoscast/errors.hpp"

#include <cmath>
#include <utility>

namespace chaoscast {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

DenseArray::DenseArray(std::vector<std::size_t> s)
    : shape(std::move(s)), data(shape_product(shape), 0.0) {}

DenseArray::DenseArray(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
    if (shape_product(shape) != data.size()) {
        throw ShapeError("DenseArray: shape " + shape_string() + " does not match " +
                         std::to_string(data.size()) + " values");
    }
}

DenseArray DenseArray::zeros(std::vector<std::size_t> shape) {
    return DenseArray(std::move(shape));
}

DenseArray DenseArray::full(std::vector<std::size_t> shape, double value) {
    DenseArray a(std::move(shape));
    for (double& x : a.data) x = value;
    return a;
}

DenseArray DenseArray::scalar(double value) {
    return DenseArray({1, 1}, {value});
}

DenseArray DenseArray::row(std::vector<double> values) {
    const std::size_t n = values.size();
    return DenseArray({1, n}, std::move(values));
}

DenseArray DenseArray::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return DenseArray({rows, cols}, std::move(values));
}

bool DenseArray::all_finite() const {
    for (double x : data) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

std::string DenseArray::shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

} // namespace chaoscast
