#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace dampe {

/// Dense real matrix, row-major, 64-bit throughout.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    double* row_ptr(std::size_t i) { return data.data() + i * cols; }
    const double* row_ptr(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

    static DenseMatrix zeros(std::size_t r, std::size_t c) { return DenseMatrix(r, c, 0.0); }
    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_rows(std::size_t r, std::size_t c, std::vector<double> values);

    void fill(double v);
    bool all_finite() const;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

/// Text format: header line "rows cols", then one row per line,
/// whitespace-separated decimals at 17 significant digits.
void write_matrix(std::ostream& os, const DenseMatrix& m);
void write_matrix_file(const std::string& path, const DenseMatrix& m);
DenseMatrix read_matrix(std::istream& is);
DenseMatrix read_matrix_file(const std::string& path);

}  // namespace dampe
