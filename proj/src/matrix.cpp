#include "dampe/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dampe/error.hpp"

namespace dampe {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::size_t r, std::size_t c, std::vector<double> values) {
    check_contract(values.size() == r * c, "from_rows: value count does not match shape");
    DenseMatrix m;
    m.rows = r;
    m.cols = c;
    m.data = std::move(values);
    return m;
}

void DenseMatrix::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool DenseMatrix::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    check_contract(a.cols == b.rows, "matmul: inner dimensions disagree");
    DenseMatrix out(a.rows, b.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    check_contract(a.same_shape(b), "max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

void write_matrix(std::ostream& os, const DenseMatrix& m) {
    os << m.rows << ' ' << m.cols << '\n';
    char buf[40];
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.row_ptr(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            if (j) os << ' ';
            os << buf;
        }
        os << '\n';
    }
}

void write_matrix_file(const std::string& path, const DenseMatrix& m) {
    std::ofstream os(path);
    if (!os) throw DataFault("cannot open for writing: " + path);
    write_matrix(os, m);
    if (!os) throw DataFault("write failed: " + path);
}

DenseMatrix read_matrix(std::istream& is) {
    std::size_t r = 0, c = 0;
    if (!(is >> r >> c)) throw DataFault("matrix header 'rows cols' missing");
    DenseMatrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (!(is >> m.data[i])) throw DataFault("matrix body truncated");
    return m;
}

DenseMatrix read_matrix_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataFault("cannot open: " + path);
    return read_matrix(is);
}

}  // namespace dampe
