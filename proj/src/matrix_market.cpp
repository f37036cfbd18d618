#include "kronsolve/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "kronsolve/errors.hpp"

namespace kronsolve {

namespace {

constexpr Index kMaxEntries = Index(1) << 40;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

struct Banner {
    bool coordinate = false;
    bool symmetric = false;
};

Banner parse_banner(const std::string& line, long lineno) {
    std::istringstream ss(line);
    std::string tag, object, format, field, symmetry;
    ss >> tag >> object >> format >> field >> symmetry;
    if (tag != "%%MatrixMarket" || lower(object) != "matrix")
        throw ParseError("matrix_market: bad banner", lineno);
    Banner b;
    format = lower(format);
    if (format == "coordinate") {
        b.coordinate = true;
    } else if (format == "array") {
        b.coordinate = false;
    } else {
        throw ParseError("matrix_market: unsupported format '" + format + "'",
                         lineno);
    }
    if (lower(field) != "real")
        throw ParseError("matrix_market: only real matrices are supported",
                         lineno);
    symmetry = lower(symmetry);
    if (symmetry == "symmetric") {
        b.symmetric = true;
    } else if (symmetry == "general") {
        b.symmetric = false;
    } else {
        throw ParseError("matrix_market: unsupported symmetry '" + symmetry +
                         "'", lineno);
    }
    return b;
}

bool next_content_line(std::istream& in, std::string& line, long& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        auto pos = line.find_first_not_of(" \t\r");
        if (pos == std::string::npos) continue;  // blank
        if (line[pos] == '%') continue;          // comment
        return true;
    }
    return false;
}

void format_value(char* buf, size_t size, double v) {
    std::snprintf(buf, size, "%.17g", v);
}

}  // namespace

MatrixMarketMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("matrix_market: cannot open '" + path + "'");

    long lineno = 0;
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("matrix_market: empty file", 1);
    ++lineno;
    Banner banner = parse_banner(line, lineno);

    if (!next_content_line(in, line, lineno))
        throw ParseError("matrix_market: missing size line", lineno);

    std::istringstream size_line(line);
    long long rows = 0, cols = 0, nnz = 0;
    if (banner.coordinate) {
        if (!(size_line >> rows >> cols >> nnz))
            throw ParseError("matrix_market: bad size line", lineno);
    } else {
        if (!(size_line >> rows >> cols))
            throw ParseError("matrix_market: bad size line", lineno);
    }
    if (rows < 0 || cols < 0 || nnz < 0)
        throw ParseError("matrix_market: negative dimensions", lineno);
    if (rows > kMaxEntries || cols > kMaxEntries ||
        (rows != 0 && cols > kMaxEntries / std::max<long long>(rows, 1)))
        throw CapacityError("matrix_market: dimensions overflow capacity");

    if (banner.coordinate) {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(static_cast<size_t>(banner.symmetric ? 2 * nnz : nnz));
        for (long long e = 0; e < nnz; ++e) {
            if (!next_content_line(in, line, lineno))
                throw ParseError("matrix_market: unexpected end of file",
                                 lineno);
            std::istringstream es(line);
            long long i = 0, j = 0;
            double v = 0.0;
            if (!(es >> i >> j >> v))
                throw ParseError("matrix_market: bad entry", lineno);
            if (i < 1 || i > rows || j < 1 || j > cols)
                throw ParseError("matrix_market: index out of range", lineno);
            trips.emplace_back(static_cast<Index>(i - 1),
                               static_cast<Index>(j - 1), v);
            if (banner.symmetric && i != j)
                trips.emplace_back(static_cast<Index>(j - 1),
                                   static_cast<Index>(i - 1), v);
        }
        SparseMatrix S(static_cast<Index>(rows), static_cast<Index>(cols));
        S.setFromTriplets(trips.begin(), trips.end());
        S.makeCompressed();
        return S;
    }

    DenseMatrix D(static_cast<Index>(rows), static_cast<Index>(cols));
    // Array files list column-major values; symmetric ones only the lower
    // triangle.
    auto read_value = [&](double& v) {
        if (!next_content_line(in, line, lineno))
            throw ParseError("matrix_market: unexpected end of file", lineno);
        std::istringstream es(line);
        if (!(es >> v))
            throw ParseError("matrix_market: bad value", lineno);
    };
    if (banner.symmetric) {
        if (rows != cols)
            throw ParseError("matrix_market: symmetric matrix must be square",
                             lineno);
        for (Index j = 0; j < D.cols(); ++j)
            for (Index i = j; i < D.rows(); ++i) {
                double v;
                read_value(v);
                D(i, j) = v;
                D(j, i) = v;
            }
    } else {
        for (Index j = 0; j < D.cols(); ++j)
            for (Index i = 0; i < D.rows(); ++i) {
                double v;
                read_value(v);
                D(i, j) = v;
            }
    }
    return D;
}

DenseMatrix read_matrix_market_dense(const std::string& path) {
    auto M = read_matrix_market(path);
    if (auto* d = std::get_if<DenseMatrix>(&M)) return std::move(*d);
    return DenseMatrix(std::get<SparseMatrix>(M));
}

SparseMatrix read_matrix_market_sparse(const std::string& path) {
    auto M = read_matrix_market(path);
    if (auto* s = std::get_if<SparseMatrix>(&M)) return std::move(*s);
    return std::get<DenseMatrix>(M).sparseView();
}

void write_matrix_market(const std::string& path, const DenseMatrix& A) {
    std::ofstream out(path);
    if (!out) throw IoError("matrix_market: cannot write '" + path + "'");
    out << "%%MatrixMarket matrix array real general\n";
    out << A.rows() << " " << A.cols() << "\n";
    char buf[64];
    for (Index j = 0; j < A.cols(); ++j)
        for (Index i = 0; i < A.rows(); ++i) {
            format_value(buf, sizeof(buf), A(i, j));
            out << buf << "\n";
        }
    if (!out) throw IoError("matrix_market: write failed for '" + path + "'");
}

void write_matrix_market(const std::string& path, const SparseMatrix& A) {
    std::ofstream out(path);
    if (!out) throw IoError("matrix_market: cannot write '" + path + "'");
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
    char buf[64];
    for (Index j = 0; j < A.outerSize(); ++j)
        for (SparseMatrix::InnerIterator it(A, j); it; ++it) {
            format_value(buf, sizeof(buf), it.value());
            out << (it.row() + 1) << " " << (it.col() + 1) << " " << buf
                << "\n";
        }
    if (!out) throw IoError("matrix_market: write failed for '" + path + "'");
}

}  // namespace kronsolve
