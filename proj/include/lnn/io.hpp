#pragma once

#include "lnn/dataset.hpp"
#include "lnn/errors.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace lnn {

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos
                                                                               : comma - start)));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

inline bool is_missing(std::string_view cell)
{
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan";
}

//! Dot-decimal parse independent of the global locale.
inline bool parse_double(std::string_view cell, double& v)
{
    if (!cell.empty() && cell.front() == '+')
        cell.remove_prefix(1);
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    return res.ec == std::errc() && res.ptr == cell.data() + cell.size() && std::isfinite(v);
}

} // namespace detail

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::size_t dropped = 0; // rows with missing cells in the selected columns
};

//! Reads the selected columns of a headed CSV file. Rows with a missing cell
//! are skipped and counted; any other non-numeric cell is an error naming the line.
inline CsvTable read_csv_columns(const std::string& path, const std::vector<std::string>& columns)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw DataError("'" + path + "' is empty");
    std::vector<std::string> header;
    for (auto c : detail::split_csv_line(line))
        header.emplace_back(c);
    std::vector<std::size_t> pos;
    for (const auto& name : columns) {
        std::size_t k = 0;
        while (k < header.size() && header[k] != name)
            ++k;
        if (k == header.size())
            throw DataError("'" + path + "': missing column '" + name + "'");
        pos.push_back(k);
    }
    CsvTable tab;
    tab.header = columns;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        const auto cells = detail::split_csv_line(line);
        std::vector<double> row(pos.size());
        bool missing = false;
        for (std::size_t k = 0; k < pos.size(); ++k) {
            const std::string_view cell = pos[k] < cells.size() ? cells[pos[k]] : std::string_view{};
            if (detail::is_missing(cell)) {
                missing = true;
                continue;
            }
            if (!detail::parse_double(cell, row[k]))
                throw DataError("'" + path + "' line " + std::to_string(lineno) + ": column '" +
                                columns[k] + "' is not a number: '" + std::string(cell) + "'");
        }
        if (missing) {
            ++tab.dropped;
            continue;
        }
        tab.rows.push_back(std::move(row));
    }
    return tab;
}

inline std::vector<std::string> csv_header(const std::string& path)
{
    std::ifstream in(path);
    std::string line;
    if (!in || !std::getline(in, line))
        throw DataError("cannot read a header from '" + path + "'");
    std::vector<std::string> out;
    for (auto c : detail::split_csv_line(line))
        out.emplace_back(c);
    return out;
}

//! z-normalizes each column in place (sample sd) and returns the record.
inline Normalization normalize_columns(Eigen::MatrixXd& A)
{
    Normalization n;
    const Eigen::Index T = A.rows();
    if (T < 2)
        throw DataError("normalization needs at least two rows");
    for (Eigen::Index k = 0; k < A.cols(); ++k) {
        const double mu = A.col(k).mean();
        const double sd = std::sqrt((A.col(k).array() - mu).square().sum() / static_cast<double>(T - 1));
        if (!(sd > 0.0))
            throw DataError("cannot normalize a constant column");
        A.col(k) = (A.col(k).array() - mu) / sd;
        n.mean.push_back(mu);
        n.sd.push_back(sd);
    }
    return n;
}

//! Dataset from a CSV file. Empty x_columns selects every column except y.
inline Dataset load_csv(const std::string& path, const std::string& y_column,
                        std::vector<std::string> x_columns, bool normalize,
                        std::size_t* dropped = nullptr)
{
    if (x_columns.empty())
        for (const auto& c : csv_header(path))
            if (c != y_column)
                x_columns.push_back(c);
    if (x_columns.empty())
        throw DataError("'" + path + "': no regressor columns");
    std::vector<std::string> cols{y_column};
    cols.insert(cols.end(), x_columns.begin(), x_columns.end());
    const CsvTable tab = read_csv_columns(path, cols);
    if (tab.rows.empty())
        throw DataError("'" + path + "': no complete data rows");
    if (dropped)
        *dropped = tab.dropped;

    Dataset ds;
    ds.y_name = y_column;
    ds.x_names = x_columns;
    const auto T = static_cast<Eigen::Index>(tab.rows.size());
    const auto d = static_cast<Eigen::Index>(x_columns.size());
    ds.y.resize(T);
    ds.X.resize(T, d);
    for (Eigen::Index t = 0; t < T; ++t) {
        ds.y(t) = tab.rows[static_cast<std::size_t>(t)][0];
        for (Eigen::Index k = 0; k < d; ++k)
            ds.X(t, k) = tab.rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(k + 1)];
    }
    if (normalize) {
        Eigen::MatrixXd ycol = ds.y;
        ds.y_norm = normalize_columns(ycol);
        ds.y = ycol.col(0);
        ds.x_norm = normalize_columns(ds.X);
    }
    return ds;
}

//! Evaluation points: the named columns of a CSV file as a P x d matrix.
inline Eigen::MatrixXd load_points(const std::string& path, const std::vector<std::string>& columns)
{
    const CsvTable tab = read_csv_columns(path, columns);
    if (tab.dropped > 0)
        throw DataError("'" + path + "': evaluation points contain missing cells");
    Eigen::MatrixXd P(static_cast<Eigen::Index>(tab.rows.size()),
                      static_cast<Eigen::Index>(columns.size()));
    for (std::size_t i = 0; i < tab.rows.size(); ++i)
        for (std::size_t k = 0; k < columns.size(); ++k)
            P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = tab.rows[i][k];
    return P;
}

//! Applies a recorded normalization to raw points (column k uses entry k).
inline Eigen::MatrixXd apply_normalization(Eigen::MatrixXd P, const Normalization& n)
{
    if (n.empty())
        return P;
    if (static_cast<std::size_t>(P.cols()) != n.mean.size())
        throw ArgumentError("normalization record does not match the point dimension");
    for (Eigen::Index k = 0; k < P.cols(); ++k)
        P.col(k) = (P.col(k).array() - n.mean[static_cast<std::size_t>(k)]) /
                   n.sd[static_cast<std::size_t>(k)];
    return P;
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out)
        throw DataError("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace lnn
