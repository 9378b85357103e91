#include "okode/timeseries.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "okode/errors.hpp"

namespace okode {

TimeSeries::TimeSeries(Eigen::VectorXd times, Eigen::MatrixXd values)
    : times_(std::move(times)), values_(std::move(values)) {
    const Eigen::Index n = times_.size();
    if (n < 2) {
        throw ValidationError("TimeSeries needs at least 2 observations, got " +
                              std::to_string(n));
    }
    if (values_.rows() != n) {
        throw ValidationError("TimeSeries has " + std::to_string(n) + " times but " +
                              std::to_string(values_.rows()) + " value rows");
    }
    if (values_.cols() < 1) {
        throw ValidationError("TimeSeries needs at least one state variable");
    }
    if (!times_.allFinite() || !values_.allFinite()) {
        throw ValidationError("TimeSeries entries must all be finite");
    }
    for (Eigen::Index i = 1; i < n; ++i) {
        if (!(times_(i) > times_(i - 1))) {
            throw ValidationError("times must be strictly increasing; violated at index " +
                                  std::to_string(i));
        }
    }
}

TimeSeriesBundle::TimeSeriesBundle(std::vector<TimeSeries> series)
    : series_(std::move(series)) {
    if (series_.empty()) {
        throw ValidationError("TimeSeriesBundle needs at least one series");
    }
    const Eigen::Index p = series_.front().dim();
    const Eigen::Index n = series_.front().length();
    for (std::size_t i = 1; i < series_.size(); ++i) {
        if (series_[i].dim() != p) {
            throw ValidationError("bundle member " + std::to_string(i) + " has dimension " +
                                  std::to_string(series_[i].dim()) + ", expected " +
                                  std::to_string(p));
        }
        if (series_[i].length() != n) {
            throw ValidationError("bundle member " + std::to_string(i) + " has length " +
                                  std::to_string(series_[i].length()) + ", expected " +
                                  std::to_string(n));
        }
    }
}

namespace {

// Strips one trailing CR (CRLF input) and surrounding spaces.
std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, std::size_t line_no) {
    const std::string f = trim(field);
    if (f.empty()) {
        throw ValidationError("line " + std::to_string(line_no) + ": empty field");
    }
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(f.c_str(), &end);
    if (end != f.c_str() + f.size() || errno == ERANGE) {
        throw ValidationError("line " + std::to_string(line_no) + ": cannot parse '" + f + "'");
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back("");
    return out;
}

}  // namespace

TimeSeries read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open '" + path + "' for reading");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("'" + path + "' is empty");
    }
    const auto header = split_csv(trim(line));
    if (header.size() < 2 || trim(header[0]) != "t") {
        throw ValidationError("'" + path + "': header must be t,x1,...,xp");
    }
    const std::size_t p = header.size() - 1;
    for (std::size_t j = 0; j < p; ++j) {
        if (trim(header[j + 1]) != "x" + std::to_string(j + 1)) {
            throw ValidationError("'" + path + "': header column " + std::to_string(j + 2) +
                                  " must be x" + std::to_string(j + 1));
        }
    }

    std::vector<double> times;
    std::vector<double> flat;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto fields = split_csv(t);
        if (fields.size() != p + 1) {
            throw ValidationError("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(p + 1) + " fields, got " +
                                  std::to_string(fields.size()));
        }
        times.push_back(parse_number(fields[0], line_no));
        for (std::size_t j = 0; j < p; ++j) flat.push_back(parse_number(fields[j + 1], line_no));
    }

    const Eigen::Index n = static_cast<Eigen::Index>(times.size());
    if (n < 2) {
        throw ValidationError("'" + path + "' has fewer than 2 data rows");
    }
    Eigen::VectorXd tv = Eigen::Map<Eigen::VectorXd>(times.data(), n);
    Eigen::MatrixXd values(n, static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p); ++j)
            values(i, j) = flat[static_cast<std::size_t>(i) * p + static_cast<std::size_t>(j)];
    return TimeSeries(std::move(tv), std::move(values));
}

void write_csv(const TimeSeries& ts, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: LF on every platform
    if (!out) {
        throw ValidationError("cannot open '" + path + "' for writing");
    }
    out << "t";
    for (Eigen::Index j = 0; j < ts.dim(); ++j) out << ",x" << (j + 1);
    out << "\n";
    char buf[64];
    for (Eigen::Index i = 0; i < ts.length(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", ts.times()(i));
        out << buf;
        for (Eigen::Index j = 0; j < ts.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", ts.values()(i, j));
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) {
        throw ValidationError("write to '" + path + "' failed");
    }
}

}  // namespace okode
