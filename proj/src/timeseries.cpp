#include "catbif/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace catbif {

Date Date::parse_iso(const std::string& text) {
    int y = 0, m = 0, d = 0;
    char dash1 = 0, dash2 = 0;
    std::istringstream in(text);
    in >> y >> dash1 >> m >> dash2 >> d;
    if (!in || dash1 != '-' || dash2 != '-' || m < 1 || m > 12 || d < 1 || d > 31)
        throw parse_error("invalid ISO-8601 date '" + text + "'");
    return Date{y, m, d};
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
    return buf;
}

PriceSeries::PriceSeries(std::vector<Date> dates, std::vector<double> values,
                         std::string label)
    : dates_(std::move(dates)), values_(std::move(values)), label_(std::move(label)) {
    if (dates_.size() != values_.size())
        throw parse_error("date/value column length mismatch");
    if (values_.size() < 2)
        throw insufficient_data_error("price series needs at least 2 rows, got " +
                                      std::to_string(values_.size()));
    std::vector<std::size_t> order(values_.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dates_[a] < dates_[b]; });
    std::vector<Date> d(dates_.size());
    std::vector<double> v(values_.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        d[i] = dates_[order[i]];
        v[i] = values_[order[i]];
    }
    dates_ = std::move(d);
    values_ = std::move(v);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]) || values_[i] <= 0.0)
            throw parse_error("non-positive or non-finite value at row " +
                              std::to_string(i) + " of '" + label_ + "'");
        if (i > 0 && !(dates_[i - 1] < dates_[i]))
            throw parse_error("duplicate date " + dates_[i].to_string() + " in '" +
                              label_ + "'");
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        // trim surrounding whitespace and CR
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

PriceSeries ingest_csv_stream(std::istream& in, const std::string& column,
                              const std::string& date_column,
                              const std::string& label) {
    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty CSV file");
    auto header = split_csv_line(line);
    long date_idx = -1, value_idx = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == date_column) date_idx = static_cast<long>(i);
        if (header[i] == column) value_idx = static_cast<long>(i);
    }
    if (date_idx < 0) throw parse_error("date column '" + date_column + "' not found in header");
    if (value_idx < 0) throw parse_error("column '" + column + "' not found in header");

    std::vector<Date> dates;
    std::vector<double> values;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_csv_line(line);
        if (cells.size() <= static_cast<std::size_t>(std::max(date_idx, value_idx)))
            throw parse_error("row has too few columns", line_no);
        const std::string& raw = cells[static_cast<std::size_t>(value_idx)];
        if (raw.empty())
            throw parse_error("missing value in column '" + column + "'", line_no);
        char* end = nullptr;
        double v = std::strtod(raw.c_str(), &end);
        if (end == raw.c_str() || *end != '\0' || !std::isfinite(v))
            throw parse_error("cannot parse '" + raw + "' as a number", line_no);
        Date d;
        try {
            d = Date::parse_iso(cells[static_cast<std::size_t>(date_idx)]);
        } catch (const parse_error& e) {
            throw parse_error(e.what(), line_no);
        }
        dates.push_back(d);
        values.push_back(v);
    }
    if (values.size() < 2)
        throw insufficient_data_error("CSV '" + label + "' has fewer than 2 valid rows");
    return PriceSeries(std::move(dates), std::move(values), label);
}

PriceSeries ingest_csv(const std::string& path, const std::string& column,
                       const std::string& date_column) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open '" + path + "'");
    return ingest_csv_stream(in, column, date_column, path);
}

Increments increments(const Signal& signal) {
    if (signal.x.size() < 2)
        throw insufficient_data_error("increments need at least 2 signal points");
    Increments out;
    out.start_t = signal.start_t;
    out.dx.resize(signal.x.size() - 1);
    for (std::size_t i = 0; i + 1 < signal.x.size(); ++i)
        out.dx[i] = signal.x[i + 1] - signal.x[i];
    return out;
}

Signal cumsum(const Increments& dx, double x0) {
    Signal out;
    out.start_t = dx.start_t;
    out.x.resize(dx.dx.size() + 1);
    out.x[0] = x0;
    for (std::size_t i = 0; i < dx.dx.size(); ++i) out.x[i + 1] = out.x[i] + dx.dx[i];
    return out;
}

std::vector<Window> windows(const Signal& signal, const WindowSpec& spec) {
    const std::size_t n = signal.x.size();
    if (spec.width < 3) throw domain_error("window width must be >= 3");
    if (spec.step < 1) throw domain_error("window step must be >= 1");
    if (spec.width > n)
        throw insufficient_data_error("window width " + std::to_string(spec.width) +
                                      " exceeds signal length " + std::to_string(n));
    std::vector<Window> out;
    const std::size_t count = (n - spec.width) / spec.step + 1;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t off = k * spec.step;
        Window w;
        w.start_t = signal.start_t + static_cast<long>(off);
        w.center_t = w.start_t + static_cast<long>(spec.width / 2);
        w.values = std::span<const double>(signal.x.data() + off, spec.width);
        out.push_back(w);
    }
    return out;
}

}  // namespace catbif
