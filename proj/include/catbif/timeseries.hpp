#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "catbif/errors.hpp"

namespace catbif {

/// Calendar date, comparable. Only validity of the numeric ranges is
/// enforced; trading-day arithmetic is positional (index in the series),
/// never calendar based.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    auto operator<=>(const Date&) const = default;

    static Date parse_iso(const std::string& text);  // "YYYY-MM-DD"
    std::string to_string() const;
};

/// Dated raw index/price values, the ingestion unit.
///
/// Invariants: dates strictly increasing, values finite and > 0,
/// length >= 2. Enforced at construction.
class PriceSeries {
  public:
    PriceSeries(std::vector<Date> dates, std::vector<double> values,
                std::string label);

    std::size_t size() const { return values_.size(); }
    const std::vector<Date>& dates() const { return dates_; }
    const std::vector<double>& values() const { return values_; }
    const std::string& label() const { return label_; }

  private:
    std::vector<Date> dates_;
    std::vector<double> values_;
    std::string label_;
};

/// Detrended signal x_t indexed by trading day. `start_t` is the trading-day
/// index of the first element within the source series.
struct Signal {
    long start_t = 0;
    std::vector<double> x;

    std::size_t size() const { return x.size(); }
};

/// Increments dx_t = x_{t+1} - x_t of a detrended signal.
struct Increments {
    long start_t = 0;
    std::vector<double> dx;

    std::size_t size() const { return dx.size(); }
};

/// Scanning-window geometry. Defaults follow the one-trading-month
/// convention (20 days, non-overlapping).
struct WindowSpec {
    std::size_t width = 20;
    std::size_t step = 20;
};

///// One window of a scan: absolute start index, reported center and a view
/// into the signal values.
struct Window {
    long start_t = 0;
    long center_t = 0;
    std::span<const double> values;
};

/// Parses a CSV file with a header row, one ISO-8601 date column and one
/// numeric column selected by name. Rows are sorted by date; malformed rows
/// raise parse_error citing the line number.
PriceSeries ingest_csv(const std::string& path, const std::string& column,
                       const std::string& date_column = "date");

/// Same parser operating on an already-open stream (used by tests and by
/// ingest_csv itself). `label` names the series.
PriceSeries ingest_csv_stream(std::istream& in, const std::string& column,
                              const std::string& date_column,
                              const std::string& label);

Increments increments(const Signal& signal);

/// Cumulative sum of increments anchored at x0; exact inverse of
/// increments().
Signal cumsum(const Increments& dx, double x0);

/// Enumerates floor((N - width)/step) + 1 contiguous windows over the
/// signal. Window centers are start + width/2 (integer floor).
std::vector<Window> windows(const Signal& signal, const WindowSpec& spec);

}  // namespace catbif
