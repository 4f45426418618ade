#pragma once

#include "fformpp/error.hpp"
#include "fformpp/series.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace fformpp {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(ErrorKind::Format, "cannot parse number '" + std::string(text) + "'");
    }
    return v;
}

inline std::vector<std::string> split_fields(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

// CSV layout: id,period[;period2],v1,...,vT  (one series per line, variable width).

inline std::string to_csv_line(const TimeSeries& s) {
    std::string line = s.id() + ",";
    for (std::size_t i = 0; i < s.periods().size(); ++i) {
        if (i) line += ';';
        line += std::to_string(s.periods()[i]);
    }
    for (double v : s.values()) {
        line += ',';
        line += format_double(v);
    }
    return line;
}

inline TimeSeries from_csv_line(const std::string& line) {
    auto fields = split_fields(line);
    if (fields.size() < 3) throw Error(ErrorKind::Format, "series row needs id, periods and at least one value");
    std::vector<int> periods;
    for (const auto& p : split_fields(fields[1], ';')) {
        int m = 0;
        auto res = std::from_chars(p.data(), p.data() + p.size(), m);
        if (res.ec != std::errc() || res.ptr != p.data() + p.size()) {
            throw Error(ErrorKind::Format, "bad period field '" + fields[1] + "'");
        }
        periods.push_back(m);
    }
    std::vector<double> values;
    values.reserve(fields.size() - 2);
    for (std::size_t i = 2; i < fields.size(); ++i) values.push_back(parse_double(fields[i]));
    return TimeSeries(fields[0], std::move(values), std::move(periods));
}

inline void write_series_csv(std::ostream& out, const std::vector<TimeSeries>& series) {
    for (const auto& s : series) out << to_csv_line(s) << '\n';
}

/// Lines that are empty or start with the header token "id," are skipped.
inline std::vector<TimeSeries> read_series_csv(std::istream& in) {
    std::vector<TimeSeries> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.rfind("id,", 0) == 0) continue;
        out.push_back(from_csv_line(line));
    }
    return out;
}

inline nlohmann::json to_json(const TimeSeries& s) {
    return nlohmann::json{{"id", s.id()}, {"periods", s.periods()}, {"values", s.data()}};
}

inline TimeSeries series_from_json(const nlohmann::json& j) {
    try {
        return TimeSeries(j.at("id").get<std::string>(), j.at("values").get<std::vector<double>>(),
                          j.at("periods").get<std::vector<int>>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, std::string("bad series object: ") + e.what());
    }
}

inline void write_series_jsonl(std::ostream& out, const std::vector<TimeSeries>& series) {
    for (const auto& s : series) out << to_json(s).dump() << '\n';
}

inline std::vector<TimeSeries> read_series_jsonl(std::istream& in) {
    std::vector<TimeSeries> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::Format, std::string("bad JSON line: ") + e.what());
        }
        out.push_back(series_from_json(j));
    }
    return out;
}

/// Picks the parser from the file extension (.jsonl / .json → JSON lines, else CSV).
inline std::vector<TimeSeries> read_series_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Format, "cannot open '" + path + "'");
    auto ends_with = [&](std::string_view suffix) {
        return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".jsonl") || ends_with(".json")) return read_series_jsonl(in);
    return read_series_csv(in);
}

inline void write_series_file(const std::string& path, const std::vector<TimeSeries>& series) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Format, "cannot write '" + path + "'");
    auto ends_with = [&](std::string_view suffix) {
        return path.size() >= suffix.size() && path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".jsonl") || ends_with(".json")) {
        write_series_jsonl(out, series);
    } else {
        write_series_csv(out, series);
    }
}

} // namespace fformpp
