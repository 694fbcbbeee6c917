#pragma once

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gpal/metrics.hpp"
#include "gpal/selection.hpp"
#include "gpal/util.hpp"

namespace gpal {

enum class Mode { benchmark, learn };

inline std::string mode_name(Mode m) { return m == Mode::benchmark ? "benchmark" : "learn"; }

inline Mode mode_from_name(const std::string& s) {
    if (s == "benchmark") return Mode::benchmark;
    if (s == "learn") return Mode::learn;
    throw std::runtime_error("unknown mode: '" + s + "'");
}

/// Fixed experiment settings, written once to the file header.
struct RunHeader {
    std::string start_time;  // "DDMMYYYY-HHmmSS", local time
    Mode mode = Mode::benchmark;
    SelectionMethod method = SelectionMethod::random;
    long seed = 0;
    MetricKind metric = MetricKind::rmse;  // benchmark only

    void validate() const {
        if (start_time.size() != 15 || start_time[8] != '-')
            throw std::runtime_error("start time must be DDMMYYYY-HHmmSS, got '" + start_time +
                                     "'");
    }
};

inline std::string current_time_token() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    localtime_r(&t, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%02d%02d%04d-%02d%02d%02d", tm.tm_mday, tm.tm_mon + 1,
                  tm.tm_year + 1900, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

/// One body line. Lists are cumulative; hyperparams describe the current
/// model only. metric_value and auc_cum exist in benchmark mode only.
struct RunRecord {
    std::string snapshot_file;
    std::vector<int> labeled;
    std::vector<double> labels;
    std::vector<std::pair<std::string, double>> hyperparams;
    double metric_value = 0.0;
    double auc_cum = 0.0;
    double runtime_cum = 0.0;
};

namespace detail {

inline std::string format_index_list(const std::vector<int>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(v[i]);
    }
    return s + "]";
}

inline std::string format_label_list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += format_double(v[i]);
    }
    return s + "]";
}

inline std::string format_hyperparams(const std::vector<std::pair<std::string, double>>& hp) {
    std::string s = "{";
    for (std::size_t i = 0; i < hp.size(); ++i) {
        if (i) s += ", ";
        s += hp[i].first + "=" + format_double(hp[i].second);
    }
    return s + "}";
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::vector<std::string> split_bracket_list(const std::string& s, int lineno,
                                                   const char* what) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw std::runtime_error("line " + std::to_string(lineno) + ": malformed " +
                                 std::string(what) + " list '" + s + "'");
    const std::string body = s.substr(1, s.size() - 2);
    std::vector<std::string> out;
    if (body.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto pos = body.find(", ", start);
        if (pos == std::string::npos) {
            out.push_back(body.substr(start));
            break;
        }
        out.push_back(body.substr(start, pos - start));
        start = pos + 2;
    }
    return out;
}

}  // namespace detail

inline void write_header(const std::string& path, const RunHeader& header) {
    header.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write history file: " + path);
    out << "#start time: " << header.start_time << ", mode: " << mode_name(header.mode)
        << ", sample selection method: " << selection_method_name(header.method)
        << ", seed: " << header.seed << "\n";
    if (header.mode == Mode::benchmark)
        out << "#models\tlabeled_samples\tlabels\thyperparams\t"
            << metric_header_token(header.metric) << "\tAUC\truntime\n";
    else
        out << "#models\tlabeled_samples\tlabels\thyperparams\truntime\n";
    if (!out) throw std::runtime_error("write failure on " + path);
}

inline void append_record(const std::string& path, const RunRecord& record, Mode mode) {
    if (record.labeled.empty() || record.labeled.size() != record.labels.size())
        throw std::invalid_argument("record labeled/labels lists must be nonempty and equal length");
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to history file: " + path);
    out << record.snapshot_file << '\t' << detail::format_index_list(record.labeled) << '\t'
        << detail::format_label_list(record.labels) << '\t'
        << detail::format_hyperparams(record.hyperparams);
    if (mode == Mode::benchmark)
        out << '\t' << format_double(record.metric_value) << '\t'
            << format_double(record.auc_cum);
    out << '\t' << format_double(record.runtime_cum) << "\n";
    if (!out) throw std::runtime_error("write failure on " + path);
}

inline std::pair<RunHeader, std::vector<RunRecord>> parse_history(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open history file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty history file");

    RunHeader header;
    {
        // #start time: <t>, mode: <m>, sample selection method: <s>, seed: <k>
        const std::string p1 = "#start time: ";
        const std::string p2 = ", mode: ";
        const std::string p3 = ", sample selection method: ";
        const std::string p4 = ", seed: ";
        auto fail = [&] { throw std::runtime_error(path + ": malformed header line 1"); };
        if (line.rfind(p1, 0) != 0) fail();
        const auto m = line.find(p2);
        const auto s = line.find(p3);
        const auto k = line.find(p4);
        if (m == std::string::npos || s == std::string::npos || k == std::string::npos) fail();
        header.start_time = line.substr(p1.size(), m - p1.size());
        header.mode = mode_from_name(line.substr(m + p2.size(), s - m - p2.size()));
        header.method = selection_method_from_name(line.substr(s + p3.size(), k - s - p3.size()));
        header.seed = parse_long(line.substr(k + p4.size()));
        header.validate();
    }

    if (!std::getline(in, line)) throw std::runtime_error(path + ": missing column header line");
    {
        const auto cols = detail::split_tabs(line);
        const std::size_t expected = header.mode == Mode::benchmark ? 7 : 5;
        if (cols.size() != expected)
            throw std::runtime_error(path + ": line 2 has " + std::to_string(cols.size()) +
                                     " columns, expected " + std::to_string(expected));
        if (cols[0] != "#models")
            throw std::runtime_error(path + ": malformed column header line");
        if (header.mode == Mode::benchmark) {
            if (cols[4] == "RMSE")
                header.metric = MetricKind::rmse;
            else if (cols[4] == "R2")
                header.metric = MetricKind::r2;
            else
                throw std::runtime_error(path + ": unknown metric token '" + cols[4] + "'");
        }
    }

    std::vector<RunRecord> records;
    int lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            if (in.peek() == EOF) break;  // tolerate trailing newline only
            throw std::runtime_error(path + ": blank line " + std::to_string(lineno));
        }
        const auto cols = detail::split_tabs(line);
        const std::size_t expected = header.mode == Mode::benchmark ? 7 : 5;
        if (cols.size() != expected)
            throw std::runtime_error(path + ": line " + std::to_string(lineno) + " has " +
                                     std::to_string(cols.size()) + " columns, expected " +
                                     std::to_string(expected));
        RunRecord r;
        r.snapshot_file = cols[0];
        for (const auto& tok : detail::split_bracket_list(cols[1], lineno, "index"))
            r.labeled.push_back(static_cast<int>(parse_long(tok)));
        for (const auto& tok : detail::split_bracket_list(cols[2], lineno, "label"))
            r.labels.push_back(parse_double(tok));
        if (r.labeled.size() != r.labels.size())
            throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                     ": labeled/labels length mismatch");
        {
            const std::string& h = cols[3];
            if (h.size() < 2 || h.front() != '{' || h.back() != '}')
                throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                         ": malformed hyperparams '" + h + "'");
            const std::string body = h.substr(1, h.size() - 2);
            std::size_t start = 0;
            while (start < body.size()) {
                auto end = body.find(", ", start);
                if (end == std::string::npos) end = body.size();
                const std::string kv = body.substr(start, end - start);
                const auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                             ": malformed hyperparam entry '" + kv + "'");
                r.hyperparams.emplace_back(kv.substr(0, eq), parse_double(kv.substr(eq + 1)));
                start = end + 2;
            }
        }
        std::size_t c = 4;
        if (header.mode == Mode::benchmark) {
            r.metric_value = parse_double(cols[c++]);
            r.auc_cum = parse_double(cols[c++]);
        }
        r.runtime_cum = parse_double(cols[c]);

        if (!records.empty()) {
            const auto& prev = records.back();
            if (r.labeled.size() != prev.labeled.size() + 1 ||
                !std::equal(prev.labeled.begin(), prev.labeled.end(), r.labeled.begin()))
                throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                         ": labeled list does not extend predecessor by one");
            if (header.mode == Mode::benchmark && r.auc_cum < prev.auc_cum)
                throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                         ": AUC column not non-decreasing");
            if (r.runtime_cum < prev.runtime_cum)
                throw std::runtime_error(path + ": line " + std::to_string(lineno) +
                                         ": runtime column not non-decreasing");
        }
        records.push_back(std::move(r));
    }
    return {header, records};
}

inline std::string snapshot_name(SelectionMethod method, int iteration) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d", iteration);
    return "model_" + selection_method_name(method) + "_" + buf + ".json";
}

inline std::string history_file_name(Mode mode, SelectionMethod method) {
    return "output_" + mode_name(mode) + "_" + selection_method_name(method) + ".txt";
}

}  // namespace gpal
