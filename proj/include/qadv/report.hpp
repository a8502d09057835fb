#pragma once

#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qadv/errors.hpp"
#include "qadv/io.hpp"

namespace qadv {

// One benchmark table row: a model's clean accuracy and its accuracy under
// each attack at one perturbation budget. Circuit-specific columns are empty
// ("N/A") for classical models. Accuracies are percentages.
struct ReportRow {
    std::string model_name;
    std::string comp_type; // "classical" or "hybrid"
    std::size_t n_images = 0;
    double clean_acc = 0.0;
    std::optional<int> vqc_id;
    std::optional<double> xpress;
    std::optional<int> n_qubits;
    double epsilon = 0.0;
    std::optional<double> acc_fgm;
    std::optional<double> acc_deepfool;
    std::optional<double> acc_pgd;
};

inline constexpr const char* kReportHeader =
    "model,comp_type,n_images,clean_acc,vqc,expressibility,n_qubits,epsilon,acc_fgm,"
    "acc_deepfool,acc_pgd";

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

inline void check_csv_safe(const std::string& s, const char* what) {
    if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos) {
        throw DataError(std::string(what) + " '" + s + "' contains a comma or newline");
    }
}

} // namespace detail

inline std::string format_report_row(const ReportRow& r) {
    detail::check_csv_safe(r.model_name, "model name");
    detail::check_csv_safe(r.comp_type, "comp_type");
    std::ostringstream os;
    os << r.model_name << "," << r.comp_type << "," << r.n_images << ","
       << detail::fmt("%.2f", r.clean_acc) << ",";
    os << (r.vqc_id ? std::to_string(*r.vqc_id) : "N/A") << ",";
    os << (r.xpress ? detail::fmt("%.3f", *r.xpress) : "N/A") << ",";
    os << (r.n_qubits ? std::to_string(*r.n_qubits) : "N/A") << ",";
    os << detail::fmt("%g", r.epsilon) << ",";
    os << (r.acc_fgm ? detail::fmt("%.2f", *r.acc_fgm) : "N/A") << ",";
    os << (r.acc_deepfool ? detail::fmt("%.2f", *r.acc_deepfool) : "N/A") << ",";
    os << (r.acc_pgd ? detail::fmt("%.2f", *r.acc_pgd) : "N/A");
    return os.str();
}

inline std::string format_report(const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << kReportHeader << "\n";
    for (const ReportRow& r : rows) {
        os << format_report_row(r) << "\n";
    }
    return os.str();
}

inline void emit_report(const std::vector<ReportRow>& rows, const std::string& path) {
    if (rows.empty()) {
        throw DataError("refusing to emit a report with no rows");
    }
    write_text_file(path, format_report(rows));
}

namespace detail {

inline double parse_csv_double(const std::string& cell, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) {
            throw std::invalid_argument("");
        }
        return v;
    } catch (const std::exception&) {
        throw FormatError(where + ": bad numeric cell '" + cell + "'");
    }
}

} // namespace detail

inline std::vector<ReportRow> parse_report(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) {
        throw FormatError("report: empty input");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != kReportHeader) {
        throw FormatError("report: header mismatch, got '" + line + "'");
    }
    std::vector<ReportRow> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        const std::string where = "report line " + std::to_string(lineno);
        if (cells.size() != 11) {
            throw FormatError(where + ": expected 11 cells, got " + std::to_string(cells.size()));
        }
        ReportRow r;
        r.model_name = cells[0];
        r.comp_type = cells[1];
        r.n_images = static_cast<std::size_t>(detail::parse_csv_double(cells[2], where));
        r.clean_acc = detail::parse_csv_double(cells[3], where);
        if (cells[4] != "N/A") {
            r.vqc_id = static_cast<int>(detail::parse_csv_double(cells[4], where));
        }
        if (cells[5] != "N/A") {
            r.xpress = detail::parse_csv_double(cells[5], where);
        }
        if (cells[6] != "N/A") {
            r.n_qubits = static_cast<int>(detail::parse_csv_double(cells[6], where));
        }
        r.epsilon = detail::parse_csv_double(cells[7], where);
        if (cells[8] != "N/A") {
            r.acc_fgm = detail::parse_csv_double(cells[8], where);
        }
        if (cells[9] != "N/A") {
            r.acc_deepfool = detail::parse_csv_double(cells[9], where);
        }
        if (cells[10] != "N/A") {
            r.acc_pgd = detail::parse_csv_double(cells[10], where);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace qadv
