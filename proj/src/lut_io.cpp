#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "pvagg/csv.hpp"
#include "pvagg/errors.hpp"
#include "pvagg/panel.hpp"

namespace pvagg {

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);  // no "-0"
    return buf;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.remove_suffix(1);
        out.emplace_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw DomainError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw DomainError("trailing characters in number: '" + s + "'");
    return v;
}

void write_lut_csv(const PanelLut& lut, std::ostream& os) {
    os << "dv_V";
    for (double s : lut.s_grid) os << ',' << fmt9(s);
    os << '\n';
    for (std::size_t i = 0; i < lut.rows(); ++i) {
        os << fmt9(lut.dv_grid[i]);
        for (std::size_t j = 0; j < lut.cols(); ++j) os << ',' << fmt9(lut.at(i, j));
        os << '\n';
    }
}

void write_lut_meta(const PanelLut& lut, std::ostream& os) {
    nlohmann::json j;
    j["temperature_k"] = lut.temperature_k;
    j["deload_fraction"] = lut.deload_fraction;
    j["s_grid"] = lut.s_grid;
    j["v_op"] = lut.v_op;
    j["v_mpp"] = lut.v_mpp;
    j["p_mpp"] = lut.p_mpp;
    os << j.dump(2) << '\n';
}

PanelLut read_lut(std::istream& csv, std::istream& meta) {
    PanelLut lut;
    std::string line;
    if (!std::getline(csv, line)) throw DomainError("lookup table CSV is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "dv_V") throw DomainError("lookup table CSV header malformed");
    for (std::size_t j = 1; j < header.size(); ++j) lut.s_grid.push_back(parse_double(header[j]));

    while (std::getline(csv, line)) {
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DomainError("lookup table CSV row has " + std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
        lut.dv_grid.push_back(parse_double(cells[0]));
        for (std::size_t j = 1; j < cells.size(); ++j) lut.table.push_back(parse_double(cells[j]));
    }
    if (lut.dv_grid.empty()) throw DomainError("lookup table CSV has no rows");

    nlohmann::json j;
    try {
        meta >> j;
        lut.temperature_k = j.at("temperature_k").get<double>();
        lut.deload_fraction = j.at("deload_fraction").get<double>();
        lut.v_op = j.at("v_op").get<std::vector<double>>();
        lut.v_mpp = j.at("v_mpp").get<std::vector<double>>();
        lut.p_mpp = j.at("p_mpp").get<std::vector<double>>();
        if (j.at("s_grid").get<std::vector<double>>().size() != lut.s_grid.size())
            throw DomainError("metadata irradiance grid does not match the CSV");
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("lookup table metadata: ") + e.what());
    }
    if (lut.v_op.size() != lut.cols() || lut.v_mpp.size() != lut.cols() || lut.p_mpp.size() != lut.cols())
        throw DomainError("metadata column count does not match the CSV");

    lut.clamped.assign(lut.table.size(), 0);
    for (std::size_t i = 0; i < lut.rows(); ++i)
        for (std::size_t c = 0; c < lut.cols(); ++c)
            lut.clamped[i * lut.cols() + c] = lut.v_op[c] + lut.dv_grid[i] < lut.v_mpp[c];
    finalize_lut(lut);
    return lut;
}

}  // namespace pvagg
