#include "pvagg/trace_io.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"
#include "pvagg/csv.hpp"
#include "pvagg/errors.hpp"

namespace pvagg {

void write_trace_csv(const SimTrace& trace, std::ostream& os) {
    os << "t_s";
    for (const auto& l : trace.labels()) os << ',' << l;
    os << '\n';
    std::vector<const std::vector<double>*> cols;
    for (const auto& l : trace.labels()) cols.push_back(&trace.column(l));
    for (std::size_t i = 0; i < trace.rows(); ++i) {
        os << fmt9(trace.time()[i]);
        for (const auto* c : cols) os << ',' << fmt9((*c)[i]);
        os << '\n';
    }
}

SimTrace read_trace_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DomainError("trace CSV is empty");
    auto head = split_csv_line(line);
    if (head.empty() || head.front() != "t_s") throw DomainError("trace CSV must start with t_s");
    head.erase(head.begin());
    SimTrace tr(head);
    std::vector<double> row(head.size());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != head.size() + 1) throw DomainError("trace CSV row has the wrong width");
        for (std::size_t k = 0; k < row.size(); ++k) row[k] = parse_double(cells[k + 1]);
        tr.append(parse_double(cells[0]), row);
    }
    return tr;
}

void write_metrics_json(const Metrics& m, std::ostream& os) {
    nlohmann::ordered_json j;
    j["nadir_hz"] = m.nadir_hz;
    j["rocof_hz_s"] = m.rocof_hz_s;
    j["settling_hz"] = m.settling_hz;
    if (m.tracking_error_pct) j["tracking_error_pct"] = *m.tracking_error_pct;
    os << j.dump(2) << '\n';
}

}  // namespace pvagg
