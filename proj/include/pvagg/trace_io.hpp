#pragma once

#include <iosfwd>

#include "pvagg/sim.hpp"

namespace pvagg {

// First column t_s, then one column per label, 9 significant digits.
void write_trace_csv(const SimTrace& trace, std::ostream& os);
SimTrace read_trace_csv(std::istream& is);

// Flat JSON object; tracking_error_pct omitted when no reference was given.
void write_metrics_json(const Metrics& m, std::ostream& os);

}  // namespace pvagg
