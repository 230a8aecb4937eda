#pragma once

#include <iosfwd>
#include <string>

#include "peakbound/sos.hpp"

namespace peakbound {

// Serialize the conic data in sparse SDPA (.dat-s) form. Free columns are
// split into differences of two nonnegative columns since the format has no
// free cone; the objective and constraint rows are adjusted to match, so the
// exported problem has the same optimal value.
void write_sdpa(std::ostream& os, const SDPInstance& inst);
std::string to_sdpa(const SDPInstance& inst);

// Parse a .dat-s file back into conic data (free_count = 0, no recovery
// metadata). Inverse of write_sdpa up to the free-column splitting.
SDPInstance read_sdpa(std::istream& is);
SDPInstance read_sdpa_string(const std::string& text);

}  // namespace peakbound
