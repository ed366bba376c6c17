#pragma once

#include <filesystem>
#include <iosfwd>

#include "formctl/sim_engine.hpp"

namespace formctl {

// One row per (sample, agent):
// t, agent, role, px, py, pz, d1x .. d{m-1}z, eta0 .., e0 .., ux, uy, uz,
// err_norm. Agents are numbered from 1; values carry 17 significant digits.
void write_trace_csv(std::ostream& out, const SimTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const SimTrace& trace);

// Inverse of write_trace_csv. The follower variant is not stored; the result
// carries the default. Throws kParseError.
SimTrace read_trace_csv(std::istream& in);
SimTrace read_trace_csv(const std::filesystem::path& path);

}  // namespace formctl
