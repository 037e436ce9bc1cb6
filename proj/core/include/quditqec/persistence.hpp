#pragma once

// Plain-text artifacts. Every file starts with "# quditqec <kind> v<version>";
// reals are written with 17 significant digits so a read-back is exact.

#include <cstdint>
#include <string>
#include <vector>

#include "quditqec/pulse_compiler.hpp"

namespace quditqec {

inline constexpr int kFormatVersion = 1;

/// FNV-1a, 64 bit.
std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

std::string format_real(double v);

std::string geometry_to_text(const BathGeometry& g);
BathGeometry geometry_from_text(const std::string& text);

std::string decoherence_to_text(const DecoherenceMatrix& L, const std::string& schedule);
/// Also returns the schedule name stored in the file.
DecoherenceMatrix decoherence_from_text(const std::string& text, std::string* schedule = nullptr);

/// The recovery plan is not stored; reading rebuilds it from errors and words.
std::string code_plan_to_text(const CodePlan& plan);
CodePlan code_plan_from_text(const std::string& text);

/// Stage, index, level, m, theta, phi, duration per pulse, then residues,
/// targets and a summary block.
std::string pulse_sequence_to_text(const PulseSequence& seq, double measurement_ns);
PulseSequence pulse_sequence_from_text(const std::string& text);

/// Whitespace-separated table with a "# " header line of column names.
std::string table_to_text(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows);
/// Inverse of table_to_text; "nan" entries read back as NaN.
std::vector<std::vector<double>> table_from_text(const std::string& text, std::vector<std::string>* columns = nullptr);

std::string read_file(const std::string& path);
/// Writes through a temporary file and renames it into place.
void write_file(const std::string& path, const std::string& contents);

}  // namespace quditqec
