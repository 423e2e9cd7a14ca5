#pragma once

#include <string>
#include <vector>

#include "ubeta/space.hpp"

namespace ubeta {

/// Serializes per the interchange schema:
/// {"backend","N","label","vertices":[{"id","pos":[...],"measure"}],
///  "edges":[{"a","b","weight","length"}],"crossSectionMass"}
/// plus an optional "chart" block so structured spaces round-trip. Numbers
/// carry 17 significant digits; writes are atomic (temp file + rename).
void save_space(const Space& s, const std::string& path);
Space load_space(const std::string& path);

/// Field CSV: header `id,value`, one row per defined vertex.
void save_field(const ScalarField& f, const std::string& path);
ScalarField load_field(const Space& s, const std::string& path);

/// Vertex set JSON: {"ids":[...]} (a bare array is accepted on load).
void save_vertex_set(const std::vector<char>& mask, const std::string& path);
std::vector<char> load_vertex_set(const Space& s, const std::string& path);

/// 17-significant-digit decimal form used across all file output.
std::string format_number(double x);

/// Atomic text write: temp file in the same directory, then rename.
void atomic_write(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

}  // namespace ubeta
