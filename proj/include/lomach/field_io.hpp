#pragma once

#include <string>

#include "lomach/field.hpp"

namespace lomach {

/// Self-describing binary field container: one UTF-8 JSON header line
/// (grid spec, field kind, name) terminated by '\n', then the little-endian
/// float64 payload in time-major, component-minor, row-major spatial order.
void write_field(const std::string& path, const FieldData& f, const std::string& kind);
void write_field(const std::string& path, const ScalarField& f);
void write_field(const std::string& path, const VectorField& f);
void write_field(const std::string& path, const SymTensorField& f);

struct LoadedField {
    FieldData data;
    std::string kind;  // "scalar" | "vector" | "symtensor"
};

LoadedField read_field(const std::string& path);
ScalarField read_scalar(const std::string& path);
VectorField read_vector(const std::string& path);
SymTensorField read_symtensor(const std::string& path);

}  // namespace lomach
