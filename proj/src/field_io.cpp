#include "lomach/field_io.hpp"

#include <bit>
#include <fstream>

#include <json.hpp>

#include "lomach/errors.hpp"

namespace lomach {

static_assert(std::endian::native == std::endian::little,
              "container payload is little-endian; byte swapping not implemented");

void write_field(const std::string& path, const FieldData& f, const std::string& kind) {
    nlohmann::ordered_json h;
    h["schema"] = "lomach-field-v1";
    h["kind"] = kind;
    h["name"] = f.name();
    h["ncomp"] = f.ncomp();
    const GridSpec& g = f.grid();
    h["grid"] = {{"n", g.n},
                 {"modes_per_axis", g.modes_per_axis},
                 {"T", g.T},
                 {"time_steps", g.time_steps},
                 {"dealias_fraction", g.dealias_fraction}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + path);
    out << h.dump() << "\n";
    out.write(reinterpret_cast<const char*>(f.raw().data()),
              static_cast<std::streamsize>(f.raw().size() * sizeof(double)));
    if (!out) throw IoError("short write: " + path);
}

void write_field(const std::string& path, const ScalarField& f) {
    write_field(path, f, "scalar");
}
void write_field(const std::string& path, const VectorField& f) {
    write_field(path, f, "vector");
}
void write_field(const std::string& path, const SymTensorField& f) {
    write_field(path, f, "symtensor");
}

LoadedField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for read: " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("missing header line: " + path);
    nlohmann::json h = nlohmann::json::parse(header);
    if (h.value("schema", "") != "lomach-field-v1")
        throw IoError("unrecognized container schema in " + path);
    GridSpec g;
    g.n = h["grid"]["n"];
    g.modes_per_axis = h["grid"]["modes_per_axis"];
    g.T = h["grid"]["T"];
    g.time_steps = h["grid"]["time_steps"];
    g.dealias_fraction = h["grid"]["dealias_fraction"];
    g.validate();
    FieldData f(g, h["ncomp"], h.value("name", ""));
    in.read(reinterpret_cast<char*>(f.raw().data()),
            static_cast<std::streamsize>(f.raw().size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(f.raw().size() * sizeof(double)))
        throw IoError("payload truncated: " + path);
    return {std::move(f), h["kind"]};
}

ScalarField read_scalar(const std::string& path) {
    auto lf = read_field(path);
    if (lf.kind != "scalar") throw IoError("expected scalar field in " + path);
    return ScalarField(std::move(lf.data));
}
VectorField read_vector(const std::string& path) {
    auto lf = read_field(path);
    if (lf.kind != "vector") throw IoError("expected vector field in " + path);
    return VectorField(std::move(lf.data));
}
SymTensorField read_symtensor(const std::string& path) {
    auto lf = read_field(path);
    if (lf.kind != "symtensor") throw IoError("expected symtensor field in " + path);
    return SymTensorField(std::move(lf.data));
}

}  // namespace lomach
