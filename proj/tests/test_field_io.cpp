#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "lomach/errors.hpp"
#include "lomach/field_io.hpp"

using namespace lomach;

namespace {

GridSpec small_grid(int n) {
    GridSpec g;
    g.n = n;
    g.modes_per_axis = 8;
    g.T = 0.5;
    g.time_steps = 6;
    return g;
}

std::string tmp_path(const char* stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

}  // namespace

TEST_CASE("round trip preserves payload bit-for-bit") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> U(-10.0, 10.0);
    for (int n : {2, 3}) {
        GridSpec g = small_grid(n);
        VectorField v(g, "u");
        for (auto& x : v.raw()) x = U(rng);
        auto path = tmp_path("lomach_io_test.fld");
        write_field(path, v);
        auto back = read_vector(path);
        REQUIRE(back.raw().size() == v.raw().size());
        CHECK(back.grid() == g);
        CHECK(back.name() == "u");
        for (std::size_t i = 0; i < v.raw().size(); ++i) CHECK(back.raw()[i] == v.raw()[i]);
        std::remove(path.c_str());
    }
}

TEST_CASE("kind is enforced on read") {
    GridSpec g = small_grid(2);
    ScalarField s(g, "pi");
    auto path = tmp_path("lomach_io_kind.fld");
    write_field(path, s);
    CHECK_THROWS_AS((void)read_vector(path), IoError);
    CHECK_NOTHROW((void)read_scalar(path));
    std::remove(path.c_str());
}

TEST_CASE("truncated payload is rejected") {
    GridSpec g = small_grid(2);
    SymTensorField r(g, "R");
    for (std::size_t i = 0; i < r.raw().size(); ++i) r.raw()[i] = static_cast<double>(i);
    auto path = tmp_path("lomach_io_trunc.fld");
    write_field(path, r);
    auto sz = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, sz - 16);
    CHECK_THROWS_AS((void)read_symtensor(path), IoError);
    std::remove(path.c_str());
}

TEST_CASE("missing file raises IoError") {
    CHECK_THROWS_AS((void)read_field("/nonexistent/dir/none.fld"), IoError);
}
