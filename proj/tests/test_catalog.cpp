#include "lakejoin/catalog.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lakejoin/common.hpp"
#include "test_helpers.hpp"

using namespace lakejoin;
using namespace lakejoin::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("lakejoin_test_" + tag + "_" +
                                            std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("scan finds every readable csv") {
    TempDir dir("scan3");
    write_file(dir.path / "one.csv", "a\n1\n");
    write_file(dir.path / "two.csv", "b\nx\n");
    write_file(dir.path / "sub/three.csv", "c\n2\n");
    LakeCatalog cat = scan_lake(dir.path);
    CHECK(cat.size() == 3);
    CHECK(cat.find("one").has_value());
    CHECK(cat.find("sub/three").has_value());
    CHECK(cat.skipped().empty());
}

TEST_CASE("corrupt files become skip records") {
    TempDir dir("skip");
    write_file(dir.path / "good.csv", "a\n1\n");
    write_file(dir.path / "bad.csv", "a,b\n1,2,3\n");
    LakeCatalog cat = scan_lake(dir.path);
    CHECK(cat.size() == 1);
    REQUIRE(cat.skipped().size() == 1);
    CHECK(cat.skipped()[0].source == "bad.csv");
}

TEST_CASE("missing root raises, empty directory does not") {
    TempDir dir("empty");
    CHECK_THROWS_AS(scan_lake(dir.path / "nope"), DataError);
    LakeCatalog cat = scan_lake(dir.path);
    CHECK(cat.size() == 0);
    CHECK(catalog_summary(cat).n_tables == 0);
}

TEST_CASE("column profile counts distincts and nulls") {
    TempDir dir("profile");
    write_file(dir.path / "t.csv", "c\na\na\nNA\n");
    LakeCatalog cat = scan_lake(dir.path);
    REQUIRE(cat.size() == 1);
    const ColumnProfile& cp = cat.entries()[0].columns[0];
    CHECK(cp.distinct_count == 1);
    CHECK(cp.null_fraction == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("summary arithmetic") {
    TempDir dir("summary");
    std::string ten = "a,b\n";
    for (int i = 0; i < 10; ++i) ten += std::to_string(i) + ",x\n";
    std::string twenty = "a\n";
    for (int i = 0; i < 20; ++i) twenty += std::to_string(i) + "\n";
    write_file(dir.path / "ten.csv", ten);
    write_file(dir.path / "twenty.csv", twenty);
    CatalogSummary s = catalog_summary(scan_lake(dir.path));
    CHECK(s.n_tables == 2);
    CHECK(s.total_rows == 30);
    CHECK(s.avg_rows == doctest::Approx(15.0));
    CHECK(s.total_cols == 3);
    CHECK(s.avg_numeric_cols == doctest::Approx(1.0));
    CHECK(s.avg_categorical_cols == doctest::Approx(0.5));
}

TEST_CASE("summary totals equal the sum over entries") {
    TempDir dir("totals");
    Rng rng(17);
    std::size_t expect_rows = 0;
    std::size_t expect_cols = 0;
    for (int t = 0; t < 6; ++t) {
        const std::size_t rows = rng.below(20);
        const std::size_t cols = 1 + rng.below(4);
        expect_rows += rows;
        expect_cols += cols;
        std::string text;
        for (std::size_t c = 0; c < cols; ++c) text += (c ? ",c" : "c") + std::to_string(c);
        text += '\n';
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) text += c ? ",1" : "1";
            text += '\n';
        }
        write_file(dir.path / ("t" + std::to_string(t) + ".csv"), text);
    }
    CatalogSummary s = catalog_summary(scan_lake(dir.path));
    CHECK(s.total_rows == expect_rows);
    CHECK(s.total_cols == expect_cols);
}

TEST_CASE("scan is idempotent on an unchanged directory") {
    TempDir dir("idem");
    write_file(dir.path / "a.csv", "x,y\n1,u\n2,v\n");
    write_file(dir.path / "b.csv", "z\n9\n");
    LakeCatalog c1 = scan_lake(dir.path);
    LakeCatalog c2 = scan_lake(dir.path);
    save_catalog(c1, dir.path / "c1.bin");
    save_catalog(c2, dir.path / "c2.bin");
    CHECK(slurp(dir.path / "c1.bin") == slurp(dir.path / "c2.bin"));
}

TEST_CASE("catalog save/load round trip and version guard") {
    TempDir dir("saveload");
    write_file(dir.path / "a.csv", "x\n1\n");
    LakeCatalog cat = scan_lake(dir.path);
    const fs::path file = dir.path / "cat.txt";
    save_catalog(cat, file);
    LakeCatalog back = load_catalog(file);
    REQUIRE(back.size() == 1);
    CHECK(back.entries()[0].table_name == "a");
    CHECK(back.entries()[0].row_count == 1);
    // Reload table data lazily from the lake root.
    auto t = back.table(0);
    CHECK(t->num_rows() == 1);

    write_file(file, "lakejoin-catalog\t99\n");
    CHECK_THROWS_AS(load_catalog(file), DataError);
}

TEST_CASE("manifest drives the scan when present") {
    TempDir dir("manifest");
    write_file(dir.path / "data/a.csv", "k\n1\n2\n");
    write_file(dir.path / "data/ignored.csv", "k\n1\n");
    write_file(dir.path / "manifest.txt",
               "# tables\nalpha\tdata/a.csv\tk=categorical\n");
    LakeCatalog cat = scan_lake(dir.path);
    REQUIRE(cat.size() == 1);
    CHECK(cat.entries()[0].table_name == "alpha");
    CHECK(cat.entries()[0].columns[0].dtype == Dtype::Categorical);
}

TEST_CASE("in-memory catalog profiles like the scanner") {
    LakeCatalog cat = make_catalog({key_table("t1", "c", {"a", "b"}),
                                    key_table("t0", "c", {"a"})});
    REQUIRE(cat.size() == 2);
    CHECK(cat.entries()[0].table_name == "t0");  // sorted
    CHECK(cat.entries()[1].columns[0].distinct_count == 2);
    CHECK(cat.table(1)->num_rows() == 2);
}
