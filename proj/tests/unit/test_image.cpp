#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <png.h>

#include "phylo/dot_export.hpp"
#include "phylo/error.hpp"
#include "phylo/image.hpp"
#include "phylo/manifest.hpp"

namespace fs = std::filesystem;
using namespace phylo;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "phylo_test_image";
    fs::create_directories(dir);
    return dir;
}

void write_pgm_p5(const fs::path& path, int w, int h, const std::vector<unsigned char>& data) {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void write_rgb_png(const fs::path& path, int w, int h,
                   const std::vector<unsigned char>& rgb) {
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    REQUIRE(fp != nullptr);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    REQUIRE(setjmp(png_jmpbuf(png)) == 0);
    png_init_io(png, fp);
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(rgb.data() + static_cast<size_t>(y) * w * 3);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace

TEST_SUITE("image") {

TEST_CASE("all-zero PGM loads as zero image") {
    const fs::path path = temp_dir() / "zeros.pgm";
    write_pgm_p5(path, 96, 96, std::vector<unsigned char>(96 * 96, 0));
    const Image img = load_image(path.string(), 96);
    CHECK(img.side == 96);
    for (double v : img.pixels) CHECK(v == 0.0);
}

TEST_CASE("larger input is center-cropped, not resized") {
    const int w = 128, h = 128, side = 96;
    std::vector<unsigned char> data(static_cast<size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) data[static_cast<size_t>(y) * w + x] = (y * 7 + x * 3) % 251;
    const fs::path path = temp_dir() / "big.pgm";
    write_pgm_p5(path, w, h, data);
    const Image img = load_image(path.string(), side);
    const int off = (w - side) / 2;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x)
            CHECK(img.at(y, x) == static_cast<double>(data[static_cast<size_t>(y + off) * w + (x + off)]));
}

TEST_CASE("RGB PNG reduces to the first channel") {
    const int n = 64;
    std::vector<unsigned char> rgb(static_cast<size_t>(n) * n * 3);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const size_t i = (static_cast<size_t>(y) * n + x) * 3;
            rgb[i + 0] = (x * 5 + y) % 256;  // red: the channel that must survive
            rgb[i + 1] = 17;
            rgb[i + 2] = 211;
        }
    const fs::path path = temp_dir() / "color.png";
    write_rgb_png(path, n, n, rgb);
    const Image img = load_image(path.string(), n);
    double max_val = 0.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            CHECK(img.at(y, x) == static_cast<double>((x * 5 + y) % 256));
            max_val = std::max(max_val, img.at(y, x));
        }
    CHECK(max_val <= 255.0);
}

TEST_CASE("load errors") {
    CHECK_THROWS_AS(load_image("/nonexistent/file.pgm", 96), IoError);

    const fs::path small = temp_dir() / "small.pgm";
    write_pgm_p5(small, 16, 16, std::vector<unsigned char>(16 * 16, 7));
    CHECK_THROWS_AS(load_image(small.string(), 96), InvalidInputError);

    const fs::path ok = temp_dir() / "ok.pgm";
    write_pgm_p5(ok, 64, 64, std::vector<unsigned char>(64 * 64, 7));
    CHECK_THROWS_AS(load_image(ok.string(), 16), InvalidInputError);
}

TEST_CASE("load is deterministic and save round-trips") {
    const fs::path path = temp_dir() / "det.pgm";
    std::vector<unsigned char> data(48 * 48);
    for (size_t i = 0; i < data.size(); ++i) data[i] = (i * 31) % 256;
    write_pgm_p5(path, 48, 48, data);
    const Image a = load_image(path.string(), 48);
    const Image b = load_image(path.string(), 48);
    CHECK(a == b);

    const fs::path png = temp_dir() / "rt.png";
    save_image(a, png.string());
    CHECK(load_image(png.string(), 48) == a);

    const fs::path pgm = temp_dir() / "rt.pgm";
    save_image(a, pgm.string(), "comment line");
    CHECK(load_image(pgm.string(), 48) == a);
}

TEST_CASE("small input upscales through the largest centered square") {
    const fs::path path = temp_dir() / "up.pgm";
    std::vector<unsigned char> data(40 * 40, 0);
    for (size_t i = 0; i < data.size(); ++i) data[i] = (i * 13) % 256;
    write_pgm_p5(path, 40, 40, data);
    const Image img = load_image(path.string(), 64);
    CHECK(img.side == 64);
    for (double v : img.pixels) {
        CHECK(v >= 0.0);
        CHECK(v <= 255.0);
    }
}

TEST_CASE("manifest round-trips") {
    DatasetManifest m;
    m.entries = {{"images/a.png", "s1", 1}, {"images/b.png", "s1", 2}, {"images/c.png", "s1", 3},
                 {"images/d.png", "s1", 4}, {"images/e.png", "s1", 5}};
    GroundTruthTree t;
    t.set_id = "s1";
    t.root = 1;
    t.immediate_edges = {{1, 2}, {1, 3}, {3, 4}, {3, 5}};
    t.depth_labels = {{1, 1}, {2, 2}, {3, 2}, {4, 3}, {5, 3}};
    m.ground_truth = {t};

    const fs::path path = temp_dir() / "manifest.jsonl";
    write_manifest(m, path.string());
    const DatasetManifest back = read_manifest(path.string());
    CHECK(back == m);
}

TEST_CASE("manifest derives depths from edges") {
    DatasetManifest m;
    m.entries = {{"a", "s1", 1}, {"b", "s1", 2}, {"c", "s1", 3}, {"d", "s1", 4}, {"e", "s1", 5}};
    GroundTruthTree t;
    t.set_id = "s1";
    t.root = 1;
    t.immediate_edges = {{1, 2}, {1, 3}, {3, 4}, {3, 5}};
    m.ground_truth = {t};
    const fs::path path = temp_dir() / "derive.jsonl";
    write_manifest(m, path.string());
    const DatasetManifest back = read_manifest(path.string());
    const std::map<int, int> expected = {{1, 1}, {2, 2}, {3, 2}, {4, 3}, {5, 3}};
    CHECK(back.ground_truth.at(0).depth_labels == expected);
}

TEST_CASE("manifest validation failures") {
    const fs::path path = temp_dir() / "bad.jsonl";

    SUBCASE("duplicate node id") {
        std::ofstream out(path);
        out << R"({"path":"a","set_id":"s","node_id":1})" << "\n";
        out << R"({"path":"b","set_id":"s","node_id":1})" << "\n";
        out.close();
        CHECK_THROWS_AS(read_manifest(path.string()), ValidationError);
    }

    SUBCASE("dangling edge reference") {
        std::ofstream out(path);
        out << R"({"path":"a","set_id":"s","node_id":1})" << "\n";
        out << R"({"path":"b","set_id":"s","node_id":2})" << "\n";
        out << R"({"ground_truth":{"set_id":"s","root":1,"immediate_edges":[[1,9]]}})" << "\n";
        out.close();
        CHECK_THROWS_AS(read_manifest(path.string()), ValidationError);
    }

    SUBCASE("two components means two depth-1 nodes") {
        std::ofstream out(path);
        for (int i = 1; i <= 4; ++i)
            out << R"({"path":"p)" << i << R"(","set_id":"s","node_id":)" << i << "}\n";
        out << R"({"ground_truth":{"set_id":"s","root":1,"immediate_edges":[[1,2],[3,4]]}})"
            << "\n";
        out.close();
        CHECK_THROWS_AS(read_manifest(path.string()), ValidationError);
    }

    SUBCASE("depth labels disagreeing with edges") {
        std::ofstream out(path);
        out << R"({"path":"a","set_id":"s","node_id":1})" << "\n";
        out << R"({"path":"b","set_id":"s","node_id":2})" << "\n";
        out << R"({"ground_truth":{"set_id":"s","root":1,"immediate_edges":[[1,2]],)"
            << R"("depth_labels":{"1":1,"2":1}}})" << "\n";
        out.close();
        CHECK_THROWS_AS(read_manifest(path.string()), ValidationError);
    }
}

TEST_CASE("empty manifest is fine") {
    const fs::path path = temp_dir() / "empty.jsonl";
    std::ofstream(path).close();
    const DatasetManifest m = read_manifest(path.string());
    CHECK(m.entries.empty());
    CHECK(m.ground_truth.empty());
}

namespace {

int count_edges(const std::string& dot) {
    int count = 0;
    size_t pos = 0;
    while ((pos = dot.find(" -> ", pos)) != std::string::npos) {
        ++count;
        pos += 4;
    }
    return count;
}

PhyloTree chain_tree(const std::vector<int>& nodes) {
    PhyloTree t;
    t.nodes = nodes;
    t.root = nodes[0];
    for (size_t i = 0; i < nodes.size(); ++i) t.depth[nodes[i]] = static_cast<int>(i) + 1;
    for (size_t i = 1; i < nodes.size(); ++i) {
        t.parent[nodes[i]] = nodes[i - 1];
        t.immediate_edges.emplace_back(nodes[i - 1], nodes[i]);
    }
    for (size_t i = 0; i < nodes.size(); ++i)
        for (size_t j = i + 2; j < nodes.size(); ++j)
            t.ancestral_edges.emplace_back(nodes[i], nodes[j]);
    return t;
}

}  // namespace

TEST_CASE("dot export") {
    SUBCASE("single two-node tree has one solid edge") {
        PhyloForest f;
        f.trees.push_back(chain_tree({1, 2}));
        const std::string dot = export_dot(f);
        CHECK(count_edges(dot) == 1);
        CHECK(dot.find("style=dashed") == std::string::npos);
        CHECK(dot.find("n1 [shape=doublecircle]") != std::string::npos);
    }

    SUBCASE("chain adds the dashed ancestral edge") {
        PhyloForest f;
        f.trees.push_back(chain_tree({1, 2, 3}));
        const std::string dot = export_dot(f);
        CHECK(count_edges(dot) == 3);
        CHECK(dot.find("n1 -> n3 [style=dashed];") != std::string::npos);
    }

    SUBCASE("two trees share one digraph") {
        PhyloForest f;
        f.trees.push_back(chain_tree({1, 2}));
        f.trees.push_back(chain_tree({10, 11, 12}));
        const std::string dot = export_dot(f);
        CHECK(count_edges(dot) == 1 + 3);
        CHECK(dot.find("digraph") == 0);
        CHECK(dot.find("digraph", 1) == std::string::npos);
    }

    SUBCASE("edge count matches immediate plus ancestral") {
        PhyloForest f;
        f.trees.push_back(chain_tree({0, 1, 2, 3, 4}));
        f.trees.push_back(chain_tree({7, 8}));
        int expected = 0;
        for (const auto& t : f.trees)
            expected += static_cast<int>(t.immediate_edges.size() + t.ancestral_edges.size());
        CHECK(count_edges(export_dot(f)) == expected);
    }
}

}  // TEST_SUITE
