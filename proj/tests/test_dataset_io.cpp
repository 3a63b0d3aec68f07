#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <limits>

#include "ham/dataset_io.hpp"
#include "ham/error.hpp"
#include "test_util.hpp"

using namespace ham;
using testutil::TempDir;

TEST_CASE("caption file with three valid lines reads in order") {
    TempDir tmp;
    const std::string path = tmp.file("caps.jsonl");
    testutil::write_file(
        path,
        R"({"id":"a","image_id":"i1","style_labels":[],"text":"first"})" "\n"
        R"({"id":"b","image_id":"i2","style_labels":[3],"text":"second"})" "\n"
        R"({"id":"c","image_id":"i1","style_labels":[0,7],"text":"third"})" "\n");
    const auto records = read_captions(path);
    REQUIRE(records.size() == 3);
    CHECK(records[0].id == "a");
    CHECK(records[1].text == "second");
    CHECK(records[2].style_labels == std::vector<int>{0, 7});
}

TEST_CASE("caption parse errors name the offending line") {
    TempDir tmp;
    const std::string path = tmp.file("caps.jsonl");
    testutil::write_file(
        path,
        R"({"id":"a","image_id":"i","style_labels":[],"text":"ok"})" "\n"
        "{ not json\n");
    try {
        read_captions(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(e.kind() == "parse");
    }
}

TEST_CASE("caption validation failures") {
    TempDir tmp;
    const std::string path = tmp.file("caps.jsonl");

    SECTION("empty text") {
        testutil::write_file(
            path, R"({"id":"a","image_id":"i","style_labels":[],"text":"  "})" "\n");
        REQUIRE_THROWS_AS(read_captions(path), ValidationError);
    }
    SECTION("negative style label") {
        testutil::write_file(
            path, R"({"id":"a","image_id":"i","style_labels":[-1],"text":"x"})" "\n");
        REQUIRE_THROWS_AS(read_captions(path), ValidationError);
    }
    SECTION("duplicate id") {
        testutil::write_file(
            path,
            R"({"id":"a","image_id":"i","style_labels":[],"text":"x"})" "\n"
            R"({"id":"a","image_id":"j","style_labels":[],"text":"y"})" "\n");
        REQUIRE_THROWS_AS(read_captions(path), ValidationError);
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(read_captions(tmp.file("absent.jsonl")), IoError);
    }
}

TEST_CASE("caption write/read round-trip preserves every field") {
    TempDir tmp;
    Rng rng(41);
    for (int iter = 0; iter < 50; ++iter) {
        const auto records = testutil::random_records(rng, 1 + rng.bounded(20));
        const std::string path = tmp.file("roundtrip.jsonl");
        write_captions(records, path);
        const auto back = read_captions(path);
        REQUIRE(back.size() == records.size());
        for (size_t i = 0; i < records.size(); ++i) {
            CHECK(back[i].id == records[i].id);
            CHECK(back[i].image_id == records[i].image_id);
            CHECK(back[i].text == records[i].text);
            CHECK(back[i].style_labels == records[i].style_labels);
        }
    }
}

TEST_CASE("caption files are byte-stable after one write/read cycle") {
    TempDir tmp;
    Rng rng(42);
    for (int iter = 0; iter < 25; ++iter) {
        const auto records = testutil::random_records(rng, 1 + rng.bounded(15));
        const std::string p1 = tmp.file("a.jsonl");
        const std::string p2 = tmp.file("b.jsonl");
        write_captions(records, p1);
        write_captions(read_captions(p1), p2);
        CHECK(testutil::read_file(p1) == testutil::read_file(p2));
    }
}

TEST_CASE("texts with JSON-hostile characters survive the round-trip") {
    TempDir tmp;
    std::vector<CaptionRecord> records(1);
    records[0].id = "x";
    records[0].image_id = "i";
    records[0].text = "a \"quoted\" word, a backslash \\ and a\ttab plus newline\nend";
    const std::string path = tmp.file("esc.jsonl");
    write_captions(records, path);
    const auto back = read_captions(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].text == records[0].text);
}

TEST_CASE("validate_labels enforces the declared cluster count") {
    std::vector<CaptionRecord> records(1);
    records[0].id = "x";
    records[0].text = "t";
    records[0].style_labels = {0, 4};
    CHECK_NOTHROW(validate_labels(records, 5));
    REQUIRE_THROWS_AS(validate_labels(records, 4), ValidationError);
}

TEST_CASE("2x3 zero matrix writes a 40-byte file and reads back identical") {
    TempDir tmp;
    FeatureMatrix m(2, 3);
    const std::string path = tmp.file("zeros.sfm");
    write_matrix(m, path);
    const std::string raw = testutil::read_file(path);
    REQUIRE(raw.size() == 16 + 24);
    CHECK(raw.compare(0, 4, "SFM1") == 0);
    const auto back = read_matrix(path);
    CHECK(back.rows == 2);
    CHECK(back.cols == 3);
    CHECK(back.data == m.data);
}

TEST_CASE("matrix header layout is little-endian by byte position") {
    TempDir tmp;
    FeatureMatrix m(1, 2);
    m.at(0, 0) = 1.0f;   // 0x3f800000
    m.at(0, 1) = -2.0f;  // 0xc0000000
    const std::string path = tmp.file("le.sfm");
    write_matrix(m, path);
    const std::string raw = testutil::read_file(path);
    REQUIRE(raw.size() == 24);
    const auto* b = reinterpret_cast<const unsigned char*>(raw.data());
    // version=1, rows=1, cols=2, each as u32 LE
    CHECK(b[4] == 1);  CHECK(b[5] == 0);  CHECK(b[6] == 0);  CHECK(b[7] == 0);
    CHECK(b[8] == 1);  CHECK(b[12] == 2);
    // 1.0f bytes 00 00 80 3f
    CHECK(b[16] == 0x00); CHECK(b[17] == 0x00); CHECK(b[18] == 0x80); CHECK(b[19] == 0x3f);
    // -2.0f bytes 00 00 00 c0
    CHECK(b[20] == 0x00); CHECK(b[21] == 0x00); CHECK(b[22] == 0x00); CHECK(b[23] == 0xc0);
}

TEST_CASE("matrix round-trip is bitwise over random payloads") {
    TempDir tmp;
    Rng rng(43);
    for (int iter = 0; iter < 30; ++iter) {
        const size_t n = 1 + rng.bounded(40);
        const size_t d = 1 + rng.bounded(40);
        const auto m = testutil::random_matrix(rng, n, d, -100.0, 100.0);
        const std::string path = tmp.file("rt.sfm");
        write_matrix(m, path);
        const auto back = read_matrix(path);
        REQUIRE(back.rows == n);
        REQUIRE(back.cols == d);
        REQUIRE(std::memcmp(back.data.data(), m.data.data(), n * d * 4) == 0);
    }
}

TEST_CASE("large random matrix round-trips bitwise") {
    TempDir tmp;
    Rng rng(44);
    const auto m = testutil::random_matrix(rng, 100, 512, -10.0, 10.0);
    const std::string path = tmp.file("big.sfm");
    write_matrix(m, path);
    const auto back = read_matrix(path);
    REQUIRE(std::memcmp(back.data.data(), m.data.data(), m.data.size() * 4) == 0);
}

TEST_CASE("matrix error kinds are distinct") {
    TempDir tmp;
    FeatureMatrix good(2, 2);
    const std::string path = tmp.file("m.sfm");
    write_matrix(good, path);
    const std::string raw = testutil::read_file(path);

    SECTION("NaN rejected on write") {
        FeatureMatrix bad(1, 1);
        bad.at(0, 0) = std::numeric_limits<float>::quiet_NaN();
        REQUIRE_THROWS_AS(write_matrix(bad, tmp.file("nan.sfm")), ValidationError);
    }
    SECTION("infinity rejected on write") {
        FeatureMatrix bad(1, 1);
        bad.at(0, 0) = std::numeric_limits<float>::infinity();
        REQUIRE_THROWS_AS(write_matrix(bad, tmp.file("inf.sfm")), ValidationError);
    }
    SECTION("magic mismatch is a parse error") {
        std::string tampered = raw;
        tampered[0] = 'X';
        testutil::write_file(path, tampered);
        REQUIRE_THROWS_AS(read_matrix(path), ParseError);
    }
    SECTION("bad version is a parse error") {
        std::string tampered = raw;
        tampered[4] = 2;
        testutil::write_file(path, tampered);
        REQUIRE_THROWS_AS(read_matrix(path), ParseError);
    }
    SECTION("truncated payload is an io error") {
        testutil::write_file(path, raw.substr(0, raw.size() - 3));
        REQUIRE_THROWS_AS(read_matrix(path), IoError);
    }
    SECTION("truncated header is an io error") {
        testutil::write_file(path, raw.substr(0, 10));
        REQUIRE_THROWS_AS(read_matrix(path), IoError);
    }
    SECTION("trailing bytes are a parse error") {
        testutil::write_file(path, raw + "xx");
        REQUIRE_THROWS_AS(read_matrix(path), ParseError);
    }
    SECTION("NaN payload is a validation error") {
        std::string tampered = raw;
        // overwrite the first float with quiet NaN bits 0x7fc00000 (LE)
        tampered[16] = 0x00;
        tampered[17] = 0x00;
        tampered[18] = static_cast<char>(0xc0);
        tampered[19] = 0x7f;
        testutil::write_file(path, tampered);
        REQUIRE_THROWS_AS(read_matrix(path), ValidationError);
    }
    SECTION("zero-dimension header is a parse error") {
        std::string tampered = raw.substr(0, 16);
        tampered[8] = 0;  // rows = 0
        testutil::write_file(path, tampered);
        REQUIRE_THROWS_AS(read_matrix(path), ParseError);
    }
}

TEST_CASE("matrix construction rejects empty dimensions") {
    REQUIRE_THROWS_AS(FeatureMatrix(0, 4), ArgumentError);
    REQUIRE_THROWS_AS(FeatureMatrix(4, 0), ArgumentError);
}
