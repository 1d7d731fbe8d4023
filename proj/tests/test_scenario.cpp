#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oselab/drivers.hpp"

using namespace oselab;

namespace {

std::string minimal_cfg(const std::string& extra = "") {
    return "[base]\n"
           "kind = toral_automorphism\n"
           "matrix = 2 1 ; 1 1\n"
           "[generator]\n"
           "kind = rotation_conjugated\n"
           "diagonal = 2.0 0.5\n"
           "angle_kind = cosine\n"
           "angle_amplitude = 0.7\n"
           "norm = l2\n"
           "[sampling]\n"
           "count = 16\n"
           "seed = 3\n" +
           extra;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("config parsing") {
    auto cfg = ConfigFile::parse_text(minimal_cfg("[verify]\nlevels = 1 2\npair_count = 40\n"));
    CHECK(cfg.get("base", "kind") == "toral_automorphism");
    CHECK(cfg.get_double("generator", "angle_amplitude") == doctest::Approx(0.7));
    CHECK(cfg.get_longs_or("verify", "levels", {}) == std::vector<long>{1, 2});
    CHECK(cfg.get_or("output", "dir", "out") == "out");
    CHECK_THROWS_AS(cfg.get("base", "missing"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_text("key_without_equals\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_text("[unterminated\n"), ConfigError);

    Scenario s = Scenario::from_config(cfg, "t");
    CHECK(s.generator.kind() == GeneratorKind::RotationConjugated);
    CHECK(s.base.invertible());
    CHECK(s.sample_count == 16);

    CHECK_THROWS_AS(Scenario::from_config(ConfigFile::parse_text(minimal_cfg(
                        "[regular_set]\ngamma = 0.1\nell = 3\n")), "bad"),
                    ConfigError);
}

TEST_CASE("scenario kinds round through the parser") {
    auto doubling = Scenario::from_config(ConfigFile::parse_text("[base]\nkind = doubling_map\n"
                                                                 "[generator]\nkind = "
                                                                 "truncated_diagonal_compact\n"
                                                                 "dimension = 4\ntop = 2.0\nrate = "
                                                                 "0.5\nhead_block = 2\nnorm = l2\n"),
                                          "d");
    CHECK(doubling.generator.kind() == GeneratorKind::TruncatedDiagonalCompact);
    CHECK(doubling.generator.declared_head_block() == 2);

    auto shift = Scenario::from_config(
        ConfigFile::parse_text("[base]\nkind = full_shift\nsymbols = 3\n"
                               "[generator]\nkind = constant\nmatrix = 2 0 ; 0 0.5\nnorm = linf\n"),
        "s");
    CHECK(shift.base.lipschitz_forward() == doctest::Approx(3.0));
    CHECK(shift.generator.norm() == NormKind::Linf);
}

TEST_CASE("lemma lab driver is deterministic") {
    Scenario s = Scenario::from_config(ConfigFile::parse_text(minimal_cfg()), "det");
    std::string dir_a = "build_test_out/lemma_a";
    std::string dir_b = "build_test_out/lemma_b";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    auto ra = run_lemma_lab(s, dir_a, 1);
    auto rb = run_lemma_lab(s, dir_b, 1);
    CHECK(ra.exit_code == 0);
    REQUIRE(ra.files == rb.files);
    for (const auto& f : ra.files) CHECK(slurp(dir_a + "/" + f) == slurp(dir_b + "/" + f));
    // Digest inventory inside the manifests matches as well.
    auto ja = slurp(dir_a + "/manifest.json");
    auto jb = slurp(dir_b + "/manifest.json");
    auto pick = [](const std::string& text) {
        auto at = text.find("\"outputs\"");
        auto end = text.find('}', at);
        return text.substr(at, end - at);
    };
    CHECK(pick(ja) == pick(jb));
}

TEST_CASE("spectrum driver writes the expected table") {
    Scenario s = Scenario::from_config(
        ConfigFile::parse_text(minimal_cfg("[spectrum]\nhorizon = 256\n")), "spec");
    std::string dir = "build_test_out/spectrum";
    std::filesystem::remove_all(dir);
    auto r = run_spectrum(s, dir, 1);
    CHECK(r.exit_code == 0);
    std::string csv = slurp(dir + "/spectrum.csv");
    CHECK(csv.find("raw_0") != std::string::npos);
    int lines = 0;
    for (char c : csv)
        if (c == '\n') ++lines;
    CHECK(lines == 17);  // header + 16 samples
    std::string summary = slurp(dir + "/spectrum_summary.json");
    CHECK(summary.find("pooled_raw") != std::string::npos);
    CHECK(slurp(dir + "/manifest.json").find("scenario_digest") != std::string::npos);
}
