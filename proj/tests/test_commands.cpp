#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "tamsdld/commands.hpp"

using namespace tamsdld;

namespace {

run_config bm_config(std::size_t n, std::size_t tau) {
    run_config c;
    c.process = process_kind::bm;
    c.n = n;
    c.taus = {tau};
    return c;
}

double as_double(const cell& c) { return std::get<double>(c); }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string item;
        while (std::getline(ls, item, ','))
            f.push_back(item);
        out.push_back(f);
    }
    return out;
}

} // namespace

TEST(Format, SeventeenDigitsRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
    EXPECT_EQ(format_double(3.0), "3");
    EXPECT_EQ(format_double(1e-300), "1e-300");
    EXPECT_EQ(format_double(2.0 / 3), "0.66666666666666663");
    for (double v : {0.1, 1.0 / 3, 2.5e-17, 123456.789, -7.25}) {
        const std::string s = format_double(v);
        double back = 0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        EXPECT_EQ(back, v);
    }
}

TEST(EpsGrid, Parsing) {
    EXPECT_EQ(parse_eps_grid("1:2:3"), (std::vector<double>{1.0, 1.5, 2.0}));
    EXPECT_EQ(parse_eps_grid("0.5:0.5:1"), (std::vector<double>{0.5}));
    for (const char* bad : {"1:2", "1:2:3:4", "0:1:3", "2:1:3", "a:2:3", "1:2:0", "1:2:x", "1:2:1"})
        EXPECT_THROW(parse_eps_grid(bad), config_error) << bad;
}

TEST(Validate, Messages) {
    auto c = bm_config(9, 2);
    EXPECT_NO_THROW(validate(c));
    c.taus = {9};
    EXPECT_THROW(validate(c), config_error);
    c = bm_config(9, 2);
    c.process = process_kind::fbm;
    EXPECT_THROW(validate(c), config_error); // missing hurst
    c.hurst = 1.2;
    EXPECT_THROW(validate(c), config_error);
    c = bm_config(9, 2);
    c.epsilons = {0.0};
    EXPECT_THROW(validate(c), config_error);
    c = bm_config(1, 1);
    EXPECT_THROW(validate(c), config_error);
    c = bm_config(9, 2);
    c.diffusion = -1;
    EXPECT_THROW(validate(c), config_error);
}

TEST(ConfigJson, AppliesAndRespectsLockedKeys) {
    run_config c;
    const auto doc = nlohmann::json::parse(R"({"process": "fbm", "hurst": 0.7, "N": 64,
        "tau": [1, 4], "eps": 0.5, "eps-grid": "1:2:2", "trials": 2000, "seed": 18446744073709551615,
        "threads": 2, "format": "json", "mass_tol": 1e-10})");
    apply_config_json(c, doc, {"N"});
    EXPECT_EQ(c.process, process_kind::fbm);
    EXPECT_EQ(*c.hurst, 0.7);
    EXPECT_EQ(c.n, 0u);
    EXPECT_EQ(c.taus, (std::vector<std::size_t>{1, 4}));
    EXPECT_EQ(c.epsilons, (std::vector<double>{0.5}));
    EXPECT_EQ(c.eps_grid, "1:2:2");
    EXPECT_EQ(c.trials, 2000u);
    EXPECT_EQ(c.seed, 18446744073709551615ull);
    EXPECT_EQ(c.threads, 2u);
    EXPECT_EQ(c.format, output_format::json);
    EXPECT_EQ(c.mass_tol, 1e-10);
    EXPECT_THROW(apply_config_json(c, nlohmann::json::parse(R"({"bogus": 1})")), config_error);
    EXPECT_THROW(apply_config_json(c, nlohmann::json::parse(R"({"N": "x"})")), config_error);
    EXPECT_THROW(apply_config_json(c, nlohmann::json::parse(R"({"seed": -1})")), config_error);
    EXPECT_THROW(apply_config_json(c, nlohmann::json::parse("[1]")), config_error);
}

TEST(CmdBound, BrownianExample) {
    auto c = bm_config(9, 2);
    c.epsilons = {3.0};
    const auto t = cmd_bound(c);
    ASSERT_EQ(t.rows.size(), 2u);
    const auto nu = t.column("nu"), method = t.column("method");
    EXPECT_EQ(std::get<std::string>(t.rows[0][method]), "generic");
    EXPECT_NEAR(as_double(t.rows[0][nu]), 80.0, 1e-10);
    EXPECT_EQ(std::get<std::string>(t.rows[1][method]), "closed_form");
    EXPECT_NEAR(as_double(t.rows[1][nu]), 70.0, 1e-12);
    EXPECT_TRUE(t.ok);
}

TEST(CmdBound, HalfHurstRowsEqualBrownian) {
    auto b = bm_config(40, 3);
    b.epsilons = {0.2, 1.0};
    auto f = b;
    f.process = process_kind::fbm;
    f.hurst = 0.5;
    const auto tb = cmd_bound(b), tf = cmd_bound(f);
    ASSERT_EQ(tb.rows.size(), tf.rows.size());
    for (std::size_t r = 0; r < tb.rows.size(); ++r)
        for (std::size_t k = 0; k < tb.columns.size(); ++k) {
            if (const auto* d = std::get_if<double>(&tb.rows[r][k]))
                EXPECT_NEAR(*d, as_double(tf.rows[r][k]), 1e-10 * std::abs(*d));
            else
                EXPECT_EQ(tb.rows[r][k], tf.rows[r][k]);
        }
}

TEST(CmdBound, Rejections) {
    auto c = bm_config(9, 2);
    EXPECT_THROW(cmd_bound(c), config_error); // no epsilon
    c.epsilons = {0.0};
    EXPECT_THROW(cmd_bound(c), config_error);
}

TEST(CmdDist, SingleIncrementIsChiSquared) {
    // BM, D = 1/2, N = 2, tau = 1: M = X(2) - X(1) squared, a chi^2_1 variable
    auto c = bm_config(2, 1);
    c.xs = {1.0, 4.0};
    const auto t = cmd_dist(c);
    EXPECT_NEAR(as_double(t.rows[0][t.column("cdf")]), 0.6826894921370859, 1e-13);
    EXPECT_NEAR(as_double(t.rows[1][t.column("tail")]), 0.04550026389635842, 1e-14);
    EXPECT_TRUE(t.ok);
}

TEST(CmdDist, MonotoneAndNormalized) {
    run_config c;
    c.process = process_kind::fbm;
    c.hurst = 0.3;
    c.n = 20;
    c.taus = {1, 3};
    c.points = 40;
    const auto t = cmd_dist(c);
    EXPECT_TRUE(t.ok);
    ASSERT_EQ(t.rows.size(), 80u);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        EXPECT_LE(as_double(t.rows[r][t.column("mass_deficit")]), 1e-12);
        const double sum =
            as_double(t.rows[r][t.column("cdf")]) + as_double(t.rows[r][t.column("tail")]);
        EXPECT_NEAR(sum, 1.0, 1e-12);
        if (r % 40 != 0) {
            EXPECT_GE(as_double(t.rows[r][t.column("cdf")]),
                      as_double(t.rows[r - 1][t.column("cdf")]));
        }
    }
}

TEST(CmdVerify, DominatedAndDeterministic) {
    auto c = bm_config(64, 4);
    c.taus = {1, 4};
    c.trials = 4000;
    c.seed = 17;
    c.threads = 1;
    const auto a = cmd_verify(c);
    EXPECT_TRUE(a.ok);
    EXPECT_EQ(a.rows.size(), 20u);
    c.threads = 4;
    const auto b = cmd_verify(c);
    EXPECT_EQ(a.rows, b.rows);
    c.trials = 999;
    EXPECT_THROW(cmd_verify(c), config_error);
}

TEST(CmdBeta, ExampleAndRejections) {
    run_config c;
    c.process = process_kind::fbm;
    c.hurst = 0.7;
    c.n = 1024;
    c.taus = {8};
    c.trials = 2000;
    c.seed = 5;
    const auto t = cmd_beta(c);
    EXPECT_TRUE(t.ok);
    EXPECT_NEAR(as_double(t.rows[0][t.column("beta_mean")]), 1.4, 0.05);
    c.taus = {1};
    EXPECT_THROW(cmd_beta(c), config_error);
    c.taus = {8};
    c.diffusion = 1.0;
    EXPECT_THROW(cmd_beta(c), config_error);
    EXPECT_THROW(cmd_beta(bm_config(64, 8)), config_error);
}

TEST(Output, CsvRoundTrip) {
    run_config c;
    c.process = process_kind::fbm;
    c.hurst = 0.7;
    c.n = 64;
    c.taus = {1, 4};
    c.eps_grid = "0.1:3:7";
    const auto t = cmd_bound(c);
    std::ostringstream os;
    write_csv(t, os);
    const auto parsed = parse_csv(os.str());
    ASSERT_EQ(parsed.size(), t.rows.size() + 1);
    EXPECT_EQ(parsed[0], t.columns);
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t k = 0; k < t.columns.size(); ++k) {
            if (const auto* d = std::get_if<double>(&t.rows[r][k])) {
                double back = 0;
                const auto& s = parsed[r + 1][k];
                std::from_chars(s.data(), s.data() + s.size(), back);
                EXPECT_EQ(back, *d);
            }
        }
}

TEST(Output, JsonArrayOfRows) {
    auto c = bm_config(9, 2);
    c.epsilons = {3.0};
    const auto t = cmd_bound(c);
    std::ostringstream os;
    write_json(t, os);
    const auto j = nlohmann::json::parse(os.str());
    ASSERT_TRUE(j.is_array());
    ASSERT_EQ(j.size(), 2u);
    for (const auto& col : t.columns)
        EXPECT_TRUE(j[0].contains(col));
    EXPECT_EQ(j[1]["nu"].get<double>(), 70.0);
    EXPECT_EQ(j[0]["bound"].get<double>(), as_double(t.rows[0][t.column("bound")]));
}

TEST(Output, FileWriteLeavesNoTemporary) {
    const auto dir = std::filesystem::temp_directory_path() / "tamsdld_test_commands";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.csv";
    auto c = bm_config(9, 2);
    c.epsilons = {3.0};
    write_table_file(cmd_bound(c), output_format::csv, path);
    EXPECT_TRUE(std::filesystem::exists(path));
    EXPECT_FALSE(std::filesystem::exists(dir / "out.csv.tmp"));
    EXPECT_THROW(write_table_file(cmd_bound(c), output_format::csv, dir / "missing" / "x.csv"),
                 error);
    std::filesystem::remove_all(dir);
}
