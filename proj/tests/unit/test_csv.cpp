#include <doctest.h>

#include <sstream>

#include "nvmux/csv_io.hpp"
#include "nvmux/errors.hpp"
#include "nvmux/spinmodel.hpp"

using namespace nvmux;

TEST_CASE("nine significant digits") {
    CHECK(fmt9(1.0 / 3.0) == "0.333333333");
    CHECK(fmt9(123456789012.0) == "1.23456789e+11");
    CHECK(fmt9(-2.5) == "-2.5");
}

TEST_CASE("count matrix round trip") {
    RamseyConfig cfg;
    cfg.n = 400;
    ProbePair p;
    Rng rng = make_stream(5, 0);
    const MomentMatrix mm = simulate_shots(cfg, p, PhaseSampler::fixed({0.4, -1.0}), rng);
    const CountMatrix cm = mm.counts();
    std::ostringstream os;
    write_counts_csv(os, cm, &mm);
    const std::string text = os.str();
    CHECK(text.rfind("combo,total,E,V\n", 0) == 0);
    CHECK(text.find("\n+y-x,") != std::string::npos);

    std::istringstream is(text);
    const CountMatrix back = read_counts_csv(is, "m.csv");
    for (auto c : sixteen_schedule()) {
        CAPTURE(c.label());
        CHECK(back.at(c).total == cm.at(c).total);
        CHECK(back.at(c).shots == 400);
    }

    std::ostringstream totals_only;
    write_counts_csv(totals_only, cm);
    CHECK(totals_only.str().find(",\n") != std::string::npos);
}

TEST_CASE("malformed count rows name the row") {
    std::istringstream bad("combo,total,E,V\n+x+x,10,0.1,\n+q+x,3,0.1,\n");
    CHECK_THROWS_WITH_AS(read_counts_csv(bad, "m.csv"), doctest::Contains("row 3"), ConfigError);
}

TEST_CASE("edge scan CSV") {
    EdgeScan s;
    s.axis = ScanAxis::Y;
    s.position_nm = {-5, 0, 5};
    s.freq_mhz = {{2860, 2880, 2861, 2879}, {2859.5, 2880.5, 2862, 2878}, {2858, 2882, 2863, 2877.125}};
    std::ostringstream os;
    write_edge_scan_csv(os, s);
    std::istringstream is(os.str());
    const EdgeScan back = read_edge_scan_csv(is, "e.csv", ScanAxis::Y);
    CHECK(back.position_nm == s.position_nm);
    CHECK(back.freq_mhz == s.freq_mhz);

    std::istringstream short_row("position_nm,f1_minus_mhz,f1_plus_mhz,f2_minus_mhz,f2_plus_mhz\n0,1,2,3,4\n5,1,2\n");
    try {
        read_edge_scan_csv(short_row, "e.csv", ScanAxis::X);
        FAIL("no error");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    std::istringstream text_cell("position_nm,f1_minus_mhz,f1_plus_mhz,f2_minus_mhz,f2_plus_mhz\n0,1,2,x,4\n");
    CHECK_THROWS_WITH_AS(read_edge_scan_csv(text_cell, "e.csv", ScanAxis::X), doctest::Contains("row 2"),
                         ConfigError);
    std::istringstream empty("position_nm,f1_minus_mhz,f1_plus_mhz,f2_minus_mhz,f2_plus_mhz\n");
    CHECK_THROWS_AS(read_edge_scan_csv(empty, "e.csv", ScanAxis::X), ConfigError);
}
