#include <doctest.h>

#include <sstream>
#include <string>

#include "nvmux/config.hpp"
#include "nvmux/errors.hpp"

using namespace nvmux;

namespace {

const char* kProbe = R"([probe]
theta1_deg = 41
phi1_deg = 94
theta2_deg = -84
phi2_deg = -161
dx_nm = -52
dy_nm = -96
dz_nm = 11
z1_nm = 47
)";

RunConfig parse(const std::string& text) {
    std::istringstream is(text);
    return parse_run_config(parse_ini(is, "test.ini"));
}

std::size_t error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return 0;
}

}  // namespace

TEST_CASE("INI tokenizer") {
    std::istringstream is("# header\n[a]\nk = v  # trailing\n; note\n\n[b]\nx=1\n");
    const IniDocument d = parse_ini(is, "t");
    REQUIRE(d.sections.size() == 2);
    CHECK(d.sections[0].name == "a");
    CHECK(d.sections[0].line == 2);
    REQUIRE(d.sections[0].entries.size() == 1);
    CHECK(d.sections[0].entries[0].value == "v");
    CHECK(d.sections[0].entries[0].line == 3);
    CHECK(d.sections[1].entries[0].key == "x");

    std::istringstream orphan("k = v\n");
    CHECK_THROWS_AS(parse_ini(orphan, "t"), ConfigError);
    std::istringstream no_eq("[a]\njust words\n");
    CHECK_THROWS_AS(parse_ini(no_eq, "t"), ConfigError);
}

TEST_CASE("probe section builds the pair") {
    const RunConfig c = parse(std::string("[run]\nseed = 5\n") + kProbe);
    REQUIRE(c.seed);
    CHECK(*c.seed == 5);
    REQUIRE(c.probe);
    CHECK(c.probe->first.axis.theta_deg() == doctest::Approx(41));
    CHECK(c.probe->second.position_nm.x() == -52);
    CHECK(c.probe->second.position_nm.z() == 58);
    CHECK(c.probe->first.photon_yield == 0.1);
    CHECK(c.probe->first.contrast == 0.2);
    CHECK(c.probe->first.dephasing.at(250e-9) == doctest::Approx(0.7));
}

TEST_CASE("strict parsing anchors errors to lines") {
    CHECK(error_line(std::string(kProbe) + "colour = red\n") == 10);
    CHECK(error_line(std::string(kProbe) + "z1_nm = 3\n") == 10);
    CHECK(error_line(std::string(kProbe) + "c1 = bright\n") == 10);
    CHECK(error_line("[nonsense]\n") == 1);
    CHECK(error_line("[run]\nseed = -4\n") == 2);
    CHECK(error_line("[run]\nseed = 1\n[run]\nseed = 2\n") == 3);
    CHECK(error_line(std::string(kProbe) + "zeta1 = 0.3\nt2star1_ns = 900\n") != 0);
    CHECK(error_line("[field]\nkind = laser\n") == 2);
    CHECK(error_line("[sequence]\ntau_ns = 250\nn_shots = 10\nschedule = twelve\n") == 4);

    try {
        parse(std::string(kProbe) + "phi3_deg = 1\n");
        FAIL("no error");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("test.ini:10") != std::string::npos);
        CHECK(msg.find("phi3_deg") != std::string::npos);
    }
}

TEST_CASE("field sections repeat") {
    const RunConfig c = parse(R"([field]
kind = uniform
bx_mt = 1
[field]
kind = wire
width_nm = 700
direction_deg = 0
current_ma = 0.02
waveform = ac
frequency_khz = 35.21143
[field]
kind = edge
position_nm = 10
normal_deg = 0
sheet_moment_mt_nm = 1000
)");
    REQUIRE(c.fields.size() == 3);
    CHECK(std::get<UniformField>(c.fields[0]).b.x() == doctest::Approx(1e-3));
    const auto& w = std::get<FiniteWire>(c.fields[1]);
    CHECK(w.direction.x() == doctest::Approx(1.0));
    CHECK(w.waveform.amplitude_a == doctest::Approx(2e-5));
    CHECK(w.waveform.frequency_hz == doctest::Approx(35211.43));
    CHECK(std::holds_alternative<StripeEdge>(c.fields[2]));
}

TEST_CASE("sequence and scan sections") {
    const RunConfig c = parse(std::string(kProbe) + R"([sequence]
tau_ns = 200
n_shots = 1000
schedule = eight
mode = covariance
contrast = nominal
sigma_u1_rad = 0.1
[scan]
start_x_nm = -100
stop_x_nm = 100
pixels = 5
lines = 2
line_step_y_nm = 20
height_nm = 10
)");
    REQUIRE(c.sequence);
    CHECK(c.sequence->ramsey.tau_s == doctest::Approx(200e-9));
    CHECK(c.sequence->ramsey.n == 1000);
    CHECK(c.sequence->schedule == ScheduleKind::Eight);
    CHECK(c.sequence->mode == ScanMode::Covariance);
    CHECK(c.sequence->contrast_source == ContrastSource::Nominal);
    CHECK(c.sequence->uncorrelated_sigma[0] == 0.1);
    REQUIRE(c.scan);
    CHECK(c.scan->dwell == 1000);
    REQUIRE(c.scan->pixels_nm.size() == 10);
    CHECK(c.scan->pixels_nm[9].y() == doctest::Approx(20));
    CHECK(c.scan->pixels_nm[0].z() == doctest::Approx(10));

    CHECK(error_line("[scan]\npixels = 4\n") != 0);
}

TEST_CASE("required sections and missing files") {
    const RunConfig c = parse(kProbe);
    CHECK_NOTHROW(c.require({"probe"}));
    CHECK_THROWS_WITH_AS(c.require({"probe", "sequence"}), doctest::Contains("[sequence]"), ConfigError);
    CHECK_THROWS_WITH_AS(load_run_config("/nonexistent/run.ini"), doctest::Contains("/nonexistent/run.ini"),
                         ConfigError);
}

TEST_CASE("shipped configs parse") {
    for (const char* name : {"wire_covariance.ini", "wire_dc_phases.ini", "tip2_truth.ini", "tip2_calibration.ini",
                             "tip2_odmr.ini"}) {
        CAPTURE(name);
        const RunConfig c = load_run_config(std::string(NVMUX_SOURCE_DIR) + "/configs/" + name);
        CHECK(c.seed);
        CHECK(c.probe);
    }
}

TEST_CASE("calibration guesses come from the nominal probe") {
    const RunConfig c = parse(std::string(kProbe) + "[calibration]\nsheet_moment_mt_nm = 1256.6\nx_edge_nm = 10\n");
    REQUIRE(c.calibration);
    CHECK(c.calibration->sample.sheet_moment_t_nm == doctest::Approx(1.2566));
    const auto g = guess_from_probe(*c.probe, c.calibration->sample);
    CHECK(g[0].x_edge_nm == doctest::Approx(10));
    CHECK(g[1].x_edge_nm == doctest::Approx(62));
    CHECK(g[1].y_edge_nm == doctest::Approx(96));
    CHECK(g[1].z_nm == doctest::Approx(58));
}
