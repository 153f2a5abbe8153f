#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nvmux/calibration.hpp"
#include "nvmux/demux.hpp"
#include "nvmux/selftest.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class Sandbox {
public:
    Sandbox() : dir_(fs::temp_directory_path() / ("nvmux_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++))) {
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    ~Sandbox() { fs::remove_all(dir_); }

    const fs::path& dir() const { return dir_; }

    fs::path write(const std::string& name, const std::string& text) const {
        const fs::path p = dir_ / name;
        std::ofstream(p) << text;
        return p;
    }

    Run run(const std::string& args) const {
        const fs::path out = dir_ / "stdout.txt";
        const fs::path err = dir_ / "stderr.txt";
        const std::string cmd = std::string("\"") + NVMUX_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                                err.string() + "\"";
        const int status = std::system(cmd.c_str());
        Run r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

private:
    static inline int counter_ = 0;
    fs::path dir_;
};

std::string shipped(const std::string& name) { return std::string(NVMUX_SOURCE_DIR) + "/configs/" + name; }

// Shipped config with some `key = value` lines replaced.
std::string patched(const std::string& name, const std::map<std::string, std::string>& changes) {
    std::istringstream is(slurp(shipped(name)));
    std::ostringstream os;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) {
            const auto it = changes.find(line.substr(0, eq));
            if (it != changes.end()) line = it->first + " = " + it->second;
        }
        os << line << '\n';
    }
    return os.str();
}

std::map<std::string, std::string> report_values(const std::string& text) {
    std::map<std::string, std::string> m;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find(" = ");
        if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return m;
}

std::vector<std::vector<double>> numeric_csv(const std::string& text) {
    std::vector<std::vector<double>> rows;
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

const std::map<std::string, std::string> kSmallScan{{"n_shots", "2000"}, {"pixels", "6"}, {"directory", "unused"}};

}  // namespace

TEST_CASE("cli: missing config exits 2 and names the path") {
    Sandbox box;
    const Run r = box.run("scan /nonexistent/nowhere.ini");
    CHECK(r.code == 2);
    CHECK(r.err.find("/nonexistent/nowhere.ini") != std::string::npos);
}

TEST_CASE("cli: usage errors exit 2") {
    Sandbox box;
    CHECK(box.run("").code == 2);
    CHECK(box.run("frobnicate").code == 2);
    CHECK(box.run("calibrate " + shipped("tip2_calibration.ini")).code == 2);
}

TEST_CASE("cli: unknown config key gives a line-anchored error") {
    Sandbox box;
    const fs::path cfg = box.write("bad.ini", "[run]\nseed = 1\n\n[probe]\ntheta1_degs = 41\n");
    const Run r = box.run("scan " + cfg.string());
    CHECK(r.code == 2);
    CHECK(r.err.find(cfg.string() + ":5") != std::string::npos);
    CHECK(r.err.find("theta1_degs") != std::string::npos);
}

TEST_CASE("cli: seed is mandatory") {
    Sandbox box;
    std::string text = patched("wire_covariance.ini", kSmallScan);
    text.replace(text.find("seed = "), std::string("seed = 20240611").size(), "");
    const fs::path cfg = box.write("noseed.ini", text);
    const Run r = box.run("scan " + cfg.string() + " --out-dir " + (box.dir() / "o").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("seed") != std::string::npos);
    CHECK(box.run("--seed 3 scan " + cfg.string() + " --out-dir " + (box.dir() / "o").string()).code == 2);
    const fs::path no_run = box.write("norun.ini", "[probe]\ntheta1_deg = 41\n");
    CHECK(box.run("--seed 3 odmr " + no_run.string()).code == 2);
}

TEST_CASE("cli: same seed gives byte-identical scan output") {
    Sandbox box;
    const fs::path cfg = box.write("scan.ini", patched("wire_covariance.ini", kSmallScan));
    const fs::path a = box.dir() / "a", b = box.dir() / "b", c = box.dir() / "c";
    REQUIRE(box.run("--seed 42 --dump-counts --out-dir " + a.string() + " scan " + cfg.string()).code == 0);
    REQUIRE(box.run("--seed 42 --dump-counts --threads 3 --out-dir " + b.string() + " scan " + cfg.string()).code == 0);
    REQUIRE(box.run("--seed 43 --out-dir " + c.string() + " scan " + cfg.string()).code == 0);
    const std::string first = slurp(a / "scan_result.csv");
    CHECK(!first.empty());
    CHECK(first == slurp(b / "scan_result.csv"));
    CHECK(first != slurp(c / "scan_result.csv"));
    for (int i = 0; i < 6; ++i) {
        const std::string name = "counts_matrix_000" + std::to_string(i) + ".csv";
        CAPTURE(name);
        CHECK(fs::exists(a / name));
        CHECK(slurp(a / name) == slurp(b / name));
    }
    CHECK(!fs::exists(c / "counts_matrix_0000.csv"));
    CHECK(numeric_csv(first).size() == 6);
}

TEST_CASE("cli: calibration closed loop from simulated edge scans") {
    Sandbox box;
    const fs::path out = box.dir() / "edges";
    REQUIRE(box.run("--out-dir " + out.string() + " simulate-edges " + shipped("tip2_truth.ini")).code == 0);
    const std::string xs = (out / "edge_scan_x.csv").string(), ys = (out / "edge_scan_y.csv").string();

    const Run r = box.run("--out-dir " + out.string() + " calibrate " + shipped("tip2_calibration.ini") +
                          " --x-scan " + xs + " --y-scan " + ys + " --bootstrap 0");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(out / "fit_residuals.csv"));
    const std::string report = slurp(out / "fit_report.txt");
    CHECK(report == r.out);
    const auto v = report_values(report);
    CHECK(std::abs(std::stod(v.at("theta1_deg")) - 41.0) < 2.0);
    CHECK(std::abs(std::stod(v.at("phi1_deg")) - 94.0) < 2.0);
    CHECK(std::abs(std::stod(v.at("dx_nm")) + 52.0) < 7.0);
    CHECK(std::abs(std::stod(v.at("dy_nm")) + 96.0) < 6.0);
    CHECK(std::abs(std::stod(v.at("dz_nm")) - 11.0) < 5.0);
    CHECK(std::abs(std::stod(v.at("z1_nm")) - 47.0) < 2.0);
    CHECK(std::abs(std::stod(v.at("z2_nm")) - 58.0) < 2.0);
    // No resamples: uncertainties are absent, not zero.
    CHECK(report.find("±") == std::string::npos);
}

TEST_CASE("cli: malformed scan CSV exits 2 naming the row") {
    Sandbox box;
    const fs::path good = box.write("x.csv", "position_nm,f1_minus_mhz,f1_plus_mhz,f2_minus_mhz,f2_plus_mhz\n"
                                             "0,2860,2880,2861,2879\n");
    const fs::path bad = box.write("y.csv", "position_nm,f1_minus_mhz,f1_plus_mhz,f2_minus_mhz,f2_plus_mhz\n"
                                            "0,2860,2880,2861,2879\n5,2860,oops,2861,2879\n");
    const Run r = box.run("--out-dir " + box.dir().string() + " calibrate " + shipped("tip2_calibration.ini") +
                          " --x-scan " + good.string() + " --y-scan " + bad.string());
    CHECK(r.code == 2);
    CHECK(r.err.find("row 3") != std::string::npos);
    CHECK(r.err.find(bad.string()) != std::string::npos);
}

TEST_CASE("cli: odmr spectrum grid and dips") {
    Sandbox box;
    const fs::path out = box.dir() / "odmr";
    const Run r = box.run("--out-dir " + out.string() + " odmr " + shipped("tip2_odmr.ini"));
    REQUIRE(r.code == 0);
    const auto rows = numeric_csv(slurp(out / "odmr_spectrum.csv"));
    REQUIRE(rows.size() == 681);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i][0] == 2700.0 + 0.5 * static_cast<double>(i));
    CHECK(rows.back()[0] == 3040.0);
    int minima = 0;
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        if (rows[i][1] < rows[i - 1][1] && rows[i][1] < rows[i + 1][1]) ++minima;
    }
    CHECK(minima == 4);
    CHECK(slurp(out / "odmr_transitions.csv").find("sensor,branch,center_mhz\n1,minus,") == 0);

    const fs::path zero = box.write("zero.ini", patched("tip2_odmr.ini", {{"bias_x_mt", "0"}, {"bias_y_mt", "0"},
                                                                          {"bias_z_mt", "0"}}));
    const Run z = box.run("--out-dir " + out.string() + " odmr " + zero.string());
    REQUIRE(z.code == 0);
    CHECK(z.out.find("resolved dips: 2") != std::string::npos);
}

TEST_CASE("cli: selftest passes") {
    Sandbox box;
    const Run r = box.run("selftest");
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("selftest catches a broken sign convention") {
    const auto flipped = [](const nvmux::CountMatrix& m) {
        auto p = nvmux::mean_phases(m);
        p.first.phi = -p.first.phi;
        p.second.phi = -p.second.phi;
        return p;
    };
    bool any_failed = false;
    for (const auto& c : nvmux::run_selftest(flipped, 1)) any_failed = any_failed || !c.passed;
    CHECK(any_failed);
}
