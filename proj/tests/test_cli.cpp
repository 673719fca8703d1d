#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcflow/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "lcflow");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    const int code = lcflow::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = fs::temp_directory_path() / ("lcflow_cli_" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    std::string file(const std::string& name, const std::string& text) const {
        const fs::path p = path_ / name;
        std::ofstream(p) << text;
        return p.string();
    }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

const char* kSmallCascade = R"(
[grid]
s_min = -30
s_max = -1
n_nodes = 96

[background]
eta = 0.1
omega0_scale = 0
stilde = 0

[divisor.0]
kind = cusp

[divisor.1]
kind = conic
coefficient = 0.5
epsilon = 0.1

[flow]
t_end = 0.5
initial = pole
pole_c = 1.5

[cascade]
v_seq = 0.1, 0.05
epsj_seq = 0.1
epsk_seq = 0.1
u_seq = 0.1
l_seq = 2, 4
snapshot_times = 0.1, 0.5

[audit]
audits = maximality
)";

}  // namespace

TEST_CASE("run on the defaults stays at zero") {
    TempDir tmp;
    const std::string cfg = tmp.file("zero.ini", "[grid]\nn_nodes = 256\n[flow]\noutput_times = 0.5, 1\n");
    const Result r = invoke({"run", "--config", cfg, "--out", tmp.path().string()});
    REQUIRE(r.code == 0);
    const json s = load(tmp.path() / "summary.json");
    CHECK(std::abs(s["sup_u"].get<double>()) <= 1e-8);
    CHECK(std::abs(s["inf_u"].get<double>()) <= 1e-8);
    CHECK(s["t_final"] == 1.0);
    CHECK(s["reference_error"].is_null());
    CHECK(s["config_hash"].get<std::string>().size() == 16);
    for (const char* f : {"fields.csv", "rates.csv", "metric.csv", "diagnostics.csv", "config.ini"}) {
        CAPTURE(f);
        CHECK(fs::exists(tmp.path() / f));
    }
    std::istringstream fields(slurp(tmp.path() / "fields.csv"));
    std::string header;
    std::getline(fields, header);
    CHECK(header == "s,t=0,t=0.5,t=1");
    std::istringstream diag(slurp(tmp.path() / "diagnostics.csv"));
    std::getline(diag, header);
    CHECK(header == "t,sup_u,inf_u,sup_udot,inf_udot,min_metric");
}

TEST_CASE("runs are deterministic") {
    TempDir a, b;
    const std::vector<std::string> base{"run", "--preset", "pole-envelope", "--out"};
    auto args_a = base;
    args_a.push_back(a.path().string());
    auto args_b = base;
    args_b.push_back(b.path().string());
    REQUIRE(invoke(args_a).code == 0);
    REQUIRE(invoke(args_b).code == 0);
    for (const char* f : {"fields.csv", "rates.csv", "metric.csv", "diagnostics.csv"}) {
        CAPTURE(f);
        CHECK(slurp(a.path() / f) == slurp(b.path() / f));
    }
    CHECK(load(a.path() / "summary.json")["config_hash"] == load(b.path() / "summary.json")["config_hash"]);
}

TEST_CASE("config errors exit with 2") {
    TempDir tmp;
    const std::string bad = tmp.file("bad.ini", "[grid]\nn_nodes = lots\n");
    const Result r = invoke({"run", "--config", bad, "--out", tmp.path().string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("line 2") != std::string::npos);
    CHECK(r.err.find("grid.n_nodes") != std::string::npos);
    CHECK(invoke({"run", "--preset", "nope"}).code == 2);
    CHECK(invoke({"run", "--config", (tmp.path() / "absent.ini").string()}).code == 2);
    CHECK(invoke({"frobnicate"}).code == 2);
    CHECK(invoke({"run", "--preset", "cusp-ke", "--config", bad}).code == 2);
}

TEST_CASE("audit over a normalized run") {
    TempDir tmp;
    REQUIRE(invoke({"run", "--preset", "cusp-ke", "--out", tmp.path().string()}).code == 0);
    const json s = load(tmp.path() / "summary.json");
    CHECK(s["reference_error"].get<double>() <= 1e-2);
    REQUIRE(invoke({"audit", "--preset", "cusp-ke", "--out", tmp.path().string()}).code == 0);
    const json a = load(tmp.path() / "audits.json");
    REQUIRE(a.size() == 6);
    for (const auto& rep : a) {
        CAPTURE(rep.dump());
        CHECK(rep["verdict"] == "pass");
        CHECK(rep["config_hash"] == s["config_hash"]);
        CHECK(rep.contains("min_margin"));
        CHECK(rep.contains("tolerance"));
        CHECK(rep.contains("constants"));
    }
}

TEST_CASE("audit needs the run artifacts") {
    TempDir tmp;
    REQUIRE(invoke({"run", "--preset", "pole-envelope", "--out", tmp.path().string()}).code == 0);
    fs::remove(tmp.path() / "diagnostics.csv");
    const Result r = invoke({"audit", "--preset", "pole-envelope", "--out", tmp.path().string()});
    CHECK(r.code == 4);
    CHECK(r.err.find("diagnostics.csv") != std::string::npos);

    TempDir empty;
    CHECK(invoke({"audit", "--preset", "pole-envelope", "--out", empty.path().string()}).code == 4);
}

TEST_CASE("empty audit list gives an empty array") {
    TempDir tmp;
    const std::string cfg = tmp.file("c.ini", "[grid]\nn_nodes = 64\n[audit]\naudits =\n");
    REQUIRE(invoke({"run", "--config", cfg, "--out", tmp.path().string()}).code == 0);
    REQUIRE(invoke({"audit", "--config", cfg, "--out", tmp.path().string()}).code == 0);
    CHECK(load(tmp.path() / "audits.json").empty());
}

TEST_CASE("reference subcommand") {
    TempDir tmp;
    const std::string dir = tmp.path().string();
    REQUIRE(invoke({"reference", "--preset", "cusp-ke", "--kind", "flat", "--out", dir}).code == 0);
    json j = load(tmp.path() / "reference.json");
    CHECK(j["kind"] == "flat");
    CHECK(j["einstein_residual"].get<double>() <= 1e-10);

    REQUIRE(invoke({"reference", "--preset", "cusp-ke", "--nodes", "512", "--out", dir}).code == 0);
    const double coarse = load(tmp.path() / "reference.json")["einstein_residual"];
    REQUIRE(invoke({"reference", "--preset", "cusp-ke", "--nodes", "1024", "--out", dir}).code == 0);
    const double fine = load(tmp.path() / "reference.json")["einstein_residual"];
    CHECK(coarse / fine >= 3.0);

    std::istringstream csv(slurp(tmp.path() / "reference.csv"));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "s,g,ricci");

    CHECK(invoke({"reference", "--preset", "cone-ke", "--kind", "cone_ke", "--beta", "1.5", "--out", dir}).code ==
          2);
}

TEST_CASE("cascade with a single stage per axis reports no orderings") {
    TempDir tmp;
    std::string text = kSmallCascade;
    text.replace(text.find("v_seq = 0.1, 0.05"), 17, "v_seq = 0.1");
    text.replace(text.find("l_seq = 2, 4"), 12, "l_seq = 2");
    const std::string cfg = tmp.file("single.ini", text);
    REQUIRE(invoke({"cascade", "--config", cfg, "--out", tmp.path().string()}).code == 0);
    const json m = load(tmp.path() / "monotonicity_margins.json");
    CHECK(m["records"].empty());
    CHECK_FALSE(m["notes"].empty());
}

TEST_CASE("cascade orderings, inversion and maximality") {
    TempDir tmp;
    const std::string cfg = tmp.file("c.ini", kSmallCascade);
    REQUIRE(invoke({"cascade", "--config", cfg, "--out", tmp.path().string(), "--threads", "2"}).code == 0);
    json m = load(tmp.path() / "monotonicity_margins.json");
    REQUIRE(m["records"].size() == 2);
    for (const auto& rec : m["records"]) {
        CAPTURE(rec.dump());
        CHECK(rec["verdict"] == "pass");
    }
    CHECK(fs::exists(tmp.path() / "stage_v.csv"));
    CHECK(fs::exists(tmp.path() / "stage_l.csv"));
    CHECK(fs::exists(tmp.path() / "partner_fields.csv"));
    CHECK(load(tmp.path() / "cascade_audits.json").size() == 2);

    REQUIRE(invoke({"audit", "--config", cfg, "--out", tmp.path().string()}).code == 0);
    const json a = load(tmp.path() / "audits.json");
    REQUIRE(a.size() == 1);
    CHECK(a[0]["name"] == "maximality");
    CHECK(a[0]["verdict"] == "pass");

    TempDir inv;
    std::string text = kSmallCascade;
    text.replace(text.find("v_seq = 0.1, 0.05"), 17, "v_seq = 0.05, 0.1");
    const std::string cfg_inv = inv.file("inv.ini", text);
    REQUIRE(invoke({"cascade", "--config", cfg_inv, "--out", inv.path().string()}).code == 0);
    m = load(inv.path() / "monotonicity_margins.json");
    bool saw_v = false;
    for (const auto& rec : m["records"]) {
        if (rec["ordering"] != "v") continue;
        saw_v = true;
        CHECK(rec["verdict"] == "fail");
        CHECK(rec["min_margin"].get<double>() < 0.0);
    }
    CHECK(saw_v);
}
