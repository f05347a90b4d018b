#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "slcd/serialize.hpp"

using namespace slcd;
using slcd::testing::truth;

namespace {

const std::filesystem::path& workdir() {
    static const std::filesystem::path dir = [] {
        auto d = std::filesystem::temp_directory_path() / "slcd_cli_tests";
        std::filesystem::remove_all(d);
        std::filesystem::create_directories(d);
        return d;
    }();
    return dir;
}

std::string at(const std::string& name) { return (workdir() / name).string(); }

int run(const std::string& args) {
    const std::string cmd = std::string(SLCD_CLI_PATH) + " " + args + " > " + at("stdout.txt") + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string output() {
    std::ifstream in(at("stdout.txt"));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_result(const std::string& name, const Matrix& d) {
    write_text_file(at(name), Json({{"format_version", kFormatVersion}, {"d_opt", to_json(StructuralMatrix(d))}}).dump());
}

}  // namespace

TEST_CASE("generate", "[cli]") {
    REQUIRE(run("generate --dataset 2 --m 1000 --seed 7 --out " + at("d2.csv")) == 0);
    CHECK(output().find("3 true links") != std::string::npos);
    const Dataset d2 = read_dataset(at("d2.csv"));
    CHECK(d2.n() == 4);
    CHECK(d2.m() == 1000);
    CHECK(read_json_file(at("d2.csv.json"))["true_links"] == 3);
    CHECK(d2.x == sample(builtin_spec(2), 1000, 7).x);

    REQUIRE(run("generate --dataset 5 --out " + at("d5.csv")) == 0);
    CHECK(read_dataset(at("d5.csv")).n() == 7);

    write_text_file(at("pair.json"), to_json(slcd::testing::two_variable_spec(0, 2.0)).dump());
    CHECK(run("generate --spec " + at("pair.json") + " --m 20 --out " + at("pair.csv")) == 0);
    CHECK(read_dataset(at("pair.csv")).n() == 2);

    CHECK(run("generate --dataset 2 --m 0 --out " + at("x.csv")) == 2);
    CHECK(run("generate --dataset 9 --out " + at("x.csv")) == 2);
    CHECK(run("generate --out " + at("x.csv")) == 2);
    CHECK(run("generate --dataset 2") == 2);
    CHECK(run("generate --spec " + at("nope.json") + " --out " + at("x.csv")) == 3);
    CHECK(run("frobnicate") == 2);
}

TEST_CASE("discover and evaluate", "[cli]") {
    REQUIRE(run("generate --dataset 2 --m 1000 --seed 7 --out " + at("e2.csv")) == 0);
    REQUIRE(run("discover --data " + at("e2.csv") + " --sigma 0.3 --lambda 5 --tau 2 --seed 3 --out " +
                at("r2.json")) == 0);
    const Matrix d = estimate_from_result_json(read_json_file(at("r2.json")));
    CHECK(extract_edges(d, 0.15) == true_edges(StructuralMatrix(truth(2))));

    REQUIRE(run("evaluate --result " + at("r2.json") + " --data " + at("e2.csv") + " --out " + at("m2.json")) == 0);
    const Json m = read_json_file(at("m2.json"));
    CHECK(m["precision"] == 1.0);
    CHECK(m["recall"] == 1.0);
    CHECK(m["correct_links"] == 3);
    CHECK(output().find("structure_error") != std::string::npos);

    write_result("perfect.json", truth(2));
    REQUIRE(run("evaluate --result " + at("perfect.json") + " --data " + at("e2.csv") + " --out " + at("p.json")) == 0);
    const Json p = read_json_file(at("p.json"));
    CHECK(p["reconstruction_error"] == 0.0);
    CHECK(p["structure_error"] == 0.0);
    CHECK(p["recall"] == 1.0);

    CHECK(run("evaluate --result " + at("perfect.json") + " --data " + at("e2.csv") + " --dataset 3") == 2);
    CHECK(run("evaluate --result " + at("missing.json") + " --data " + at("e2.csv")) == 3);
}

TEST_CASE("evaluate against built-in truths", "[cli]") {
    REQUIRE(run("generate --dataset 3 --out " + at("e3.csv")) == 0);
    write_result("zero.json", Matrix::Zero(5, 5));
    REQUIRE(run("evaluate --result " + at("zero.json") + " --data " + at("e3.csv") + " --dataset 3 --out " +
                at("z.json")) == 0);
    CHECK(read_json_file(at("z.json"))["recall"] == 0.0);

    Matrix printed4(6, 6);
    printed4 << 0.999, -0.009, 0, 0, 0, 0,
                0.016, 0.999, 0, 0, 0, 0,
                -0.0432, 0, 0.997, 0, 0, 0,
                0.987, 0, 0.3019, 0, 0, 0,
                2.048, 2.982, 0, 0, 0, 0,
                0, 1.995, 0.483, 0, 0, 0;
    write_result("t4.json", printed4);
    REQUIRE(run("generate --dataset 4 --out " + at("e4.csv")) == 0);
    REQUIRE(run("evaluate --result " + at("t4.json") + " --data " + at("e4.csv") + " --theta 0.15 --out " +
                at("t4m.json")) == 0);
    const Json t4 = read_json_file(at("t4m.json"));
    CHECK(t4["precision"] == 1.0);
    CHECK(t4["recall"] == 1.0);
    CHECK(t4["correct_links"] == 6);
}

TEST_CASE("discover is deterministic and handles one column", "[cli]") {
    REQUIRE(run("generate --dataset 3 --m 500 --seed 1 --out " + at("det.csv")) == 0);
    REQUIRE(run("discover --data " + at("det.csv") + " --restarts 1 --seed 17 --out " + at("a.json")) == 0);
    REQUIRE(run("discover --data " + at("det.csv") + " --restarts 1 --seed 17 --out " + at("b.json")) == 0);
    CHECK(strip_wall_clock(read_json_file(at("a.json"))).dump() ==
          strip_wall_clock(read_json_file(at("b.json"))).dump());

    write_text_file(at("one.csv"), "x1\n1.5\n-0.5\n2.25\n0.75\n-1\n");
    REQUIRE(run("discover --data " + at("one.csv") + " --restarts 2 --out " + at("one.json")) == 0);
    const Matrix d = estimate_from_result_json(read_json_file(at("one.json")));
    REQUIRE(d.rows() == 1);
    CHECK(std::abs(d(0, 0) - 1.0) < 0.05);
}

TEST_CASE("configuration precedence", "[cli]") {
    REQUIRE(run("generate --dataset 2 --m 300 --out " + at("cfg.csv")) == 0);
    write_text_file(at("cfg.json"), R"({"hyperparams": {"restarts": 2, "lambda": 4}, "controls": {"seed": 5}})");
    REQUIRE(run("discover --data " + at("cfg.csv") + " --config " + at("cfg.json") + " --restarts 3 --out " +
                at("cfg_r.json")) == 0);
    const Json r = read_json_file(at("cfg_r.json"));
    CHECK(r["hyperparams"]["restarts"] == 3);
    CHECK(r["hyperparams"]["lambda"] == 4.0);
    CHECK(r["hyperparams"]["sigma"] == 0.3);
    CHECK(r["controls"]["seed"] == 5);

    write_text_file(at("bad_cfg.json"), R"({"hyperparams": {"lamda": 4}})");
    CHECK(run("discover --data " + at("cfg.csv") + " --config " + at("bad_cfg.json") + " --out " + at("x.json")) == 3);
    CHECK(run("discover --data " + at("cfg.csv") + " --lambda -1 --out " + at("x.json")) == 2);
    CHECK(run("discover --data " + at("cfg.csv") + " --method newton --out " + at("x.json")) == 2);
}

TEST_CASE("numeric aborts leave a diagnostic", "[cli]") {
    REQUIRE(run("generate --dataset 1 --m 200 --out " + at("abort.csv")) == 0);
    write_text_file(at("abort_cfg.json"), R"({"controls": {"penalty_mu_init": 1e308, "penalty_growth": 1e10}})");
    CHECK(run("discover --data " + at("abort.csv") + " --config " + at("abort_cfg.json") + " --restarts 2 --out " +
              at("abort.json")) == 4);
    const Json j = read_json_file(at("abort.json"));
    CHECK(j.contains("error"));
    CHECK(j["restarts"].size() == 2);
}

TEST_CASE("sweep and repro entry points", "[cli]") {
    REQUIRE(run("sweep --dataset 2 --m 500 --sigmas 0.3 --lambdas 2,5 --restarts 3 --out " + at("sw.csv") +
                " --json " + at("sw.json")) == 0);
    std::ifstream in(at("sw.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "dataset,sigma,lambda,recon_err,struct_err,cov_err,precision,recall,correct_links,wall_ms");
    CHECK(read_json_file(at("sw.json"))["cells"].size() == 2);
    CHECK(run("sweep --dataset 2 --sigmas 0.3,0.3 --lambdas 5 --out " + at("sw2.csv")) == 2);
    CHECK(run("sweep --out " + at("sw3.csv")) == 2);
    CHECK(run("repro table9") == 2);
}
