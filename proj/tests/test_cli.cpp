#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "charc/cli.hpp"
#include "charc/learning.hpp"
#include "charc/quality.hpp"
#include "charc/records.hpp"
#include "charc/tasks.hpp"

using namespace charc;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path fresh_dir(const std::string& name)
{
    const auto d = fs::temp_directory_path() / ("charc_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> small_explore(const fs::path& out, const std::string& extra_seed = "3")
{
    return {"explore", "--nodes", "6", "--pop", "12", "--gens", "30", "--set", "search.deme=4", "--set", "search.k=5",
            "--set", "search.rho_update_interval=10", "--seed", extra_seed, "--out", out.string()};
}

std::size_t count_lines(const std::string& s)
{
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("help and usage errors")
{
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"explore", "--help"}).code == 0);
    CHECK(cli({}).code == 2);
    CHECK(cli({"explore"}).code == 2); // --out is required
    CHECK(cli({"explore", "--out", "x", "--algo", "hill"}).code == 2);
}

TEST_CASE("explore: zero generations keeps only the initial population")
{
    const auto d = fresh_dir("gens0");
    auto args = small_explore(d);
    args[6] = "0";
    REQUIRE(cli(args).code == 0);
    const auto db = read_database(d / "db_run0.ndjson");
    CHECK(db.records.size() == 12);
    for (const auto& r : db.records) CHECK(r.generation == 0);
    CHECK(db.header.manifest == "manifest_explore.json");
    CHECK(fs::exists(d / "manifest_explore.json"));
}

TEST_CASE("explore: invalid config fails before any compute")
{
    const auto d = fresh_dir("badkey");
    auto args = small_explore(d);
    args.push_back("--set");
    args.push_back("search.nonsense=1");
    CHECK(cli(args).code == 2);
    CHECK_FALSE(fs::exists(d / "db_run0.ndjson"));
    CHECK_FALSE(fs::exists(d / "manifest_explore.json"));
}

TEST_CASE("explore: reruns, parallel runs and resumed runs are byte-identical")
{
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b"), c = fresh_dir("det_c"), r = fresh_dir("det_r");
    auto args_a = small_explore(a);
    args_a.insert(args_a.end(), {"--runs", "2"});
    auto args_b = small_explore(b);
    args_b.insert(args_b.end(), {"--runs", "2", "--jobs", "2"});
    REQUIRE(cli(args_a).code == 0);
    REQUIRE(cli(args_b).code == 0);
    REQUIRE(cli(args_a).code == 0); // rerun in place
    for (const char* f : {"db_run0.ndjson", "db_run1.ndjson", "archive_run0.ndjson", "archive_run1.ndjson"})
        CHECK(slurp(a / f) == slurp(b / f));
    CHECK(slurp(a / "db_run0.ndjson") != slurp(a / "db_run1.ndjson"));

    // Stop at 17 generations, then resume to 30.
    auto first = small_explore(r);
    first[6] = "17";
    REQUIRE(cli(first).code == 0);
    auto second = small_explore(r);
    second.push_back("--resume");
    REQUIRE(cli(second).code == 0);
    auto whole = small_explore(c);
    REQUIRE(cli(whole).code == 0);
    CHECK(slurp(r / "db_run0.ndjson") == slurp(c / "db_run0.ndjson"));
    CHECK(slurp(r / "archive_run0.ndjson") == slurp(c / "archive_run0.ndjson"));
}

TEST_CASE("explore: random search database matches the evaluation budget")
{
    const auto d = fresh_dir("random");
    auto args = small_explore(d);
    args.insert(args.end(), {"--algo", "random"});
    REQUIRE(cli(args).code == 0);
    const auto db = read_database(d / "db_run0.ndjson");
    CHECK(db.records.size() == 42);
    CHECK(db.header.algo == "random");
    CHECK(db.records.back().generation == 30);
}

TEST_CASE("quality: self comparison, module agreement, voxel effect")
{
    const auto small = fresh_dir("q_small"), large = fresh_dir("q_large"), out = fresh_dir("q_out");
    REQUIRE(cli(small_explore(small)).code == 0);
    auto big = small_explore(large);
    big[2] = "20";
    REQUIRE(cli(big).code == 0);
    const auto sdb = small / "db_run0.ndjson", ldb = large / "db_run0.ndjson";

    const auto self = cli({"quality", "--db", sdb.string(), "--ref", sdb.string()});
    REQUIRE(self.code == 0);
    CHECK(self.out.find("ratio (mean test / mean reference) 1.000000") != std::string::npos);

    const auto rep = cli({"quality", "--db", sdb.string(), "--ref", ldb.string(), "--voxel", "5", "--out", out.string()});
    REQUIRE(rep.code == 0);
    const auto s = read_database(sdb).behaviours(), l = read_database(ldb).behaviours();
    const auto expected = compare({s}, {l}, VoxelSize::cube(5));
    CHECK(rep.out.find("coverage " + std::to_string(expected.test.per_run[0]) + "\n") != std::string::npos);
    CHECK(rep.out.find("coverage " + std::to_string(expected.reference.per_run[0]) + "\n") != std::string::npos);
    const auto csv = slurp(out / "coverage_curves.csv");
    CHECK(csv.find("generation,coverage,run_id\n") != std::string::npos);
    CHECK(csv.find(",test:0\n") != std::string::npos);
    CHECK(csv.find(",reference:0\n") != std::string::npos);

    // Fine voxels inflate the smaller substrate's standing relative to coarse ones.
    const auto fine = compare({s}, {l}, VoxelSize::cube(1));
    const auto coarse = compare({s}, {l}, VoxelSize::cube(10));
    CHECK(fine.ratio > coarse.ratio);
    const auto fine_cli = cli({"quality", "--db", sdb.string(), "--ref", ldb.string(), "--voxel", "1"});
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", fine.ratio);
    CHECK(fine_cli.out.find(buf) != std::string::npos);

    CHECK(cli({"quality", "--db", (small / "missing.ndjson").string()}).code == 3);
    CHECK(cli({"quality", "--db", sdb.string(), "--voxel", "0"}).code == 2);
}

TEST_CASE("eval-tasks and predict")
{
    const auto d = fresh_dir("eval"), e = fresh_dir("eval_out"), p = fresh_dir("pred_out"), p2 = fresh_dir("pred_out2");
    REQUIRE(cli(small_explore(d)).code == 0);
    const auto db = d / "db_run0.ndjson";

    SUBCASE("sample zero writes an empty pair file")
    {
        REQUIRE(cli({"eval-tasks", "--db", db.string(), "--task", "narma10", "--sample", "0", "--out", e.string()}).code == 0);
        CHECK(read_pairs(e / "pairs_narma10.csv").empty());
    }

    SUBCASE("task ids")
    {
        const auto laser = fs::temp_directory_path() / "charc_cli_laser.txt";
        {
            std::ofstream os(laser);
            for (int i = 0; i < 1200; ++i) os << 100 + 60 * std::sin(0.3 * i) * std::cos(0.011 * i) << "\n";
        }
        for (const char* t : {"narma10", "narma30", "laser", "nce"})
            CHECK(cli({"eval-tasks", "--db", db.string(), "--task", t, "--sample", "2", "--laser", laser.string(),
                       "--set", "tasks.length=1200", "--out", e.string()})
                      .code == 0);
        CHECK(cli({"eval-tasks", "--db", db.string(), "--task", "narma20", "--out", e.string()}).code == 2);
        CHECK(cli({"eval-tasks", "--db", db.string(), "--task", "laser", "--laser", "/nonexistent/laser.txt", "--out",
                   e.string()})
                  .code == 3);
    }

    SUBCASE("NMSE values match direct evaluation; predict agrees with the learning module")
    {
        REQUIRE(cli({"eval-tasks", "--db", db.string(), "--task", "narma10", "--sample", "30", "--set", "tasks.length=1500",
                     "--out", e.string()})
                    .code == 0);
        const auto rows = read_pairs(e / "pairs_narma10.csv");
        REQUIRE(rows.size() == 30);
        const auto database = read_database(db);
        auto spec = SubstrateSpec::esn(6);
        const auto sub = make_substrate(spec);
        auto ds = gen_narma(10, 1500, 7);
        std::size_t matched = 0;
        for (const auto& row : rows)
            for (const auto& rec : database.records)
                if (rec.generation == row.generation && rec.behaviour == row.behaviour) {
                    CHECK(evaluate_task(*sub, rec.genotype, ds, 50).nmse == row.nmse);
                    ++matched;
                    break;
                }
        CHECK(matched == 30);

        const auto pairs = (e / "pairs_narma10.csv").string();
        const auto rep = cli({"predict", "--train-pairs", pairs, "--test-pairs", pairs, "--threshold", "none",
                              "--threshold", "0.9", "--set", "learning.ensemble=3", "--out", p.string()});
        REQUIRE(rep.code == 0);
        CHECK(rep.out.find("threshold,count,train,test,mean_rmse,best_rmse,spearman_r,spearman_p") != std::string::npos);
        CHECK(rep.out.find("threshold,count,transfer_rmse,best_self_rmse,delta,extrapolated") != std::string::npos);
        CHECK(rep.out.find(",0.000000,") != std::string::npos);

        TrainSpec spec_none;
        spec_none.ensemble = 3;
        const auto res = fit_ensemble(to_samples(rows), spec_none);
        char buf[128];
        std::snprintf(buf, sizeof buf, "none,30,21,9,%.6f,%.6f,", res.mean_test_error, res.test_error[res.best]);
        CHECK(rep.out.find(buf) != std::string::npos);
        std::snprintf(buf, sizeof buf, "none,9,%.6f,%.6f,0.000000,", res.test_error[res.best], res.test_error[res.best]);
        CHECK(rep.out.find(buf) != std::string::npos);

        const auto again = cli({"predict", "--train-pairs", pairs, "--test-pairs", pairs, "--threshold", "none",
                                "--threshold", "0.9", "--set", "learning.ensemble=3", "--out", p2.string()});
        REQUIRE(again.code == 0);
        for (const char* f : {"predict_report.txt", "predictions.csv", "models.json"}) CHECK(slurp(p / f) == slurp(p2 / f));
        CHECK(count_lines(slurp(p / "predictions.csv")) > 2);

        CHECK(cli({"predict", "--train-pairs", (e / "absent.csv").string()}).code == 3);
        CHECK(cli({"predict", "--train-pairs", pairs, "--threshold", "lots"}).code == 2);
    }

    SUBCASE("undefined NMSE is a numerical failure")
    {
        const auto laser = fs::temp_directory_path() / "charc_cli_flat_laser.txt";
        {
            std::ofstream os(laser);
            os << "0\n";
            for (int i = 0; i < 400; ++i) os << "1\n";
        }
        CHECK(cli({"eval-tasks", "--db", db.string(), "--task", "laser", "--laser", laser.string(), "--sample", "1",
                   "--out", e.string()})
                  .code == 4);
    }
}

TEST_CASE("gen-task exports CSV")
{
    const auto r = cli({"gen-task", "--task", "nce", "--length", "100"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("t,u,y,split\n", 0) == 0);
    CHECK(count_lines(r.out) == 92);
}

TEST_CASE("installed binary reports exit codes")
{
    const char* tool = std::getenv("CHARC_TOOL");
    if (!tool) {
        MESSAGE("CHARC_TOOL not set; skipping process-level checks");
        return;
    }
    const std::string t = tool;
    auto code = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(s);
    };
    CHECK(code(t + " --help") == 0);
    CHECK(code(t + " explore --out /tmp/charc_cli_proc --set nope.nope=1") == 2);
    CHECK(code(t + " quality --db /nonexistent.ndjson") == 3);
}
