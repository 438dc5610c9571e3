#include <gtest/gtest.h>

#include "cli_support.hpp"
#include "support.hpp"

using namespace pfdr;
using namespace pfdr::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch()
{
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    const auto dir = fs::temp_directory_path() / (std::string("pfdr_cli_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string eeg_instance(const fs::path& dir)
{
    const auto inst = dir / "inst";
    const auto r = run_cli("synth --family eeg --seed 3 --vertices 30 --observations 12 --support 5 --out " +
            inst.string(), dir);
    EXPECT_EQ(r.status, 0) << r.output;
    return inst.string();
}

struct LogRow {
    double iter, objective, rel_evol;
};

std::vector<LogRow> read_log(const fs::path& path)
{
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line.rfind("iter,time_s,objective,rel_evol,max_evol,fp_residual", 0), 0u) << line;
    std::vector<LogRow> rows;
    while (std::getline(in, line)) {
        const auto f = split(line, ',');
        rows.push_back({std::stod(f[0]), std::stod(f[2]), std::stod(f[3])});
    }
    return rows;
}

} // namespace

TEST(Cli, SolveReachesStoppingLevel)
{
    const auto dir = scratch();
    const auto inst = eeg_instance(dir);
    const auto r = run_cli("solve --instance " + inst + " --solver pfdr --stop rel-evol=1e-6 --max-iters 100000 --out " +
            (dir / "run").string(), dir);
    ASSERT_EQ(r.status, 0) << r.output;
    const auto rows = read_log(dir / "run" / "log.csv");
    ASSERT_GE(rows.size(), 2u);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].iter, rows[i - 1].iter);
    EXPECT_LT(rows.back().rel_evol, 1e-6);
    for (double x : io::read_vector(dir / "run" / "solution.txt")) EXPECT_GE(x, 0.0);
    EXPECT_NE(r.output.find("iterations "), std::string::npos);
}

TEST(Cli, EverySolverRunsOnBothFamilies)
{
    const auto dir = scratch();
    const auto eeg = eeg_instance(dir);
    const auto lab = (dir / "lab").string();
    ASSERT_EQ(run_cli("synth --family labeling --seed 2 --vertices 16 --K 3 --out " + lab, dir).status, 0);
    for (const std::string solver : {"pfdr", "pgfb", "ppd"}) {
        const auto r = run_cli("solve --instance " + eeg + " --solver " + solver + " --stop iters=20 --out " +
                (dir / solver).string(), dir);
        EXPECT_EQ(r.status, 0) << solver << ": " << r.output;
    }
    for (const std::string solver : {"pfdr", "ppd"}) {
        const auto r = run_cli("solve --instance " + lab + " --solver " + solver + " --stop iters=20 --out " +
                (dir / ("lab_" + solver)).string(), dir);
        EXPECT_EQ(r.status, 0) << solver << ": " << r.output;
    }
}

TEST(Cli, RelaxationAboveBoundIsHypothesisViolation)
{
    const auto dir = scratch();
    const auto inst = eeg_instance(dir);
    const auto r = run_cli("solve --instance " + inst + " --rho 1.99 --stop iters=5 --out " + (dir / "run").string(), dir);
    EXPECT_EQ(r.status, 3) << r.output;
    EXPECT_NE(r.output.find("relaxation range"), std::string::npos) << r.output;
}

TEST(Cli, MalformedInputNamesTheLine)
{
    const auto dir = scratch();
    const auto inst = eeg_instance(dir);
    std::ofstream(fs::path(inst) / "y.txt", std::ios::app) << "not-a-number\n";
    const auto r = run_cli("solve --instance " + inst + " --stop iters=5 --out " + (dir / "run").string(), dir);
    EXPECT_EQ(r.status, 2) << r.output;
    EXPECT_NE(r.output.find("y.txt line 13"), std::string::npos) << r.output;

    EXPECT_EQ(run_cli("solve --instance " + (dir / "nowhere").string(), dir).status, 2);
    EXPECT_EQ(run_cli("solve --instance " + inst + " --no-such-flag 1", dir).status, 2);
    EXPECT_EQ(run_cli("solve --instance " + inst + " --stop sometimes=3", dir).status, 2);
    EXPECT_EQ(run_cli("solve --instance " + inst + " --gamma-mode loose", dir).status, 2);
}

TEST(Cli, RepeatedRunsAreIdentical)
{
    const auto dir = scratch();
    const auto inst = eeg_instance(dir);
    const std::string common = "solve --instance " + inst + " --stop iters=200 --inject-errors 0.1,2 --seed 9 --out ";
    ASSERT_EQ(run_cli(common + (dir / "a").string(), dir).status, 0);
    ASSERT_EQ(run_cli(common + (dir / "b").string(), dir).status, 0);
    EXPECT_EQ(slurp(dir / "a" / "solution.txt"), slurp(dir / "b" / "solution.txt"));
    EXPECT_EQ(drop_column(slurp(dir / "a" / "log.csv"), "time_s"), drop_column(slurp(dir / "b" / "log.csv"), "time_s"));
}

TEST(Cli, ThreadCountDoesNotChangeResults)
{
    const auto dir = scratch();
    const auto inst = eeg_instance(dir);
    const std::string common = "solve --instance " + inst + " --stop iters=300 --out ";
    ASSERT_EQ(run_cli(common + (dir / "t1").string() + " --threads 1", dir).status, 0);
    ASSERT_EQ(run_cli(common + (dir / "t4").string() + " --threads 4", dir).status, 0);
    EXPECT_EQ(slurp(dir / "t1" / "solution.txt"), slurp(dir / "t4" / "solution.txt"));
    EXPECT_EQ(drop_column(slurp(dir / "t1" / "log.csv"), "time_s"),
        drop_column(slurp(dir / "t4" / "log.csv"), "time_s"));
}

TEST(Cli, BenchWritesGapColumns)
{
    const auto dir = scratch();
    const auto inst = eeg_instance(dir);
    const auto out = dir / "bench";
    const auto r = run_cli("bench --instance " + inst + " --ref-iters 3000 --stop rel-evol=1e-3 --stop rel-evol=1e-4 --out " +
            out.string(), dir);
    ASSERT_EQ(r.status, 0) << r.output;
    for (const std::string solver : {"pfdr", "pgfb", "ppd"}) {
        const auto text = slurp(out / (solver + ".csv"));
        EXPECT_NE(text.substr(0, text.find('\n')).find("F_minus_Finf"), std::string::npos) << solver;
    }
    std::ifstream summary(out / "summary.csv");
    std::string line;
    std::getline(summary, line);
    EXPECT_EQ(line, "solver,stop,iterations,time_s,objective,F_minus_Finf,dice,dice_a,infeasible_iterates,status");
    int rows = 0;
    while (std::getline(summary, line)) {
        const auto f = split(line, ',');
        ASSERT_EQ(f.size(), 10u) << line;
        EXPECT_EQ(f[9], "ok");
        // PGFB averages may leave the nonnegative orthant, PFDR iterates never do
        if (f[0] == "pfdr") {
            EXPECT_EQ(f[8], "0") << line;
        }
        ++rows;
    }
    EXPECT_EQ(rows, 6);
    EXPECT_NE(r.output.find("F_inf "), std::string::npos);
}

TEST(Cli, OracleCheckExitCodes)
{
    const auto dir = scratch();
    const auto clean = run_cli("oracle-check", dir);
    EXPECT_EQ(clean.status, 0) << clean.output;
    EXPECT_EQ(clean.output.find("FAIL"), std::string::npos) << clean.output;
    const auto bad = run_cli("oracle-check --perturb 1e-3", dir);
    EXPECT_EQ(bad.status, 4) << bad.output;
    EXPECT_NE(bad.output.find("FAIL prox-grid/soft_threshold"), std::string::npos) << bad.output;
}

TEST(Cli, ConfigFileWithExplicitOverride)
{
    const auto dir = scratch();
    const auto inst = eeg_instance(dir);
    std::ofstream(dir / "run.cfg") << "# short run\nmax-iters = 7\nstop = rel-evol=1e-14\n";
    const std::string common = "solve --config " + (dir / "run.cfg").string() + " --instance " + inst + " --out ";
    ASSERT_EQ(run_cli(common + (dir / "a").string(), dir).status, 0);
    EXPECT_EQ(read_log(dir / "a" / "log.csv").back().iter, 7.0);
    ASSERT_EQ(run_cli(common + (dir / "b").string() + " --max-iters 3", dir).status, 0);
    EXPECT_EQ(read_log(dir / "b" / "log.csv").back().iter, 3.0);

    std::ofstream(dir / "bad.cfg") << "max-iters 7\n";
    const auto r = run_cli("solve --config " + (dir / "bad.cfg").string() + " --instance " + inst, dir);
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.output.find("bad.cfg line 1"), std::string::npos) << r.output;
}
