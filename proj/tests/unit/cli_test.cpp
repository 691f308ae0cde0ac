#include "lnn/lnn.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lnn;

namespace {

namespace fs = std::filesystem;

struct CmdResult {
    int code = -1;
    std::string out;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ("lnn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string file(const std::string& name, const std::string& text) const
    {
        write_text(path(name), text);
        return path(name);
    }

    // Runs the binary; stdout is captured, stderr is kept in a side file.
    CmdResult run(const std::string& args) const
    {
        const std::string cmd = std::string("\"") + LNN_CLI_PATH + "\" " + args + " 2>" + path("stderr.txt");
        CmdResult r;
        FILE* pipe = popen(cmd.c_str(), "r");
        if (!pipe)
            return r;
        char buf[4096];
        std::size_t n;
        while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
            r.out.append(buf, n);
        const int status = pclose(pipe);
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        return r;
    }

    std::string stderr_text() const { return read_text(path("stderr.txt")); }

    std::string training_csv(SimModel model, std::size_t T, int d, std::uint64_t seed) const
    {
        const SimData sim = gen_dataset(model, T, d, 3.0, seed);
        std::ostringstream os;
        os.precision(17);
        os << "y";
        for (int k = 0; k < d; ++k)
            os << ",x" << (k + 1);
        os << '\n';
        for (std::size_t t = 0; t < sim.data.T(); ++t) {
            os << sim.data.y(static_cast<Eigen::Index>(t));
            for (int k = 0; k < d; ++k)
                os << ',' << sim.data.X(static_cast<Eigen::Index>(t), k);
            os << '\n';
        }
        return file("train.csv", os.str());
    }

    fs::path dir_;
};

std::vector<std::vector<std::string>> parse_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

} // namespace

TEST_F(Cli, InspectArchReportsNeuronCount)
{
    const auto cfg = file("arch.json", R"({"d":2,"q":3,"bandwidth":{"mode":"cubes","value":2}})");
    const CmdResult r = run("--config " + cfg + " inspect-arch");
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(stderr_text().find("neurons: 160"), std::string::npos);
    const Json j = Json::parse(r.out);
    EXPECT_EQ(j.at("architecture").at("neurons").get<int>(), 160);
    EXPECT_EQ(j.at("d_q").get<int>(), 10);
}

TEST_F(Cli, FitThenPredictRoundTrip)
{
    const auto data = training_csv(SimModel::reg, 800, 2, 61);
    const CmdResult fit = run("--out " + path("model.json") + " fit-reg --data " + data);
    ASSERT_EQ(fit.code, 0) << stderr_text();
    const CmdResult pred = run("predict --model " + path("model.json") + " --points " + data);
    ASSERT_EQ(pred.code, 0) << stderr_text();
    const auto rows = parse_csv(pred.out);
    ASSERT_EQ(rows.size(), 801u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"x1", "x2", "ghat", "lo", "hi", "flag"}));

    // predictions equal the in-process fit bit for bit
    const Dataset ds = load_csv(data, "y", {"x1", "x2"}, false);
    LnnConfig cfg;
    cfg.d = 2;
    const FittedRegression model = fit_regression(ds, build_architecture_for_sample(cfg, ds.T()));
    for (std::size_t t = 1; t < rows.size(); ++t) {
        ASSERT_EQ(rows[t][5], "ok");
        const double g = std::stod(rows[t][2]);
        EXPECT_TRUE(std::isfinite(g));
        EXPECT_EQ(g, predict(model, ds.x(t - 1)).value);
    }
}

TEST_F(Cli, PredictWithDataAddsBands)
{
    const auto data = training_csv(SimModel::reg, 600, 1, 62);
    ASSERT_EQ(run("--out " + path("m.json") + " fit-reg --data " + data).code, 0);
    const auto pts = file("pts.csv", "x1\n-2\n0\n2.5\n4\n");
    const auto cfg = file("c.json", R"({"R":50})");
    const CmdResult r = run("--config " + cfg + " --seed 3 predict --model " + path("m.json") + " --points " + pts +
                      " --data " + data);
    ASSERT_EQ(r.code, 0) << stderr_text();
    const auto rows = parse_csv(r.out);
    ASSERT_EQ(rows.size(), 5u);
    for (std::size_t i = 1; i <= 3; ++i) {
        ASSERT_EQ(rows[i].size(), 5u);
        EXPECT_TRUE(std::isfinite(std::stod(rows[i][1])));
        EXPECT_LT(std::stod(rows[i][2]), std::stod(rows[i][3]));
        EXPECT_EQ(rows[i][4], "ok");
    }
    EXPECT_EQ(rows[4].back(), "outside");

    const CmdResult local = run("predict --mode local --model " + path("m.json") + " --points " + pts + " --data " + data);
    ASSERT_EQ(local.code, 0) << stderr_text();
    const auto lrows = parse_csv(local.out);
    ASSERT_EQ(lrows.size(), 5u);
    EXPECT_EQ(lrows[4].back(), "outside");
}

TEST_F(Cli, BinaryFitPredictsProbabilities)
{
    const auto data = training_csv(SimModel::bin, 1600, 2, 63);
    ASSERT_EQ(run("--out " + path("b.json") + " fit-bin --data " + data).code, 0) << stderr_text();
    const auto pts = file("pts.csv", "x1,x2\n0,0\n-1,1\n");
    const CmdResult r = run("predict --model " + path("b.json") + " --points " + pts);
    ASSERT_EQ(r.code, 0) << stderr_text();
    const auto rows = parse_csv(r.out);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"x1", "x2", "ghat", "prob", "lo", "hi", "flag"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].back() != "ok")
            continue;
        const double p = std::stod(rows[i][3]);
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST_F(Cli, SimulateIsDeterministic)
{
    const auto cfg = file("t1.json", R"({"model":"reg","T":[300],"d":2,"q":3,"n":3,"R":20,"L":5})");
    const CmdResult a = run("--config " + cfg + " --seed 7 --out " + path("a.csv") + " simulate");
    const CmdResult b = run("--config " + cfg + " --seed 7 --threads 2 --out " + path("b.csv") + " simulate");
    ASSERT_EQ(a.code, 0) << stderr_text();
    ASSERT_EQ(b.code, 0);
    EXPECT_EQ(read_text(path("a.csv")), read_text(path("b.csv")));
    const auto rows = parse_csv(read_text(path("a.csv")));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][0], "reg");
    const CmdResult c = run("--config " + cfg + " --seed 8 simulate");
    EXPECT_NE(c.out, read_text(path("a.csv")));
}

TEST_F(Cli, BootstrapAndFitLocal)
{
    const auto data = training_csv(SimModel::reg, 500, 1, 64);
    const auto cfg = file("c.json", R"({"R":30,"L":7})");
    const CmdResult b = run("--config " + cfg + " bootstrap --data " + data);
    ASSERT_EQ(b.code, 0) << stderr_text();
    EXPECT_EQ(parse_csv(b.out).size(), 8u);
    const auto pts = file("p.csv", "x1\n0.5\n");
    const CmdResult l = run("fit-local --data " + data + " --points " + pts + " --half-width 0.75");
    ASSERT_EQ(l.code, 0) << stderr_text();
    const auto rows = parse_csv(l.out);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0][1], "ghat");
}

TEST_F(Cli, ExitCodes)
{
    EXPECT_EQ(run("no-such-command").code, 1);
    EXPECT_EQ(run("fit-reg").code, 1); // --data missing
    const auto bad_cfg = file("bad.json", R"({"q":0})");
    const auto data = training_csv(SimModel::reg, 100, 1, 65);
    EXPECT_EQ(run("--config " + bad_cfg + " fit-reg --data " + data).code, 1);
    EXPECT_EQ(run("--config " + file("broken.json", "{oops") + " inspect-arch --T 10").code, 1);
    EXPECT_EQ(run("fit-reg --data " + path("missing.csv")).code, 2);
    EXPECT_EQ(run("fit-reg --data " + data + " --y nope").code, 2);
    EXPECT_EQ(run("fit-reg --data " + file("text.csv", "y,x\n1,abc\n")).code, 2);
    EXPECT_EQ(run("fit-bin --data " + data).code, 2); // responses are not binary
    EXPECT_EQ(run("fit-reg --data " + file("far.csv", "y,x\n1,10\n2,11\n")).code, 2);
}
