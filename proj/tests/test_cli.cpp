#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "coexist/cli/commands.hpp"

using namespace coexist;
using namespace coexist::cli;
namespace fs = std::filesystem;

namespace {

const double pi2 = M_PI * M_PI;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("coexist_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) { return parse_csv(slurp(p)); }

nlohmann::json schema_doc() {
    std::ifstream in(COEXIST_SCHEMA_PATH);
    return nlohmann::json::parse(in);
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string("\"") + COEXIST_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(ConfigValues, Lambda1Expressions) {
    EXPECT_DOUBLE_EQ(parse_value("3.5", pi2, "t"), 3.5);
    EXPECT_DOUBLE_EQ(parse_value(" -1 ", pi2, "t"), -1.0);
    EXPECT_DOUBLE_EQ(parse_value("lambda1", pi2, "t"), pi2);
    EXPECT_DOUBLE_EQ(parse_value("lambda1+2", pi2, "t"), pi2 + 2.0);
    EXPECT_DOUBLE_EQ(parse_value("lambda1 - 2", pi2, "t"), pi2 - 2.0);
    EXPECT_DOUBLE_EQ(parse_value("6*lambda1", pi2, "t"), 6.0 * pi2);
    EXPECT_DOUBLE_EQ(parse_value("0.5*lambda1+1", pi2, "t"), 0.5 * pi2 + 1.0);
    for (const char* bad : {"", "abc", "3x", "lambda1*2", "2lambda1", "lambda1+", "nan"}) {
        try {
            parse_value(bad, pi2, "t");
            ADD_FAILURE() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ConfigError) << bad;
        }
    }
}

TEST(ConfigFile, RejectsUnknownKeysAndSections) {
    auto kind = [](const std::string& text) {
        try {
            Config::from_string(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::InvalidArgument;
    };
    EXPECT_EQ(kind("[grid]\nnn = 3\n"), ErrorKind::ConfigError);
    EXPECT_EQ(kind("[bogus]\nx = 1\n"), ErrorKind::ConfigError);
    EXPECT_EQ(kind("[grid\nn = 3\n"), ErrorKind::ConfigError);
    EXPECT_EQ(kind("[grid]\nn = 3\nn = 4\n"), ErrorKind::ConfigError);
}

TEST(ConfigFile, TypedAccess) {
    Config c = Config::from_string("[grid]\nn = 49\nlength = 2\n[region]\nprobe_proven_empty = no\nlambda_count = x\n");
    EXPECT_EQ(c.grid().n_interior(), 49u);
    EXPECT_DOUBLE_EQ(c.lambda1(), pi2 / 4.0);
    EXPECT_FALSE(c.boolean("region", "probe_proven_empty", true));
    EXPECT_THROW(c.integer("region", "lambda_count", 3), Error);
    EXPECT_EQ(c.integer("region", "mu_count", 7), 7);
    c.set_override("grid", "n", "99");
    EXPECT_EQ(c.grid().n_interior(), 99u);
    EXPECT_THROW(Config::from_string("[grid]\nn = 2\n").grid(), Error);
}

TEST(ConfigFile, Models) {
    EXPECT_EQ(Config::from_string("").model().label, model_ap1_sample().label);
    EXPECT_EQ(Config::from_string("[model]\nfunctions = ap1-linear\n").model().label, "ap1-linear");
    const Model m = Config::from_string("[model]\nname = ap2\nsensitivity = saturating\n").model();
    ASSERT_NE(m.chemotaxis(), nullptr);
    EXPECT_NEAR(m.chemotaxis()->F(1.0), std::log(2.0), 1e-12);
    EXPECT_THROW(Config::from_string("[model]\nname = ap3\n").model(), Error);
    EXPECT_THROW(Config::from_string("[model]\nb = -1\n").model(), Error);
    EXPECT_TRUE(hypothesis_check(Config::from_string("[model]\nfunctions = ap1-linear\n").model(), 5, 5, 11).empty());
}

TEST(ConfigFile, Linspace) {
    const Config c = Config::from_string("[curves]\nparameter_min = 0\nparameter_max = 2*lambda1\ncount = 3\n");
    const auto v = c.linspace("curves", "parameter_min", "parameter_max", "count", 0, 1, 5);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_DOUBLE_EQ(v[1], pi2);
    EXPECT_THROW(Config::from_string("[curves]\nparameter_min = 3\nparameter_max = 1\n")
                     .linspace("curves", "parameter_min", "parameter_max", "count", 0, 1, 5),
                 Error);
}

TEST(Csv, Formatting) {
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(format_real(NAN), "");
    for (double x : {M_PI, 1e-300, -2.5e17, 1.0 / 3.0}) EXPECT_EQ(std::stod(format_real(x)), x);
    EXPECT_EQ(quote_field("plain"), "plain");
    EXPECT_EQ(quote_field("a,b"), "\"a,b\"");
    EXPECT_EQ(quote_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(quote_field("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, TableRoundTrip) {
    CsvTable t({"name", "x", "k", "flag"});
    t.add({std::string("a,\"b\""), 1.5, 3LL, true});
    t.add({std::string("plain"), NAN, -1LL, false});
    EXPECT_THROW(t.add({1.0}), Error);
    const std::string s = t.str();
    EXPECT_EQ(s.substr(0, 17), "name,x,k,flag\r\n\"a");
    const auto rows = parse_csv(s);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1][0], "a,\"b\"");
    EXPECT_EQ(rows[1][1], "1.5");
    EXPECT_EQ(rows[1][3], "true");
    EXPECT_EQ(rows[2][1], "");
}

TEST(Csv, AtomicWrite) {
    const fs::path dir = scratch("atomic");
    write_atomic(dir / "sub" / "f.csv", "one");
    write_atomic(dir / "sub" / "f.csv", "two");
    EXPECT_EQ(slurp(dir / "sub" / "f.csv"), "two");
    EXPECT_FALSE(fs::exists(dir / "sub" / "f.csv.tmp"));
}

TEST(Schema, LockstepWithDocument) {
    const nlohmann::json doc = schema_doc();
    EXPECT_EQ(doc["csv"]["eig.csv"].get<std::vector<std::string>>(), schema::eig);
    EXPECT_EQ(doc["csv"]["branch_semitrivial.csv"].get<std::vector<std::string>>(), schema::semitrivial);
    EXPECT_EQ(doc["csv"]["curves.csv"].get<std::vector<std::string>>(), schema::curves);
    EXPECT_EQ(doc["csv"]["branch.csv"].get<std::vector<std::string>>(), schema::branch);
    EXPECT_EQ(doc["csv"]["region.csv"].get<std::vector<std::string>>(), schema::region);
    EXPECT_EQ(doc["csv"]["check.csv"].get<std::vector<std::string>>(), schema::check);
    EXPECT_EQ(doc["json"]["verdict.json"].get<std::vector<std::string>>(), schema::verdict_json);

    std::vector<std::string> verdicts, terms;
    for (auto v : {CellVerdict::ProvenEmpty, CellVerdict::Predicted, CellVerdict::Confirmed,
                   CellVerdict::PredictedNotFound, CellVerdict::Unknown})
        verdicts.push_back(to_string(v));
    for (auto t : {Termination::UnboundedWindow, Termination::HitsOtherSemitrivial_v, Termination::HitsOtherSemitrivial_u,
                   Termination::HitsTrivial, Termination::StepFailure})
        terms.push_back(to_string(t));
    EXPECT_EQ(doc["vocabulary"]["verdict"].get<std::vector<std::string>>(), verdicts);
    EXPECT_EQ(doc["vocabulary"]["termination"].get<std::vector<std::string>>(), terms);
    EXPECT_EQ(doc["vocabulary"]["curve"].get<std::vector<std::string>>(),
              (std::vector<std::string>{to_string(Curve::MuLambda), to_string(Curve::LambdaMu)}));
}

TEST(Commands, EigDefault) {
    const fs::path out = scratch("eig");
    ASSERT_EQ(dispatch("eig", Config::from_string(""), out), Success);
    const auto rows = read_csv(out / "eig.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0], schema::eig);
    EXPECT_EQ(rows[1][0], "divergence");
    EXPECT_NEAR(std::stod(rows[1][1]), 9.8696, 1e-2);
    EXPECT_EQ(rows[1][4], "199");
}

TEST(Commands, EigChemotaxisGauge) {
    const fs::path out = scratch("eig_gauge");
    const Config c = Config::from_file(std::string(COEXIST_CONFIG_DIR) + "/eig_gauge_ap2.ini");
    ASSERT_EQ(dispatch("eig", c, out), Success);
    const auto rows = read_csv(out / "eig.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[1][0], "drift");
    EXPECT_EQ(rows[2][0], "gauge");
    EXPECT_LT(std::stod(rows[1][5]), 1e-2);
    EXPECT_EQ(rows[1][5], rows[2][5]);
}

TEST(Commands, SemitrivialSweep) {
    const fs::path out = scratch("semitrivial");
    Config c = Config::from_file(std::string(COEXIST_CONFIG_DIR) + "/semitrivial_logistic.ini");
    ASSERT_EQ(dispatch("semitrivial", c, out), Success);
    const auto rows = read_csv(out / "branch_semitrivial.csv");
    ASSERT_EQ(rows.size(), 41u);
    EXPECT_EQ(rows[0], schema::semitrivial);
    double prev = -INFINITY;
    std::size_t flip = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double gamma = std::stod(rows[k][0]);
        EXPECT_GT(gamma, prev);
        prev = gamma;
        const bool exists = rows[k][1] == "true";
        if (exists) {
            EXPECT_GT(std::stod(rows[k][3]), 0.0);
            EXPECT_LE(std::stod(rows[k][2]), gamma);
        } else {
            EXPECT_EQ(rows[k][3], "");
        }
        if (exists && flip == 0) flip = k;
        if (flip) EXPECT_TRUE(exists) << "exists must stay true above the threshold";
    }
    ASSERT_GT(flip, 1u);
    EXPECT_LT(std::stod(rows[flip - 1][0]), pi2);
    EXPECT_GT(std::stod(rows[flip][0]), pi2);
}

TEST(Commands, CurvesRows) {
    const fs::path out = scratch("curves");
    const Config c = Config::from_string(
        "[grid]\nn = 99\n[model]\nname = ap2\n[curves]\nparameter_min = 5\nparameter_max = 15\ncount = 3\n");
    ASSERT_EQ(dispatch("curves", c, out), Success);
    const auto rows = read_csv(out / "curves.csv");
    EXPECT_EQ(rows[0], schema::curves);
    const auto vocab = schema_doc()["vocabulary"]["form"].get<std::set<std::string>>();
    std::size_t drift = 0, gauge = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        EXPECT_TRUE(vocab.count(rows[k][3])) << rows[k][3];
        drift += rows[k][3] == "drift";
        gauge += rows[k][3] == "gauge";
    }
    EXPECT_EQ(drift, gauge);
    EXPECT_GT(drift, 0u);
}

TEST(Commands, BranchVerdict) {
    const fs::path out = scratch("branch");
    Config c = Config::from_file(std::string(COEXIST_CONFIG_DIR) + "/branch_ap2.ini");
    c.set_override("grid", "n", "99");
    ASSERT_EQ(dispatch("branch", c, out), Success);
    std::ifstream in(out / "verdict.json");
    const nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, schema::verdict_json);
    EXPECT_EQ(j["termination"], "HitsOtherSemitrivial_u");
    ASSERT_TRUE(j["matched_eigenvalue"].is_number());
    EXPECT_LT(j["mismatch"].get<double>(), j["tolerance"].get<double>());
    EXPECT_TRUE(j["matched"].get<bool>());
    const auto rows = read_csv(out / "branch.csv");
    EXPECT_EQ(rows[0], schema::branch);
    EXPECT_EQ(rows.size(), j["points"].get<std::size_t>() + 1);
}

TEST(Commands, RegionDeterministic) {
    const fs::path a = scratch("region_a"), b = scratch("region_b");
    const std::string text = "[grid]\nn = 49\n[run]\nseed = 5\nthreads = 2\n[region]\nlambda_min = -1\n"
                             "lambda_max = 40\nlambda_count = 3\nmu_min = 8\nmu_max = 14\nmu_count = 3\n";
    ASSERT_EQ(dispatch("region", Config::from_string(text), a), Success);
    ASSERT_EQ(dispatch("region", Config::from_string(text), b), Success);
    EXPECT_EQ(slurp(a / "region.csv"), slurp(b / "region.csv"));
    EXPECT_EQ(slurp(a / "curves.csv"), slurp(b / "curves.csv"));
    const auto rows = read_csv(a / "region.csv");
    ASSERT_EQ(rows.size(), 10u);
    const auto vocab = schema_doc()["vocabulary"]["verdict"].get<std::set<std::string>>();
    for (std::size_t k = 1; k < rows.size(); ++k) {
        EXPECT_TRUE(vocab.count(rows[k][2]));
        if (std::stod(rows[k][0]) <= 0.0) EXPECT_EQ(rows[k][2], "ProvenEmpty");
    }
}

TEST(Commands, CheckPassesAndFails) {
    const fs::path out = scratch("check");
    EXPECT_EQ(dispatch("check", Config::from_file(std::string(COEXIST_CONFIG_DIR) + "/check_ap1.ini"), out), Success);
    EXPECT_EQ(read_csv(out / "check.csv").size(), 1u);
    EXPECT_EQ(dispatch("check", Config::from_string("[check]\nsamples = 1\n"), out), ConfigFailure);
}

TEST(Commands, ErrorsMapToExitCodes) {
    const fs::path out = scratch("errors");
    EXPECT_EQ(dispatch("eig", Config::from_string("[eig]\ncase = nope\n"), out), ConfigFailure);
    EXPECT_EQ(dispatch("eig", Config::from_string("[eig]\nA = -1\n"), out), ConfigFailure);
    EXPECT_EQ(dispatch("nope", Config::from_string(""), out), ConfigFailure);
    // Below the v-threshold there is no base to branch from: a solver failure, not a config one.
    EXPECT_EQ(dispatch("branch", Config::from_string("[grid]\nn = 49\n[branch]\nparameter = 3\n"), out), SolverFailure);
}

TEST(Binary, ExitCodes) {
    const fs::path dir = scratch("binary");
    const fs::path log = dir / "log.txt";
    std::ofstream(dir / "bad.ini") << "[grid]\nn = 99\nbogus = 1\n";
    EXPECT_EQ(run_cli("eig --config \"" + (dir / "bad.ini").string() + "\"", log), 2);
    EXPECT_NE(slurp(log).find("bogus"), std::string::npos);
    EXPECT_EQ(run_cli("eig --config \"" + (dir / "missing.ini").string() + "\"", log), 2);
    EXPECT_EQ(run_cli("eig", log), 2);
    EXPECT_EQ(run_cli("frobnicate --config x.ini", log), 2);
    const std::string good = std::string(COEXIST_CONFIG_DIR) + "/eig_laplacian.ini";
    EXPECT_EQ(run_cli("eig --config \"" + good + "\" --n 99 --out \"" + (dir / "o").string() + "\"", log), 0);
    const auto rows = read_csv(dir / "o" / "eig.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][4], "99");
}
