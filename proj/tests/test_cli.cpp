#include "mmpt/cli.hpp"
#include "extension_fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace mmpt;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = 0;
    Json envelope;
    std::string err;
};

Run run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(args, out, err);
    r.err = err.str();
    if (!out.str().empty() && out.str().front() == '{') r.envelope = Json::parse(out.str());
    return r;
}

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("mmpt_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

} // namespace

TEST_CASE("space validate exit codes") {
    TempDir dir;
    auto ok = run_cli({"space", "validate", dir.file("two.json", R"({"coords": [[0,0],[1,0]], "mass": [1,1]})")});
    CHECK(ok.code == cli::kOk);
    CHECK(ok.envelope["version"] == cli::kVersion);
    CHECK(ok.envelope["command"] == "space validate");
    CHECK(ok.envelope["report"]["valid"] == true);
    CHECK(ok.envelope["report"]["points"] == 2);

    auto asym = run_cli({"space", "validate", dir.file("asym.json", R"({"dist": [[0,1],[2,0]], "mass": [1,1]})")});
    CHECK(asym.code == cli::kInvalid);
    const std::string msg = asym.envelope["report"]["findings"][0]["message"];
    CHECK(msg.find("(0,1)") != std::string::npos);

    auto nomass = run_cli({"space", "validate", dir.file("nomass.json", R"({"coords": [[0,0],[1,0]]})")});
    CHECK(nomass.code == cli::kInvalid);
    CHECK(nomass.envelope["report"]["findings"][0]["kind"] == "schema");

    CHECK(run_cli({"space", "validate", dir.path("missing.json")}).code == cli::kInvalid);
    CHECK(run_cli({"space", "validate", dir.file("junk.json", "{not json")}).code == cli::kInvalid);
}

TEST_CASE("cap command") {
    TempDir dir;
    const auto two = dir.file("two.json", R"({"coords": [[0,0],[1,0]], "mass": [1,1], "sets": {"E": [0], "F": [1]}})");
    auto r = run_cli({"cap", two, "--method", "modulus", "--delta", "1.5", "--quiet"});
    CHECK(r.code == cli::kOk);
    CHECK(r.envelope["report"]["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.envelope["config"]["delta"] == 1.5);
    CHECK(r.err.empty());

    // Without --delta the connectivity radius is used.
    auto d = run_cli({"cap", two});
    CHECK(d.envelope["config"]["delta"] == 1.0);
    CHECK(d.err.find("level=info") != std::string::npos);

    auto brute = run_cli({"cap", two, "--method", "brute", "--quiet"});
    CHECK(brute.envelope["report"]["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));

    const auto all = dir.file("all.json", R"({"coords": [[0,0],[1,0],[0,1]], "mass": [1,2,0.5], "sets": {"E": [0,1,2]}})");
    auto set = run_cli({"cap", all, "--method", "set", "--quiet"});
    CHECK(set.code == cli::kOk);
    CHECK(set.envelope["report"]["value"].get<double>() == doctest::Approx(3.5).epsilon(1e-6));

    const auto overlap =
        dir.file("overlap.json", R"({"coords": [[0,0],[1,0]], "mass": [1,1], "sets": {"E": [0,1], "F": [1]}})");
    auto bad = run_cli({"cap", overlap, "--quiet"});
    CHECK(bad.code == cli::kInvalid);
    CHECK(bad.envelope["report"]["error"]["kind"] == "validation");

    CHECK(run_cli({"cap", all, "--quiet"}).code == cli::kInvalid);  // no set F
    CHECK(run_cli({"cap", two, "--max-iter", "1", "--quiet"}).code == cli::kMaxIter);
    CHECK(run_cli({"cap", two, "--p", "0.5", "--quiet"}).code == cli::kInvalid);
    CHECK(run_cli({"cap", two, "--tol", "0", "--quiet"}).code == cli::kInvalid);
    CHECK(run_cli({"cap", two, "--method", "newton"}).code == cli::kInvalid);
    CHECK(run_cli({"cap", two, "--workers", "0", "--quiet"}).code == cli::kInvalid);
    CHECK(run_cli({"frobnicate"}).code == cli::kInvalid);
    CHECK(run_cli({"--help"}).code == cli::kOk);
}

TEST_CASE("extend command") {
    TempDir dir;
    auto fx = testsupport::extension_fixture(0);
    save_space(dir.path("space.json"), SpaceDocument{fx.space, {}});
    Json problem{{"f", fx.problem.f},   {"g_star", fx.problem.g_star}, {"K", fx.problem.K.members()},
                 {"x0", fx.problem.x0}, {"R", fx.problem.R},           {"eps", fx.problem.eps}};
    const auto prob = dir.file("problem.json", problem.dump());

    auto r = run_cli({"extend", dir.path("space.json"), prob, "--quiet", "--out", dir.path("ext.json")});
    CHECK(r.code == cli::kOk);
    const auto& energy = r.envelope["report"]["diagnostics"]["extension.energy"];
    CHECK(energy["pass"] == true);
    // Energy slack measured against the g_star energy alone stays below eps.
    const double over = r.envelope["report"]["energy"].get<double>() -
                        (r.envelope["report"]["energy_bound"].get<double>() - fx.problem.eps);
    CHECK(over < fx.problem.eps);
    auto written = read_json_file(dir.path("ext.json"));
    CHECK(written == r.envelope);

    auto capped = run_cli({"extend", dir.path("space.json"), prob, "--index-cap", "1", "--quiet",
                           "--out", dir.path("capped.json")});
    CHECK(capped.code == cli::kCapExhausted);
    const std::string msg = capped.envelope["report"]["error"]["message"];
    CHECK(msg.find("Delta") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path("capped.json")));

    // Constant data on a space with nothing outside B(x0, R).
    const auto line = dir.file("line.json", R"({"coords": [[0],[0.1],[0.2],[0.3]], "mass": [1,1,1,1]})");
    const auto flat = dir.file("flat.json", R"({"f": [2,2,0,0], "g_star": [0,0,0,0], "K": [0,1], "x0": 0, "R": 10})");
    auto c = run_cli({"extend", line, flat, "--quiet"});
    CHECK(c.code == cli::kOk);
    CHECK(c.envelope["report"]["diagnostics"]["extension.bounded"]["slack"] == 0.0);
    CHECK(c.envelope["report"]["f_tilde"] == Json::array({2.0, 2.0, 2.0, 2.0}));

    const auto broken = dir.file("broken.json", R"({"f": [2,2,0,0], "K": [0,1], "x0": 0, "R": 10})");
    CHECK(run_cli({"extend", line, broken, "--quiet"}).code == cli::kInvalid);
}

TEST_CASE("verify command") {
    TempDir dir;
    auto brute = run_cli({"verify", "--suite", "brute", "--seed", "7", "--quiet", "--out", dir.path("brute.json")});
    CHECK(brute.code == cli::kOk);
    CHECK(brute.envelope["report"]["failed"] == 0);
    CHECK(fs::exists(dir.path("brute.csv")));
    std::ifstream csv(dir.path("brute.csv"));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "instance,seed,n,p,delta,modulus,brute,rel_diff");

    auto broken = run_cli({"verify", "--suite", "brute", "--seed", "7", "--tol", "0", "--quiet"});
    CHECK(broken.code == cli::kCheckFailed);
    CHECK(broken.envelope["report"]["counterexample"]["name"] == "modulus.matches_brute");

    auto q1 = run_cli({"verify", "--suite", "quasi", "--seed", "3", "--quiet"});
    auto q2 = run_cli({"verify", "--suite", "quasi", "--seed", "3", "--quiet"});
    CHECK(q1.code == cli::kOk);
    CHECK(q1.envelope == q2.envelope);

    CHECK(run_cli({"verify", "--suite", "choquet", "--quiet"}).code == cli::kOk);

    auto sweep = run_cli({"verify", "--suite", "sweep", "--n", "8", "--solvers", "modulus", "function", "--workers", "2",
                          "--quiet"});
    CHECK(sweep.code == cli::kOk);
    CHECK(sweep.envelope["report"]["sweep"]["rows"].size() == 2);

    auto bad = run_cli({"verify", "--suite", "sweep", "--n", "8", "--solvers", "nonsense", "--quiet"});
    CHECK(bad.code == cli::kCheckFailed);
    CHECK(run_cli({"verify", "--suite", "nope"}).code == cli::kInvalid);
}
