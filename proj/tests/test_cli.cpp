#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qsift/cli.hpp"

using namespace qsift;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(std::move(args), out, err);
    return {code, out.str(), err.str()};
}

} // namespace

TEST_CASE("sifted sets round-trip through the text format", "[cli]") {
    auto m = SquareFreeModulus({3, 5, 7});
    auto a = squares_mod(m);
    std::stringstream buf;
    save_members_text(a, buf);
    auto back = load_members_text(buf, m);
    CHECK(back.members == a.members);
}

TEST_CASE("sifted sets round-trip through the binary format", "[cli]") {
    for (auto primes : std::vector<std::vector<i64>>{{3}, {3, 5, 7}, {11, 13, 17}}) {
        auto m = SquareFreeModulus(primes);
        auto a = squares_mod(m);
        std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
        save_members_binary(a, buf);
        auto back = load_members_binary(buf);
        CHECK(back.modulus.q() == m.q());
        CHECK(back.members == a.members);
    }
}

TEST_CASE("binary loader rejects truncated input", "[cli]") {
    auto a = squares_mod(SquareFreeModulus({3, 5}));
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    save_members_binary(a, buf);
    std::string bytes = buf.str();
    std::stringstream cut(bytes.substr(0, bytes.size() - 2),
                          std::ios::in | std::ios::binary);
    CHECK_THROWS_AS(load_members_binary(cut), error);
}

TEST_CASE("config round-trips to canonical json", "[cli]") {
    ExperimentConfig cfg;
    cfg.command = "moments";
    cfg.q = 1155;
    cfg.h_grid = {1, 5, 10};
    cfg.k_grid = {2, 4};
    cfg.tuple = {0, 2, 6};
    cfg.alpha = 0.25;
    cfg.seed = 99;
    auto j = cfg.to_json();
    auto j2 = ExperimentConfig::from_json(j).to_json();
    CHECK(j.dump() == j2.dump());
}

TEST_CASE("squares subcommand prints the member list", "[cli]") {
    auto r = cli({"squares", "--q", "15", "--emit", "members"});
    CHECK(r.code == 0);
    CHECK(r.out == "0 1 4 6 9 10\n");
    // the effective config echoes as one json line on stderr
    CHECK(r.err.find("\"command\":\"squares\"") != std::string::npos);
}

TEST_CASE("identical configs produce byte-identical output", "[cli]") {
    auto r1 = cli({"moments", "--q", "1155", "--sieve", "squares", "--h", "1", "--h", "5",
                   "--k", "2", "--k", "4"});
    auto r2 = cli({"moments", "--q", "1155", "--sieve", "squares", "--h", "1", "--h", "5",
                   "--k", "2", "--k", "4"});
    CHECK(r1.code == 0);
    CHECK(r1.out == r2.out);
    CHECK(r1.err == r2.err);
}

TEST_CASE("variance --method both agrees and exits cleanly", "[cli]") {
    auto r = cli({"variance", "--q", "105", "--sieve", "squares", "--h", "5", "--method", "both"});
    CHECK(r.code == 0);
    CHECK(r.out.find("brute") != std::string::npos);
    CHECK(r.out.find("spectral") != std::string::npos);
}

TEST_CASE("usage errors exit 2", "[cli]") {
    CHECK(cli({"no-such-command"}).code == 2);
    CHECK(cli({"variance", "--q", "105"}).code == 2);          // missing --h
    CHECK(cli({"factor", "--n", "45"}).code == 2);             // not square-free
    CHECK(cli({"classify", "--p", "9", "--set", "evens"}).code == 2);
}

TEST_CASE("cap violations exit 1 and name the cap", "[cli]") {
    auto r = cli({"squares", "--q", "105", "--cap", "10"});
    CHECK(r.code == 1);
    CHECK(r.err.find("CapExceeded") != std::string::npos);
}

TEST_CASE("caps above the default need --unsafe", "[cli]") {
    auto r = cli({"squares", "--q", "15", "--cap", "200000000"});
    CHECK(r.code == 2);
    auto ok = cli({"squares", "--q", "15", "--cap", "200000000", "--unsafe"});
    CHECK(ok.code == 0);
}

TEST_CASE("custom omega files drive the sieve", "[cli]") {
    std::string path = "/tmp/qsift_test_omega.json";
    {
        std::ofstream f(path);
        f << R"([{"p": 3, "omega": [2]}, {"p": 5, "omega": [2, 3]}])";
    }
    auto r = cli({"sift", "--q", "15", "--sieve", "custom:" + path, "--emit", "count"});
    CHECK(r.code == 0);
    CHECK(r.out == "6\n");

    {
        std::ofstream f(path);
        f << R"([{"p": 3, "omega": [0, 1, 2]}])";   // inadmissible
    }
    CHECK(cli({"sift", "--q", "15", "--sieve", "custom:" + path}).code == 2);
    std::remove(path.c_str());
}

TEST_CASE("classify emits a json verdict record", "[cli]") {
    auto r = cli({"classify", "--p", "101", "--set", "nonresidues"});
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["p"] == 101);
    CHECK(j["verdict"] == "NotAdditivelyStructured");
    CHECK(j.contains("max_magnitude"));
    CHECK(j.contains("witness_a"));
    CHECK(j.contains("c_threshold"));
    CHECK(j.contains("C_threshold"));
}

TEST_CASE("moments table carries the csv schema", "[cli]") {
    auto r = cli({"moments", "--q", "1155", "--tuple", "0", "--tuple", "2", "--h", "5",
                  "--k", "2"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("q,h,s,k,M_k_exact_center,M_k_paper_center,bound_eq7,bound_eq8,ratio\n", 0)
          == 0);
    CHECK(r.out.find("1155,5,2,2,") != std::string::npos);
}

TEST_CASE("gaps and spacings tables", "[cli]") {
    auto g = cli({"gaps", "--q", "105", "--sieve", "squares", "--lambda", "2"});
    REQUIRE(g.code == 0);
    CHECK(g.out.rfind("q,lambda,V_lambda,corollary_bound,ratio\n", 0) == 0);

    auto s = cli({"spacings", "--q", "15015", "--sieve", "squares", "--alpha", "0.5",
                  "--beta", "1.5"});
    REQUIRE(s.code == 0);
    CHECK(s.out.rfind("q,alpha,beta,statistic,expected\n", 0) == 0);

    auto h = cli({"spacings", "--q", "1155", "--sieve", "squares", "--histogram", "4"});
    REQUIRE(h.code == 0);
    CHECK(h.out.rfind("gap,frequency,geometric\n", 0) == 0);
}

TEST_CASE("mp-scan and fourier-wrap ranges", "[cli]") {
    auto r = cli({"mp-scan", "--pmin", "5", "--pmax", "13"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("7,4,") != std::string::npos);
    CHECK(r.out.find("13,7,") != std::string::npos);

    auto f = cli({"fourier-wrap", "--pmin", "5", "--pmax", "5"});
    REQUIRE(f.code == 0);
    CHECK(f.out.rfind("p,re,im,residual,normalized\n", 0) == 0);
    CHECK(f.out.find("5,1.19098300563,0.587785252292,") != std::string::npos);
}

TEST_CASE("config file supplies defaults, flags override", "[cli]") {
    std::string path = "/tmp/qsift_test_config.json";
    {
        ExperimentConfig cfg;
        cfg.q = 15;
        cfg.emit = "count";
        std::ofstream f(path);
        f << cfg.to_json().dump();
    }
    auto r = cli({"squares", "--config", path});
    CHECK(r.code == 0);
    CHECK(r.out == "6\n");
    auto r2 = cli({"squares", "--config", path, "--q", "105"});
    CHECK(r2.code == 0);
    CHECK(r2.out == "24\n");
    std::remove(path.c_str());
}

TEST_CASE("json format emits one object per line", "[cli]") {
    auto r = cli({"moments", "--q", "105", "--sieve", "squares", "--h", "1", "--h", "2",
                  "--k", "2", "--format", "json"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j.contains("ratio"));
        ++n;
    }
    CHECK(n == 2);
}

TEST_CASE("verify quick tier passes from the cli", "[cli]") {
    auto r = cli({"verify", "--tier", "quick"});
    CHECK(r.code == 0);
    CHECK(r.out.find("criterion  5 [PASS]") != std::string::npos);
    CHECK(r.out.find("criterion 15 [PASS]") != std::string::npos);
}
