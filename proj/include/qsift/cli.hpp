#pragma once

// Command-line front end. Every subcommand echoes its effective configuration
// as one canonical JSON line on stderr, writes tables to stdout or --out, and
// exits 2 on usage errors, 1 on violated invariants or exceeded caps.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "qsift/verify.hpp"

namespace qsift {

struct ExperimentConfig {
    std::string command;
    i64 q = 0;
    std::vector<i64> primes;
    std::string family;                 // "first-k-odd-primes:K" | "primes-in-range:LO:HI"
    std::string sieve = "squares";
    std::string set_kind = "nonresidues";
    std::vector<i64> tuple;
    std::vector<i64> h_grid{1};
    std::vector<i64> k_grid{2};
    std::vector<i64> lambda_grid{2};
    i64 p = 0;
    i64 pmin = 3, pmax = 101;
    i64 h = 1;
    i64 max_gap = 0;
    double alpha = 0.5, beta = 1.5;
    double c_threshold = -1.0;          // negative: default log p
    double C_threshold = -1.0;          // negative: default 1/log p
    std::string format = "csv";
    u64 seed = 1;
    i64 cap = kDefaultEnumerationCap;
    int threads = 0;                    // 0: hardware parallelism
    std::string tier = "quick";
    std::string method = "both";
    std::string emit = "members";
    bool include_self_inverse = false;
    bool over_set = false;
    bool unsafe = false;
    std::string out;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["q"] = q;
        j["primes"] = primes;
        j["family"] = family;
        j["sieve"] = sieve;
        j["set_kind"] = set_kind;
        j["tuple"] = tuple;
        j["h_grid"] = h_grid;
        j["k_grid"] = k_grid;
        j["lambda_grid"] = lambda_grid;
        j["p"] = p;
        j["pmin"] = pmin;
        j["pmax"] = pmax;
        j["h"] = h;
        j["max_gap"] = max_gap;
        j["alpha"] = alpha;
        j["beta"] = beta;
        j["c_threshold"] = c_threshold;
        j["C_threshold"] = C_threshold;
        j["format"] = format;
        j["seed"] = seed;
        j["cap"] = cap;
        j["threads"] = threads;
        j["tier"] = tier;
        j["method"] = method;
        j["emit"] = emit;
        j["include_self_inverse"] = include_self_inverse;
        j["over_set"] = over_set;
        j["unsafe"] = unsafe;
        j["out"] = out;
        return j;
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig c;
        c.command = j.value("command", c.command);
        c.q = j.value("q", c.q);
        c.primes = j.value("primes", c.primes);
        c.family = j.value("family", c.family);
        c.sieve = j.value("sieve", c.sieve);
        c.set_kind = j.value("set_kind", c.set_kind);
        c.tuple = j.value("tuple", c.tuple);
        c.h_grid = j.value("h_grid", c.h_grid);
        c.k_grid = j.value("k_grid", c.k_grid);
        c.lambda_grid = j.value("lambda_grid", c.lambda_grid);
        c.p = j.value("p", c.p);
        c.pmin = j.value("pmin", c.pmin);
        c.pmax = j.value("pmax", c.pmax);
        c.h = j.value("h", c.h);
        c.max_gap = j.value("max_gap", c.max_gap);
        c.alpha = j.value("alpha", c.alpha);
        c.beta = j.value("beta", c.beta);
        c.c_threshold = j.value("c_threshold", c.c_threshold);
        c.C_threshold = j.value("C_threshold", c.C_threshold);
        c.format = j.value("format", c.format);
        c.seed = j.value("seed", c.seed);
        c.cap = j.value("cap", c.cap);
        c.threads = j.value("threads", c.threads);
        c.tier = j.value("tier", c.tier);
        c.method = j.value("method", c.method);
        c.emit = j.value("emit", c.emit);
        c.include_self_inverse = j.value("include_self_inverse", c.include_self_inverse);
        c.over_set = j.value("over_set", c.over_set);
        c.unsafe = j.value("unsafe", c.unsafe);
        c.out = j.value("out", c.out);
        return c;
    }
};

namespace cli_detail {

inline SquareFreeModulus resolve_modulus(const ExperimentConfig& cfg) {
    if (!cfg.primes.empty()) return SquareFreeModulus(cfg.primes);
    if (!cfg.family.empty()) {
        std::vector<i64> primes;
        if (cfg.family.rfind("first-k-odd-primes:", 0) == 0) {
            i64 k = std::stoll(cfg.family.substr(19));
            for (i64 p = 3; i64(primes.size()) < k; p += 2)
                if (is_prime_u64(u64(p))) primes.push_back(p);
        } else if (cfg.family.rfind("primes-in-range:", 0) == 0) {
            std::string rest = cfg.family.substr(16);
            auto colon = rest.find(':');
            if (colon == std::string::npos)
                fail(errc::bad_argument, "family wants primes-in-range:LO:HI");
            i64 lo = std::stoll(rest.substr(0, colon));
            i64 hi = std::stoll(rest.substr(colon + 1));
            for (i64 p = lo | 1; p <= hi; p += 2)
                if (p >= 3 && is_prime_u64(u64(p))) primes.push_back(p);
        } else {
            fail(errc::bad_argument, "unknown modulus family '" + cfg.family + "'");
        }
        return SquareFreeModulus(primes);
    }
    if (cfg.q < 3) fail(errc::bad_argument, "give --q, --primes, or --family");
    return factor_squarefree(cfg.q);
}

inline std::vector<i64> named_omega(const std::string& kind, i64 p, u64 seed) {
    if (kind == "nonresidues") return omega_nonresidues(p);
    if (kind == "evens") return omega_evens(p);
    if (kind == "kloosterman") return omega_kloosterman(p);
    if (kind == "kloosterman-prime") return omega_prime_kloosterman(p);
    if (kind == "random") {
        std::mt19937_64 rng(seed ^ u64(p) * 0x9E3779B97F4A7C15ull);
        std::vector<i64> classes(static_cast<size_t>(p));
        for (i64 x = 0; x < p; ++x) classes[size_t(x)] = x;
        std::shuffle(classes.begin(), classes.end(), rng);
        classes.resize(size_t((p - 1) / 2));
        std::sort(classes.begin(), classes.end());
        return classes;
    }
    fail(errc::bad_argument, "unknown set kind '" + kind + "'");
}

inline std::map<i64, std::vector<i64>> load_custom_omega(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::bad_argument, "cannot open omega file '" + path + "'");
    nlohmann::json j;
    in >> j;
    if (!j.is_array()) j = nlohmann::json::array({j});
    std::map<i64, std::vector<i64>> out;
    for (const auto& rec : j) {
        i64 p = rec.at("p").get<i64>();
        auto classes = rec.at("omega").get<std::vector<i64>>();
        for (i64 c : classes)
            if (c < 0 || c >= p)
                fail(errc::bad_argument, "omega class " + std::to_string(c) + " out of [0, " +
                                             std::to_string(p) + ")");
        if (i64(classes.size()) >= p)
            fail(errc::bad_argument, "omega at p=" + std::to_string(p) + " is not admissible");
        out[p] = std::move(classes);
    }
    return out;
}

// sieve choices: squares | evens | kloosterman | kloosterman-prime | random | custom:<file>
inline SieveSystem resolve_sieve(const ExperimentConfig& cfg, const SquareFreeModulus& m) {
    if (cfg.sieve.rfind("custom:", 0) == 0) {
        auto f = load_custom_omega(cfg.sieve.substr(7));
        return SieveSystem(m, std::move(f));
    }
    if (cfg.sieve == "none") return sieve_empty(m);
    std::map<i64, std::vector<i64>> f;
    for (i64 p : m.primes()) {
        std::string kind = cfg.sieve == "squares" ? "nonresidues" : cfg.sieve;
        if (cfg.sieve == "kloosterman" || cfg.sieve == "kloosterman-prime") {
            // survivors must lie in the named set; forbid its complement
            f[p] = complement_in_zp(p, named_omega(kind, p, cfg.seed));
        } else {
            f[p] = named_omega(kind, p, cfg.seed);
        }
    }
    return SieveSystem(m, std::move(f));
}

inline std::vector<i64> resolve_set(const ExperimentConfig& cfg, i64 p) {
    if (cfg.set_kind.rfind("custom:", 0) == 0) {
        auto f = load_custom_omega(cfg.set_kind.substr(7));
        auto it = f.find(p);
        if (it == f.end()) fail(errc::bad_argument, "omega file has no record for p=" + std::to_string(p));
        auto v = it->second;
        std::sort(v.begin(), v.end());
        return v;
    }
    return named_omega(cfg.set_kind, p, cfg.seed);
}

struct OutputTarget {
    std::ostream* stream;
    std::ofstream file;

    OutputTarget(const std::string& path, std::ostream& fallback) {
        if (path.empty()) {
            stream = &fallback;
        } else {
            file.open(path);
            if (!file) fail(errc::bad_argument, "cannot open output file '" + path + "'");
            stream = &file;
        }
    }
};

inline int run_factor(const ExperimentConfig& cfg, std::ostream& out) {
    auto m = resolve_modulus(cfg);
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["q"] = m.q();
        j["primes"] = m.primes();
        j["omega"] = m.omega();
        j["phi"] = m.phi();
        j["P"] = m.density_coprime().str();
        out << j.dump() << '\n';
    } else {
        out << "q,omega,phi,P,primes\n";
        out << m.q() << ',' << m.omega() << ',' << m.phi() << ',' << m.density_coprime().str()
            << ',';
        for (size_t i = 0; i < m.primes().size(); ++i)
            out << (i ? ";" : "") << m.primes()[i];
        out << '\n';
    }
    return 0;
}

inline int run_sift(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
    auto m = resolve_modulus(cfg);
    auto sys = resolve_sieve(cfg, m);
    auto a = sift(sys, SiftStrategy::automatic, cfg.cap);
    if (!cfg.out.empty()) {
        std::ofstream f(cfg.out);
        if (!f) fail(errc::bad_argument, "cannot open output file '" + cfg.out + "'");
        if (cfg.format == "binary") {
            save_members_binary(a, f);
        } else {
            save_members_text(a, f);
        }
        err << "wrote " << a.size() << " members to " << cfg.out << '\n';
        return 0;
    }
    if (cfg.emit == "count") {
        out << a.size() << '\n';
    } else {
        for (i64 i = 0; i < a.size(); ++i) out << (i ? " " : "") << a.members[size_t(i)];
        out << '\n';
    }
    return 0;
}

inline int run_classify(const ExperimentConfig& cfg, std::ostream& out) {
    if (cfg.p < 3 || !is_prime_u64(u64(cfg.p))) fail(errc::bad_argument, "--p must be an odd prime");
    auto omega = resolve_set(cfg, cfg.p);
    std::optional<double> c, C;
    if (cfg.c_threshold >= 0) c = cfg.c_threshold;
    if (cfg.C_threshold >= 0) C = cfg.C_threshold;
    auto v = classify_structure(omega, cfg.p, c, C);
    out << verdict_json(v, cfg.set_kind).dump() << '\n';
    return 0;
}

inline int run_variance(const ExperimentConfig& cfg, std::ostream& out) {
    auto m = resolve_modulus(cfg);
    auto sys = resolve_sieve(cfg, m);
    double brute = 0.0, spectral = 0.0;
    bool has_brute = cfg.method == "brute" || cfg.method == "both";
    bool has_spectral = cfg.method == "spectral" || cfg.method == "both";
    if (has_brute) brute = window_counts(sift(sys, SiftStrategy::automatic, cfg.cap), cfg.h, 2,
                                         cfg.cap)
                               .central_moment_total(2);
    if (has_spectral) spectral = variance_spectral(sys, cfg.h, cfg.cap);
    if (cfg.format == "json") {
        nlohmann::ordered_json j;
        j["q"] = m.q();
        j["h"] = cfg.h;
        if (has_brute) j["M2_brute"] = brute;
        if (has_spectral) j["M2_spectral"] = spectral;
        out << j.dump() << '\n';
    } else {
        out << "q,h,method,M2\n";
        if (has_brute) out << m.q() << ',' << cfg.h << ",brute," << fmt_g12(brute) << '\n';
        if (has_spectral) out << m.q() << ',' << cfg.h << ",spectral," << fmt_g12(spectral) << '\n';
    }
    if (cfg.method == "both") {
        double rel = std::abs(spectral - brute) / std::max(1.0, std::abs(brute));
        if (rel > 1e-8)
            fail(errc::numerical_instability,
                 "spectral/brute variance mismatch " + fmt_g12(rel) + " at q=" +
                     std::to_string(m.q()) + " h=" + std::to_string(cfg.h));
    }
    return 0;
}

inline int run_moments(const ExperimentConfig& cfg, std::ostream& out) {
    auto m = resolve_modulus(cfg);
    SieveSystem sys = cfg.tuple.empty() ? resolve_sieve(cfg, m)
                                        : sieve_from_tuple(AdmissibleTuple(m, cfg.tuple));
    i64 s = cfg.tuple.empty() ? 0 : i64(cfg.tuple.size());
    if (s == 0)
        for (size_t i = 0; i < m.primes().size(); ++i)
            s = std::max(s, i64(sys.forbidden(i).size()));
    auto a = sift(sys, SiftStrategy::automatic, cfg.cap);
    int kmax = 2;
    for (i64 k : cfg.k_grid) kmax = std::max(kmax, int(k));
    Rational paper_center_unit(i128(m.q()), i128(m.phi()) << m.omega());

    bool json = cfg.format == "json";
    if (!json) write_moments_header(out);
    for (i64 h : cfg.h_grid) {
        auto st = window_counts(a, h, kmax, cfg.cap);
        for (i64 k : cfg.k_grid) {
            MomentsRow row;
            row.q = m.q();
            row.h = h;
            row.s = s;
            row.k = k;
            row.m_exact = st.central_moment_total(int(k));
            Rational paper_center(paper_center_unit.num * h, paper_center_unit.den);
            row.m_paper = st.central_moment_total(int(k), paper_center);
            auto b = tuple_moment_bounds(m, h, s, k);
            row.bound_eq7 = b.poissonian;
            row.bound_eq8 = b.general;
            row.ratio = row.m_exact / row.bound_eq8;
            if (json) {
                nlohmann::ordered_json j;
                j["q"] = row.q;
                j["h"] = row.h;
                j["s"] = row.s;
                j["k"] = row.k;
                j["M_k_exact_center"] = row.m_exact;
                j["M_k_paper_center"] = row.m_paper;
                j["bound_eq7"] = row.bound_eq7;
                j["bound_eq8"] = row.bound_eq8;
                j["ratio"] = row.ratio;
                out << j.dump() << '\n';
            } else {
                write_moments_row(out, row);
            }
        }
    }
    return 0;
}

inline int run_gaps(const ExperimentConfig& cfg, std::ostream& out) {
    auto m = resolve_modulus(cfg);
    auto sys = resolve_sieve(cfg, m);
    auto a = sift(sys, SiftStrategy::automatic, cfg.cap);
    auto g = gap_profile(a);
    double bound = gap_moment_bound(m);
    bool json = cfg.format == "json";
    if (!json) write_gap_header(out);
    for (i64 lambda : cfg.lambda_grid) {
        GapRow row;
        row.q = m.q();
        row.lambda = lambda;
        row.v_lambda = double((long double)g.power_sum(int(lambda)));
        row.corollary_bound = bound;
        row.ratio = row.v_lambda / double(m.q()) / bound;
        if (json) {
            nlohmann::ordered_json j;
            j["q"] = row.q;
            j["lambda"] = row.lambda;
            j["V_lambda"] = row.v_lambda;
            j["corollary_bound"] = row.corollary_bound;
            j["ratio"] = row.ratio;
            out << j.dump() << '\n';
        } else {
            write_gap_row(out, row);
        }
    }
    return 0;
}

inline int run_spacings(const ExperimentConfig& cfg, std::ostream& out) {
    auto m = resolve_modulus(cfg);
    auto sys = resolve_sieve(cfg, m);
    auto a = sift(sys, SiftStrategy::automatic, cfg.cap);
    bool json = cfg.format == "json";
    if (cfg.max_gap > 0) {
        auto freq = consecutive_spacing_histogram(a, cfg.max_gap);
        if (!json) out << "gap,frequency,geometric\n";
        for (i64 g = 1; g <= cfg.max_gap; ++g) {
            double f = freq.count(g) ? freq[g] : 0.0;
            double expect = std::pow(0.5, double(g));
            if (json) {
                nlohmann::ordered_json j;
                j["gap"] = g;
                j["frequency"] = f;
                j["geometric"] = expect;
                out << j.dump() << '\n';
            } else {
                out << g << ',' << fmt_g12(f) << ',' << fmt_g12(expect) << '\n';
            }
        }
        return 0;
    }
    SpacingRow row;
    row.q = m.q();
    row.alpha = cfg.alpha;
    row.beta = cfg.beta;
    row.statistic = spacing_statistic(a, cfg.alpha, cfg.beta);
    row.expected = cfg.beta - cfg.alpha;
    if (json) {
        nlohmann::ordered_json j;
        j["q"] = row.q;
        j["alpha"] = row.alpha;
        j["beta"] = row.beta;
        j["statistic"] = row.statistic;
        j["expected"] = row.expected;
        out << j.dump() << '\n';
    } else {
        write_spacing_header(out);
        write_spacing_row(out, row);
    }
    return 0;
}

inline int run_mp_scan(const ExperimentConfig& cfg, std::ostream& out) {
    bool json = cfg.format == "json";
    if (!json) out << "p,m_p,bound\n";
    for (i64 p = cfg.pmin | 1; p <= cfg.pmax; p += 2) {
        if (p < 5 || !is_prime_u64(u64(p))) continue;
        i64 v = m_p(p, !cfg.include_self_inverse);
        double bound = 2.0 * std::log(double(p)) * std::pow(double(p), 0.75);
        if (json) {
            nlohmann::ordered_json j;
            j["p"] = p;
            j["m_p"] = v;
            j["bound"] = bound;
            out << j.dump() << '\n';
        } else {
            out << p << ',' << v << ',' << fmt_g12(bound) << '\n';
        }
    }
    return 0;
}

inline int run_fourier_wrap(const ExperimentConfig& cfg, std::ostream& out) {
    bool json = cfg.format == "json";
    if (!json) out << "p,re,im,residual,normalized\n";
    for (i64 p = cfg.pmin | 1; p <= cfg.pmax; p += 2) {
        if (p < 3 || !is_prime_u64(u64(p))) continue;
        cplx v = wraparound_fourier(p, cfg.over_set);
        cplx main{0.0, double(p) / (2.0 * std::numbers::pi)};
        double residual = std::abs(v - main);
        double normalized = residual / (std::sqrt(double(p)) * std::log(double(p)));
        if (json) {
            nlohmann::ordered_json j;
            j["p"] = p;
            j["re"] = v.real();
            j["im"] = v.imag();
            j["residual"] = residual;
            j["normalized"] = normalized;
            out << j.dump() << '\n';
        } else {
            out << p << ',' << fmt_g12(v.real()) << ',' << fmt_g12(v.imag()) << ','
                << fmt_g12(residual) << ',' << fmt_g12(normalized) << '\n';
        }
    }
    return 0;
}

} // namespace cli_detail

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;

    ExperimentConfig cfg;
    std::string config_path;

    CLI::App app{"sieved residue sets: spectra, window statistics, and identity checks"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print help");   // leaves --h free for window lengths
    app.set_help_all_flag("--help-all");
    app.option_defaults()->ignore_case(false);

    app.add_option("--config", config_path, "JSON config file; flags override its values");
    app.add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
    app.add_option("--cap", cfg.cap, "enumeration cap");
    app.add_flag("--unsafe", cfg.unsafe, "allow caps above the default");
    app.add_option("--format", cfg.format, "csv | json")
        ->check(CLI::IsMember({"csv", "json", "binary"}));
    app.add_option("--out", cfg.out, "write output to this file");
    app.add_option("--seed", cfg.seed, "seed for random class sets");

    auto add_modulus = [&](CLI::App* sub) {
        sub->add_option("--q", cfg.q, "modulus (odd, square-free)");
        sub->add_option("--primes", cfg.primes, "explicit prime list");
        sub->add_option("--family", cfg.family,
                        "first-k-odd-primes:K | primes-in-range:LO:HI");
    };
    auto add_sieve = [&](CLI::App* sub) {
        sub->add_option("--sieve", cfg.sieve,
                        "squares | evens | kloosterman | kloosterman-prime | random | none | custom:<file>");
    };

    auto subcommand = [&](const char* name, const char* desc) {
        auto* s = app.add_subcommand(name, desc);
        s->set_help_flag("--help", "print help");
        s->fallthrough();   // global flags may follow the subcommand
        return s;
    };

    auto* factor = subcommand("factor", "factor an odd square-free modulus");
    factor->add_option("--n,--q", cfg.q, "modulus")->required();

    auto* squares = subcommand("squares", "the squares modulo q");
    add_modulus(squares);
    squares->add_option("--emit", cfg.emit, "members | count");

    auto* siftc = subcommand("sift", "members surviving a forbidden-class sieve");
    add_modulus(siftc);
    add_sieve(siftc);
    siftc->add_option("--emit", cfg.emit, "members | count");

    auto* classify = subcommand("classify", "additive-structure verdict for a class set");
    classify->add_option("--p", cfg.p, "odd prime")->required();
    classify->add_option("--set", cfg.set_kind,
                         "nonresidues | evens | kloosterman | kloosterman-prime | random | custom:<file>");
    classify->add_option("--c", cfg.c_threshold, "threshold c (default log p)");
    classify->add_option("--C", cfg.C_threshold, "threshold C (default 1/log p)");

    auto* variance = subcommand("variance", "window-count second moment");
    add_modulus(variance);
    add_sieve(variance);
    variance->add_option("--h", cfg.h, "window length")->required();
    variance->add_option("--method", cfg.method, "brute | spectral | both")
        ->check(CLI::IsMember({"brute", "spectral", "both"}));

    auto* moments = subcommand("moments", "central moments against the closed-form bounds");
    add_modulus(moments);
    add_sieve(moments);
    moments->add_option("--tuple", cfg.tuple, "admissible tuple elements (overrides --sieve)");
    moments->add_option("--h", cfg.h_grid, "window lengths");
    moments->add_option("--k", cfg.k_grid, "moment orders");

    auto* gaps = subcommand("gaps", "gap power sums against the closed-form gap bound");
    add_modulus(gaps);
    add_sieve(gaps);
    gaps->add_option("--lambda", cfg.lambda_grid, "gap power orders");

    auto* spacings = subcommand("spacings", "pair spacing statistic or gap histogram");
    add_modulus(spacings);
    add_sieve(spacings);
    spacings->add_option("--alpha", cfg.alpha, "interval start (times mean spacing)");
    spacings->add_option("--beta", cfg.beta, "interval end (times mean spacing)");
    spacings->add_option("--histogram", cfg.max_gap, "emit consecutive-gap histogram up to this gap");

    auto* mp = subcommand("mp-scan", "minimal max(x, 1/x) statistic over a prime range");
    mp->add_option("--pmin", cfg.pmin, "range start");
    mp->add_option("--pmax", cfg.pmax, "range end");
    mp->add_flag("--include-self-inverse", cfg.include_self_inverse,
                 "keep the trivial x = 1 and x = p-1 classes");

    auto* fw = subcommand("fourier-wrap", "wraparound Kloosterman Fourier sums");
    fw->add_option("--pmin", cfg.pmin, "range start");
    fw->add_option("--pmax", cfg.pmax, "range end");
    fw->add_flag("--set", cfg.over_set, "sum each distinct value once");

    auto* verify = subcommand("verify", "run the invariant suite");
    verify->add_option("--tier", cfg.tier, "quick | standard | deep")
        ->check(CLI::IsMember({"quick", "standard", "deep"}));

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (!config_path.empty()) {
            // config supplies values; explicit flags already took precedence
            std::ifstream in(config_path);
            if (!in) fail(errc::bad_argument, "cannot open config '" + config_path + "'");
            nlohmann::json j;
            in >> j;
            ExperimentConfig file_cfg = ExperimentConfig::from_json(j);
            // fields not touched on the command line fall back to the file
            ExperimentConfig defaults;
            auto keep = [&](auto& field, const auto& file_value, const auto& default_value) {
                if (field == default_value) field = file_value;
            };
            keep(cfg.q, file_cfg.q, defaults.q);
            keep(cfg.primes, file_cfg.primes, defaults.primes);
            keep(cfg.family, file_cfg.family, defaults.family);
            keep(cfg.sieve, file_cfg.sieve, defaults.sieve);
            keep(cfg.set_kind, file_cfg.set_kind, defaults.set_kind);
            keep(cfg.tuple, file_cfg.tuple, defaults.tuple);
            keep(cfg.h_grid, file_cfg.h_grid, defaults.h_grid);
            keep(cfg.k_grid, file_cfg.k_grid, defaults.k_grid);
            keep(cfg.lambda_grid, file_cfg.lambda_grid, defaults.lambda_grid);
            keep(cfg.p, file_cfg.p, defaults.p);
            keep(cfg.pmin, file_cfg.pmin, defaults.pmin);
            keep(cfg.pmax, file_cfg.pmax, defaults.pmax);
            keep(cfg.h, file_cfg.h, defaults.h);
            keep(cfg.max_gap, file_cfg.max_gap, defaults.max_gap);
            keep(cfg.alpha, file_cfg.alpha, defaults.alpha);
            keep(cfg.beta, file_cfg.beta, defaults.beta);
            keep(cfg.c_threshold, file_cfg.c_threshold, defaults.c_threshold);
            keep(cfg.C_threshold, file_cfg.C_threshold, defaults.C_threshold);
            keep(cfg.format, file_cfg.format, defaults.format);
            keep(cfg.seed, file_cfg.seed, defaults.seed);
            keep(cfg.cap, file_cfg.cap, defaults.cap);
            keep(cfg.threads, file_cfg.threads, defaults.threads);
            keep(cfg.tier, file_cfg.tier, defaults.tier);
            keep(cfg.method, file_cfg.method, defaults.method);
            keep(cfg.emit, file_cfg.emit, defaults.emit);
            keep(cfg.out, file_cfg.out, defaults.out);
        }

        cfg.command = app.get_subcommands().front()->get_name();
        if (cfg.cap > kDefaultEnumerationCap && !cfg.unsafe)
            fail(errc::bad_argument, "cap above the default needs --unsafe");
        worker_threads() = cfg.threads > 0 ? unsigned(cfg.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());

        err << cfg.to_json().dump() << '\n';

        OutputTarget target(cfg.command == "sift" || cfg.command == "squares" ? "" : cfg.out, out);
        std::ostream& o = *target.stream;

        if (cfg.command == "factor") return run_factor(cfg, o);
        if (cfg.command == "squares") {
            ExperimentConfig c2 = cfg;
            c2.sieve = "squares";
            return run_sift(c2, out, err);
        }
        if (cfg.command == "sift") return run_sift(cfg, out, err);
        if (cfg.command == "classify") return run_classify(cfg, o);
        if (cfg.command == "variance") return run_variance(cfg, o);
        if (cfg.command == "moments") return run_moments(cfg, o);
        if (cfg.command == "gaps") return run_gaps(cfg, o);
        if (cfg.command == "spacings") return run_spacings(cfg, o);
        if (cfg.command == "mp-scan") return run_mp_scan(cfg, o);
        if (cfg.command == "fourier-wrap") return run_fourier_wrap(cfg, o);
        if (cfg.command == "verify") {
            auto results = run_verification(tier_from_string(cfg.tier), &o);
            if (!all_passed(results)) {
                err << "verification failed\n";
                return 1;
            }
            return 0;
        }
        fail(errc::bad_argument, "unknown subcommand");
    } catch (const error& e) {
        err << "error: " << e.what() << '\n';
        // malformed input exits 2; violated invariants and blown caps exit 1
        switch (e.kind()) {
            case errc::cap_exceeded:
            case errc::numerical_instability:
            case errc::factorization_timeout:
            case errc::overflow:
                return 1;
            default:
                return 2;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace qsift
