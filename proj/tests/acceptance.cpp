// Acceptance gate: one line per criterion, [PASS] or [FAIL], nonzero exit if
// anything failed. Criteria 1, 2, 9 and 10 drive the installed binary; the
// rest exercise the library against the brute-force oracles.
#include <episub/episub.hpp>

#include "corpus.hpp"
#include "oracles.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace episub;

namespace {

struct Check {
    std::string name;
    std::function<std::string()> body; // empty string = pass, otherwise failure note
};

Budget fresh() { return Budget(ResourceLimits{}); }

fs::path scratch() {
    fs::path p = fs::temp_directory_path() / "episub_acceptance";
    fs::create_directories(p);
    return p;
}

struct RunResult {
    int code;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    fs::path outfile = scratch() / "cli_out.txt";
    std::string cmd = corpus::episub_bin() + " " + args + " > " + outfile.string() + " 2>&1";
    int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(outfile);
    std::ostringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string data(const char* name) { return corpus::data_dir() + "/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. worked example end to end through the command line
std::string criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    fs::path report = scratch() / "lat.json";
    RunResult r = run_cli("decide --mode quasivariety " + data("two_lat.alg") + " --json-out " +
                          report.string());
    if (r.code != 1) return "expected exit 1, got " + std::to_string(r.code);
    json j = json::parse(slurp(report));
    if (j["verdict"] != "not-surjective") return "verdict " + j["verdict"].dump();
    if (j["witness"].is_null()) return "no witness in the report";

    // B isomorphic to the square, A to the three-element chain
    Budget budget = fresh();
    io::AlgebraDocument bdoc =
        io::parse_algebra_document(j["witness"]["b"].get<std::string>(), "witness");
    Algebra square = product(corpus::two_lat(), corpus::two_lat());
    if (canonical_form(bdoc.algebra, budget).encoding != canonical_form(square, budget).encoding)
        return "witness B is not the square";
    std::vector<int> a = j["witness"]["a_members"].get<std::vector<int>>();
    Subuniverse asub;
    asub.members = a;
    Algebra a_alg = induced(bdoc.algebra, asub);
    if (canonical_form(a_alg, budget).encoding !=
        canonical_form(corpus::chain_lattice(3), budget).encoding)
        return "witness A is not the three-element chain";

    // certificate must pass certificate-verify
    fs::path bfile = scratch() / "witness_b.alg";
    fs::path cfile = scratch() / "witness.cert";
    spit(bfile, j["witness"]["b"].get<std::string>());
    spit(cfile, j["witness"]["certificate"].get<std::string>());
    std::string alist;
    for (std::size_t i = 0; i < a.size(); ++i) alist += (i ? "," : "") + std::to_string(a[i]);
    RunResult v = run_cli("certificate-verify --b " + bfile.string() + " --a " + alist +
                          " --cert " + cfile.string() + " --targets " + data("two_lat.alg"));
    if (v.code != 0) return "certificate-verify rejected the witness: " + v.out;

    double dt = seconds_since(t0);
    if (dt >= 10.0) return "took " + std::to_string(dt) + "s";
    return "";
}

// 2. boolean contrast with oracle ground truth
std::string criterion2() {
    auto t0 = std::chrono::steady_clock::now();

    Algebra square = product(corpus::two_bool(), corpus::two_bool());
    std::vector<Algebra> targets{corpus::two_bool()};
    for (const auto& sub : oracle::all_subuniverses(square)) {
        if (static_cast<int>(sub.size()) == square.size) continue;
        if (oracle::is_epic(square, sub, targets))
            return "oracle found a proper epic subuniverse, surjective would be wrong";
    }

    RunResult r = run_cli("decide --mode quasivariety " + data("two_bool.alg"));
    if (r.code != 0) return "expected exit 0, got " + std::to_string(r.code);
    if (r.out.find("verdict: surjective") == std::string::npos) return "verdict line missing";

    double dt = seconds_since(t0);
    if (dt >= 10.0) return "took " + std::to_string(dt) + "s";
    return "";
}

// 3. the certificate biconditional on generated instances
std::string criterion3() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(0x7e07);
    auto sigs = corpus::mixed_signatures();
    int agreed = 0;
    const int wanted = 220;
    for (int round = 0; round < wanted; ++round) {
        const auto& sig = sigs[static_cast<std::size_t>(round) % sigs.size()];
        std::uniform_int_distribution<int> bsize(1, 5), tsize(1, 4), tcount(1, 3);
        Algebra b = corpus::random_algebra(rng, sig, bsize(rng));
        Budget budget = fresh();
        auto subs = subuniverses(b, budget);
        const auto& a = subs[rng() % subs.size()].members;
        std::vector<Algebra> targets;
        int k = tcount(rng);
        for (int i = 0; i < k; ++i) targets.push_back(corpus::random_algebra(rng, sig, tsize(rng)));

        bool epic = is_epic(b, a, targets, budget).epic;
        DeltaCertificate cert = delta_formula(b, a);
        bool functional = defines_function(cert, targets, budget);
        if (epic != functional)
            return "round " + std::to_string(round) + ": is_epic=" + std::to_string(epic) +
                   " but defines_function=" + std::to_string(functional);
        ++agreed;
    }
    double dt = seconds_since(t0);
    if (dt >= 300.0) return "took " + std::to_string(dt) + "s";
    if (agreed != wanted) return "only " + std::to_string(agreed) + " instances";
    return "";
}

// 4. replacing targets by their pairwise products
std::string criterion4() {
    std::mt19937_64 rng(0x4afd);
    auto sigs = corpus::mixed_signatures();
    const int wanted = 110;
    for (int round = 0; round < wanted; ++round) {
        const auto& sig = sigs[static_cast<std::size_t>(round) % sigs.size()];
        std::uniform_int_distribution<int> bsize(2, 4), ssize(1, 3), scount(1, 2);
        Algebra b = corpus::random_algebra(rng, sig, bsize(rng));
        Budget budget = fresh();
        auto subs = subuniverses(b, budget);
        const auto& a = subs[rng() % subs.size()].members;

        std::vector<Algebra> s;
        int k = scount(rng);
        for (int i = 0; i < k; ++i) s.push_back(corpus::random_algebra(rng, sig, ssize(rng)));
        std::vector<Algebra> paired;
        for (const auto& c : s)
            for (const auto& d : s) paired.push_back(product(c, d));

        if (is_epic(b, a, s, budget).epic != is_epic(b, a, paired, budget).epic)
            return "disagreement at round " + std::to_string(round);
    }
    return "";
}

// 5. hom engine vs all-maps filtering over a fixed corpus
std::string criterion5() {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<Algebra> pool;
    pool.push_back(corpus::two_lat());
    pool.push_back(corpus::chain_lattice(3));
    pool.push_back(corpus::two_bool());
    pool.push_back(corpus::heyting_chain(2));
    pool.push_back(corpus::heyting_chain(3));
    pool.push_back(corpus::median2());
    std::mt19937_64 rng(0x0c5);
    auto sigs = corpus::mixed_signatures();
    while (pool.size() < 36) {
        const auto& sig = sigs[pool.size() % sigs.size()];
        std::uniform_int_distribution<int> size_pick(1, 3);
        pool.push_back(corpus::random_algebra(rng, sig, size_pick(rng)));
    }

    int pairs = 0;
    for (const auto& src : pool)
        for (const auto& dst : pool) {
            if (!(src.sig == dst.sig) || src.size > 3 || dst.size > 3) continue;
            Budget budget = fresh();
            if (homs(src, dst, budget) != oracle::all_homs(src, dst))
                return "hom mismatch on corpus pair " + std::to_string(pairs);
            ++pairs;
        }
    if (pairs < 100) return "only " + std::to_string(pairs) + " comparable pairs";
    double dt = seconds_since(t0);
    if (dt >= 60.0) return "took " + std::to_string(dt) + "s";
    return "";
}

// 6. structure enumeration vs subset/partition brute force
std::string criterion6() {
    std::mt19937_64 rng(0x6a2c);
    auto sigs = corpus::mixed_signatures();
    std::vector<Algebra> cases{corpus::two_lat(), corpus::chain_lattice(3),
                               corpus::heyting_chain(3), corpus::median2(),
                               product(corpus::two_lat(), corpus::two_lat())};
    for (int round = 0; round < 30; ++round) {
        const auto& sig = sigs[static_cast<std::size_t>(round) % sigs.size()];
        std::uniform_int_distribution<int> size_pick(1, 4);
        cases.push_back(corpus::random_algebra(rng, sig, size_pick(rng)));
    }
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const Algebra& alg = cases[i];
        Budget budget = fresh();
        std::vector<std::vector<int>> subs;
        for (const auto& s : subuniverses(alg, budget)) subs.push_back(s.members);
        if (subs != oracle::all_subuniverses(alg))
            return "subuniverse mismatch on case " + std::to_string(i);
        std::vector<std::vector<int>> blocks;
        for (const auto& c : congruences(alg, budget)) blocks.push_back(c.block);
        std::sort(blocks.begin(), blocks.end());
        auto want = oracle::all_congruences(alg);
        std::sort(want.begin(), want.end());
        if (blocks != want) return "congruence mismatch on case " + std::to_string(i);
    }

    Budget budget = fresh();
    Algebra square = product(corpus::two_lat(), corpus::two_lat());
    if (subuniverses(square, budget).size() != 4) return "square subuniverse count is not 4";
    if (congruences(square, budget).size() != 4) return "square congruence count is not 4";
    return "";
}

// 7. term machinery against the clone oracle
std::string criterion7() {
    Budget budget = fresh();
    std::vector<Algebra> lat{corpus::two_lat()};

    int meet = lat[0].sig.index_of("meet");
    int join = lat[0].sig.index_of("join");
    auto pj = [&](int i, int j) { return Term::ap(join, {Term::v(i), Term::v(j)}); };
    Term median = Term::ap(meet, {pj(0, 1), Term::ap(meet, {pj(1, 2), pj(0, 2)})});
    if (!is_near_unanimity_term(lat, median, 3)) return "median rejected as a majority term";

    FreeAlgebra f3 = free_algebra(lat, 3, budget);
    if (f3.alg.size != 20) return "free algebra on 3 generators has size " + std::to_string(f3.alg.size);
    auto clone = oracle::ternary_clone(lat[0]);
    if (clone.size() != 20)
        return "independent ternary enumeration gives " + std::to_string(clone.size());

    std::vector<Algebra> boolean{corpus::two_bool()};
    auto p = find_pixley_term(boolean, budget);
    if (!p || !is_pixley_term(boolean, *p)) return "no pixley term on the boolean algebra";
    bool oracle_boolean = false;
    for (const auto& t : oracle::ternary_clone(boolean[0]))
        if (oracle::pointwise_pixley(boolean[0], t)) oracle_boolean = true;
    if (!oracle_boolean) return "clone oracle disagrees on the boolean pixley term";

    if (find_pixley_term(lat, budget)) return "pixley term claimed on the bounded lattice";
    for (const auto& t : clone)
        if (oracle::pointwise_pixley(lat[0], t)) return "clone oracle found a lattice pixley term";
    return "";
}

// 8. single-field certificate mutations all get caught with a correct reason
std::string criterion8() {
    Algebra square = product(corpus::two_lat(), corpus::two_lat());
    std::vector<Algebra> targets{corpus::two_lat()};
    std::vector<int> a{0, 1, 3};
    DeltaCertificate good = delta_formula(square, a);
    {
        Budget budget = fresh();
        if (!verify_witness(square, a, good, targets, budget).ok)
            return "baseline certificate does not verify";
    }

    std::mt19937_64 rng(0x8ab5);
    int falsified = 0, attempts = 0;
    while (falsified < 100) {
        if (++attempts > 2000) return "mutation loop failed to falsify 100 times";
        DeltaCertificate c = good;
        std::vector<WitnessStatus> allowed;
        switch (rng() % 6) {
        case 0: { // equation output
            auto& eq = c.equations[rng() % c.equations.size()];
            eq.result = static_cast<int>((static_cast<std::size_t>(eq.result) + 1 + rng() % 3) % 4);
            allowed = {WitnessStatus::equation_fails_in_b};
            break;
        }
        case 1: { // equation argument
            auto& eq = c.equations[rng() % c.equations.size()];
            if (eq.args.empty()) continue;
            int& arg = eq.args[rng() % eq.args.size()];
            arg = static_cast<int>((static_cast<std::size_t>(arg) + 1 + rng() % 3) % 4);
            // the new instance may coincide with a true one; only keep
            // mutations that break the diagram
            std::vector<int> elems;
            for (int v : eq.args) elems.push_back(c.element_of_var(v));
            if (square.op(eq.sym, elems) == c.element_of_var(eq.result)) continue;
            allowed = {WitnessStatus::equation_fails_in_b};
            break;
        }
        case 2: // universe size
            c.b_size = static_cast<int>(1 + rng() % 8);
            if (c.b_size == good.b_size) continue;
            allowed = {WitnessStatus::malformed};
            break;
        case 3: { // signature arity
            auto& sym = c.signature.symbols[rng() % c.signature.symbols.size()];
            sym.arity = static_cast<int>((static_cast<std::size_t>(sym.arity) + 1) % 3);
            allowed = {WitnessStatus::malformed};
            break;
        }
        case 4: { // input correspondence
            int& x = c.x_elements[rng() % c.x_elements.size()];
            x = static_cast<int>(rng() % 6);
            allowed = {WitnessStatus::malformed, WitnessStatus::inputs_outside_a,
                       WitnessStatus::equation_fails_in_b};
            break;
        }
        case 5: { // output correspondence
            int& y = c.y_elements[rng() % c.y_elements.size()];
            y = static_cast<int>(rng() % 6);
            allowed = {WitnessStatus::malformed, WitnessStatus::outputs_not_complement};
            break;
        }
        }

        Budget budget = fresh();
        VerifyResult res = verify_witness(square, a, c, targets, budget);
        if (res.ok) continue; // mutation happened to keep the certificate valid
        bool expected = false;
        for (WitnessStatus s : allowed)
            if (res.status == s) expected = true;
        if (!expected)
            return std::string("unexpected reason '") + to_string(res.status) +
                   "' on attempt " + std::to_string(attempts);
        ++falsified;
    }
    return "";
}

// 9. the two scan-class constructions give the same verdicts
std::string criterion9() {
    for (const char* file : {"two_lat.alg", "two_bool.alg", "two22_lat.alg", "three_chain.alg",
                             "heyting2.alg", "heyting3.alg", "median2.alg"}) {
        for (const char* mode : {"quasivariety", "variety"}) {
            fs::path jq = scratch() / "sq.json";
            fs::path ji = scratch() / "si.json";
            RunResult rq = run_cli(std::string("decide --mode ") + mode + " --s-class qrsi " +
                                   data(file) + " --json-out " + jq.string());
            RunResult ri = run_cli(std::string("decide --mode ") + mode + " --s-class is " +
                                   data(file) + " --json-out " + ji.string());
            if (rq.code != ri.code)
                return std::string(file) + " " + mode + ": exit " + std::to_string(rq.code) +
                       " vs " + std::to_string(ri.code);
            json a = json::parse(slurp(jq));
            json b = json::parse(slurp(ji));
            if (a["verdict"] != b["verdict"])
                return std::string(file) + " " + mode + ": " + a["verdict"].dump() + " vs " +
                       b["verdict"].dump();
        }
    }
    return "";
}

// 10. reports do not depend on the thread count
std::string criterion10() {
    std::vector<std::string> commands;
    for (const char* file : {"two_lat.alg", "two_bool.alg", "two22_lat.alg", "three_chain.alg",
                             "heyting2.alg", "heyting3.alg", "median2.alg"}) {
        for (const char* mode : {"quasivariety", "variety", "arithmetical"})
            commands.push_back(std::string("decide --mode ") + mode + " " + data(file));
        commands.push_back("subalgebras " + data(file));
        commands.push_back("congruences " + data(file));
        commands.push_back("canon " + data(file));
        commands.push_back("find-term majority " + data(file));
    }
    commands.push_back("homs " + data("two22_lat.alg") + " " + data("two_lat.alg"));
    commands.push_back("free --gens 2 " + data("two_lat.alg"));
    commands.push_back("epic-check --b " + data("two22_lat.alg") + " --a 0,1,3 --targets " +
                       data("two_lat.alg"));

    for (const std::string& cmd : commands) {
        fs::path j1 = scratch() / "d1.json";
        fs::path j8 = scratch() / "d8.json";
        fs::remove(j1);
        fs::remove(j8);
        RunResult a = run_cli(cmd + " --threads 1 --json-out " + j1.string());
        RunResult b = run_cli(cmd + " --threads 8 --json-out " + j8.string());
        if (a.code != b.code)
            return cmd + ": exit " + std::to_string(a.code) + " vs " + std::to_string(b.code);
        if (slurp(j1) != slurp(j8)) return cmd + ": reports differ between thread counts";
        if (a.out != b.out) return cmd + ": human output differs between thread counts";
    }
    return "";
}

} // namespace

int main() {
    std::vector<Check> checks{
        {"1. worked lattice example end to end", criterion1},
        {"2. boolean contrast with oracle ground truth", criterion2},
        {"3. epicness equals certificate functionality on 220 instances", criterion3},
        {"4. target-product reduction on 110 instances", criterion4},
        {"5. hom engine vs exhaustive filtering", criterion5},
        {"6. structure enumeration vs brute force", criterion6},
        {"7. term machinery and free algebra counts", criterion7},
        {"8. 100 falsifying certificate mutations caught", criterion8},
        {"9. qrsi and is scan classes agree on the corpus", criterion9},
        {"10. reports independent of thread count", criterion10},
    };

    int failures = 0;
    for (auto& c : checks) {
        std::string note;
        try {
            note = c.body();
        } catch (const std::exception& e) {
            note = std::string("exception: ") + e.what();
        }
        if (note.empty()) {
            std::cout << "[PASS] " << c.name << "\n";
        } else {
            std::cout << "[FAIL] " << c.name << ": " << note << "\n";
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
