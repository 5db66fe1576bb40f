#include <CLI11.hpp>

#include <episub/episub.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GlobalOpts {
    double limit_time = 0; // seconds, 0 = unlimited
    std::uint64_t limit_size = 0;
    int threads = 1;
    std::string cache_dir;
    std::uint64_t seed = 0; // reserved for randomized harnesses; runs are deterministic
};

episub::ResourceLimits limits_from(const GlobalOpts& g) {
    episub::ResourceLimits lims;
    if (g.limit_time > 0) lims.time_budget_seconds = g.limit_time;
    if (g.limit_size > 0) {
        lims.max_closure_size = g.limit_size;
        lims.max_class_size = g.limit_size;
    }
    return lims;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw episub::error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw episub::error("cannot write " + path);
    out << content;
}

episub::io::AlgebraDocument load_doc(const std::string& path) {
    return episub::io::parse_algebra_document(read_file(path), path);
}

std::vector<episub::io::AlgebraDocument> load_docs(const std::vector<std::string>& paths) {
    std::vector<episub::io::AlgebraDocument> docs;
    docs.reserve(paths.size());
    for (const auto& p : paths) docs.push_back(load_doc(p));
    for (std::size_t i = 1; i < docs.size(); ++i)
        if (!(docs[i].algebra.sig == docs[0].algebra.sig))
            throw episub::error(paths[i] + ": signature differs from " + paths[0]);
    return docs;
}

std::vector<episub::Algebra> algebras_of(const std::vector<episub::io::AlgebraDocument>& docs) {
    std::vector<episub::Algebra> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(d.algebra);
    return out;
}

void maybe_write_json(const std::string& path, const json& j) {
    if (!path.empty()) write_file(path, j.dump(2) + "\n");
}

std::string join_ints(std::span<const int> xs, const char* sep = " ") {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += sep;
        s += std::to_string(xs[i]);
    }
    return s;
}

void print_decision(const json& j) {
    std::cout << "mode: " << j["mode"].get<std::string>() << "\n";
    if (j.contains("nu_term"))
        std::cout << "nu term: "
                  << (j["nu_term"].is_null() ? std::string("none") : j["nu_term"].get<std::string>())
                  << "\n";
    if (j.contains("pixley_term"))
        std::cout << "pixley term: "
                  << (j["pixley_term"].is_null() ? std::string("none")
                                                 : j["pixley_term"].get<std::string>())
                  << "\n";
    std::cout << "fold: " << j["fold"].get<int>() << "\n";
    const auto& cls = j["s_class"];
    if (!cls["description"].get<std::string>().empty())
        std::cout << "scan class (" << cls["description"].get<std::string>() << "): "
                  << cls["members"].size() << " members\n";
    for (const auto& m : cls["members"])
        std::cout << "  size " << m["size"].get<int>() << "  " << m["canonical"].get<std::string>()
                  << "  " << m["provenance"].get<std::string>() << "\n";
    if (j["conditional_on_fsi_surrogate"].get<bool>())
        std::cout << "note: verdict is conditional on the FSI-universality surrogate\n";
    std::cout << "verdict: " << j["verdict"].get<std::string>() << "\n";
    if (!j["witness"].is_null()) {
        const auto& w = j["witness"];
        std::cout << "witness: B is a subalgebra of the product of class members [";
        bool first = true;
        for (const auto& f : w["product_factors"]) {
            if (!first) std::cout << ", ";
            std::cout << f.get<int>();
            first = false;
        }
        std::cout << "]\n";
        std::cout << "  B elements in the product: [";
        first = true;
        for (const auto& e : w["b_elements"]) {
            if (!first) std::cout << ", ";
            std::cout << e.get<int>();
            first = false;
        }
        std::cout << "]\n  A inside B: [";
        first = true;
        for (const auto& e : w["a_members"]) {
            if (!first) std::cout << ", ";
            std::cout << e.get<int>();
            first = false;
        }
        std::cout << "]\n";
        std::cout << "certificate:\n" << w["certificate"].get<std::string>();
    }
    const std::string reason = j["inapplicable_reason"].get<std::string>();
    if (!reason.empty()) std::cout << "reason: " << reason << "\n";
    const std::string limit = j["limit_reason"].get<std::string>();
    if (!limit.empty()) std::cout << "limit: " << limit << "\n";
    const auto& st = j["statistics"];
    std::cout << "statistics: products=" << st["products_built"].get<std::uint64_t>()
              << " subalgebras=" << st["subalgebras_scanned"].get<std::uint64_t>()
              << " pairs=" << st["pairs_checked"].get<std::uint64_t>()
              << " hom_calls=" << st["hom_calls"].get<std::uint64_t>() << "\n";
}

int verdict_exit_code(const std::string& verdict) {
    if (verdict == "surjective") return 0;
    if (verdict == "not-surjective") return 1;
    if (verdict == "inapplicable") return 2;
    return 3;
}

int run_decide(const GlobalOpts& g, const std::string& mode, int nu_arity, int fold,
               const std::string& s_class, const std::vector<std::string>& files,
               const std::string& json_out) {
    auto docs = load_docs(files);
    episub::DecideOptions opt;
    if (mode == "quasivariety")
        opt.mode = episub::DecideMode::quasivariety;
    else if (mode == "variety")
        opt.mode = episub::DecideMode::variety;
    else
        opt.mode = episub::DecideMode::arithmetical;
    opt.nu_arity = nu_arity;
    if (fold > 0) opt.fold = fold;
    opt.s_choice = s_class == "is" ? episub::SChoice::is_closure : episub::SChoice::qrsi;
    opt.threads = g.threads;

    std::string cache_file;
    if (!g.cache_dir.empty()) {
        fs::create_directories(g.cache_dir);
        cache_file = (fs::path(g.cache_dir) /
                      (episub::io::decide_cache_key(docs, opt) + ".json"))
                         .string();
        if (fs::exists(cache_file)) {
            std::string text = read_file(cache_file);
            json j = json::parse(text);
            print_decision(j);
            if (!json_out.empty()) write_file(json_out, text);
            return verdict_exit_code(j["verdict"].get<std::string>());
        }
    }

    episub::Budget budget(limits_from(g));
    auto algebras = algebras_of(docs);
    episub::DecisionReport rep = episub::decide_surjective_epis(algebras, opt, budget);
    json j = episub::io::decision_report_to_json(rep, docs);
    std::string text = j.dump(2) + "\n";
    if (!cache_file.empty() && rep.verdict != episub::Verdict::resource_limit)
        write_file(cache_file, text);
    print_decision(j);
    if (!json_out.empty()) write_file(json_out, text);
    return verdict_exit_code(j["verdict"].get<std::string>());
}

int run_epic_check(const GlobalOpts& g, const std::string& b_file, const std::string& a_list,
                   const std::vector<std::string>& target_files, const std::string& cert_out,
                   const std::string& json_out) {
    auto bdoc = load_doc(b_file);
    auto tdocs = load_docs(target_files);
    for (const auto& t : tdocs)
        if (!(t.algebra.sig == bdoc.algebra.sig))
            throw episub::error(t.name + ": signature differs from " + bdoc.name);
    std::vector<int> a = episub::io::parse_element_list(a_list);
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());

    episub::Budget budget(limits_from(g));
    auto targets = algebras_of(tdocs);
    episub::EpicResult res = episub::is_epic(bdoc.algebra, a, targets, budget);

    json j;
    j["b"] = bdoc.name;
    j["a_members"] = a;
    j["epic"] = res.epic;
    if (res.epic) {
        episub::DeltaCertificate cert = episub::delta_formula(bdoc.algebra, a);
        std::string text = episub::io::emit_certificate(cert);
        j["certificate"] = text;
        j["counterexample"] = nullptr;
        std::cout << "epic: homomorphisms from " << bdoc.name
                  << " into every target are determined on {" << join_ints(a, ",") << "}\n";
        if (!cert_out.empty()) {
            write_file(cert_out, text);
            std::cout << "certificate written to " << cert_out << "\n";
        }
    } else {
        const auto& cx = *res.counterexample;
        json c;
        c["target"] = tdocs[static_cast<std::size_t>(cx.target_index)].name;
        c["g"] = cx.g;
        c["g2"] = cx.g2;
        c["element"] = cx.element;
        j["certificate"] = nullptr;
        j["counterexample"] = c;
        std::cout << "not epic: two homomorphisms into "
                  << tdocs[static_cast<std::size_t>(cx.target_index)].name
                  << " agree on {" << join_ints(a, ",") << "} but differ at element " << cx.element
                  << "\n";
        std::cout << "  g  = [" << join_ints(cx.g, ", ") << "]\n";
        std::cout << "  g' = [" << join_ints(cx.g2, ", ") << "]\n";
    }
    maybe_write_json(json_out, j);
    return res.epic ? 0 : 1;
}

int run_certificate_verify(const GlobalOpts& g, const std::string& b_file, const std::string& a_list,
                           const std::string& cert_file, const std::vector<std::string>& target_files,
                           const std::string& json_out) {
    auto bdoc = load_doc(b_file);
    auto tdocs = load_docs(target_files);
    std::vector<int> a = episub::io::parse_element_list(a_list);
    episub::DeltaCertificate cert = episub::io::parse_certificate(read_file(cert_file), cert_file);

    episub::Budget budget(limits_from(g));
    auto targets = algebras_of(tdocs);
    episub::VerifyResult res = episub::verify_witness(bdoc.algebra, a, cert, targets, budget);

    json j;
    j["ok"] = res.ok;
    j["status"] = episub::to_string(res.status);
    j["detail"] = res.detail;
    std::cout << (res.ok ? "valid" : "invalid") << ": " << episub::to_string(res.status);
    if (!res.detail.empty()) std::cout << " (" << res.detail << ")";
    std::cout << "\n";
    maybe_write_json(json_out, j);
    return res.ok ? 0 : 1;
}

int run_homs(const GlobalOpts& g, const std::string& src_file, const std::string& dst_file,
             bool count_only, const std::string& json_out) {
    auto src = load_doc(src_file);
    auto dst = load_doc(dst_file);
    if (!(src.algebra.sig == dst.algebra.sig))
        throw episub::error(dst_file + ": signature differs from " + src_file);
    episub::Budget budget(limits_from(g));
    auto hs = episub::homs(src.algebra, dst.algebra, budget);
    json j;
    j["count"] = hs.size();
    if (count_only) {
        std::cout << hs.size() << "\n";
    } else {
        json arr = json::array();
        for (const auto& h : hs) {
            arr.push_back(h);
            std::cout << join_ints(h) << "\n";
        }
        j["homs"] = arr;
    }
    maybe_write_json(json_out, j);
    return 0;
}

int run_subalgebras(const GlobalOpts& g, const std::string& file, const std::string& json_out) {
    auto doc = load_doc(file);
    episub::Budget budget(limits_from(g));
    auto subs = episub::subuniverses(doc.algebra, budget);
    json arr = json::array();
    for (const auto& s : subs) {
        arr.push_back(s.members);
        std::cout << "{" << join_ints(s.members, ",") << "}\n";
    }
    json j;
    j["count"] = subs.size();
    j["subuniverses"] = arr;
    maybe_write_json(json_out, j);
    return 0;
}

int run_congruences(const GlobalOpts& g, const std::string& file, const std::string& json_out) {
    auto doc = load_doc(file);
    episub::Budget budget(limits_from(g));
    auto cons = episub::congruences(doc.algebra, budget);
    json arr = json::array();
    for (const auto& c : cons) {
        arr.push_back(c.block_sets());
        std::cout << episub::detail::partition_to_string(c) << "\n";
    }
    json j;
    j["count"] = cons.size();
    j["congruences"] = arr;
    maybe_write_json(json_out, j);
    return 0;
}

int run_free(const GlobalOpts& g, int gens, const std::vector<std::string>& files,
             const std::string& json_out) {
    auto docs = load_docs(files);
    episub::Budget budget(limits_from(g));
    auto algebras = algebras_of(docs);
    episub::FreeAlgebra fa = episub::free_algebra(algebras, gens, budget);
    json j;
    j["size"] = fa.alg.size;
    j["generators"] = fa.generators;
    std::cout << "size " << fa.alg.size << "\n";
    std::cout << "generators: " << join_ints(fa.generators) << "\n";
    maybe_write_json(json_out, j);
    return 0;
}

int run_find_term(const GlobalOpts& g, const std::string& kind, int nu_arity,
                  const std::vector<std::string>& files, const std::string& json_out) {
    auto docs = load_docs(files);
    episub::Budget budget(limits_from(g));
    auto algebras = algebras_of(docs);
    std::optional<episub::Term> term;
    if (kind == "nu")
        term = episub::find_nu_term(algebras, nu_arity, budget);
    else if (kind == "majority")
        term = episub::find_majority_term(algebras, budget);
    else
        term = episub::find_pixley_term(algebras, budget);
    json j;
    if (term) {
        std::string s = episub::term_to_string(*term, docs[0].algebra.sig);
        j["term"] = s;
        std::cout << s << "\n";
    } else {
        j["term"] = nullptr;
        std::cout << "none\n";
    }
    maybe_write_json(json_out, j);
    return term ? 0 : 1;
}

int run_canon(const GlobalOpts& g, const std::string& file, const std::string& json_out) {
    auto doc = load_doc(file);
    episub::Budget budget(limits_from(g));
    episub::CanonicalForm canon = episub::canonical_form(doc.algebra, budget);
    episub::io::AlgebraDocument out;
    out.name = doc.name;
    out.algebra = episub::relabeled(doc.algebra, canon.relabel);
    std::string text = episub::io::emit_algebra_document(out);
    json j;
    j["digest"] = canon.digest();
    j["relabel"] = canon.relabel;
    j["document"] = text;
    std::cout << "digest " << canon.digest() << "\n" << text;
    maybe_write_json(json_out, j);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"epimorphism and substructure toolkit for finite algebras"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--limit-time", g.limit_time, "wall-clock budget in seconds");
    app.add_option("--limit-size", g.limit_size, "cap on closure and enumeration sizes");
    app.add_option("--threads", g.threads, "worker threads for scans")->check(CLI::PositiveNumber);
    app.add_option("--cache", g.cache_dir, "cache directory for decide reports");
    app.add_option("--seed", g.seed, "seed for randomized harnesses (runs stay deterministic)");

    int rc = 0;
    auto guard = [&rc](auto&& body) {
        return [&rc, body = std::forward<decltype(body)>(body)]() {
            try {
                rc = body();
            } catch (const episub::limit_error& e) {
                std::cerr << "resource limit: " << e.what() << "\n";
                rc = 3;
            } catch (const episub::error& e) {
                std::cerr << "error: " << e.what() << "\n";
                rc = 2;
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                rc = 2;
            }
        };
    };

    {
        auto* cmd = app.add_subcommand("decide", "decide whether epimorphisms into the generated "
                                                 "class must be surjective");
        cmd->fallthrough();
        auto mode = std::make_shared<std::string>();
        auto nu_arity = std::make_shared<int>(3);
        auto fold = std::make_shared<int>(-1);
        auto s_class = std::make_shared<std::string>("qrsi");
        auto files = std::make_shared<std::vector<std::string>>();
        auto json_out = std::make_shared<std::string>();
        cmd->add_option("--mode", *mode, "quasivariety, variety or arithmetical")
            ->required()
            ->check(CLI::IsMember({"quasivariety", "variety", "arithmetical"}));
        cmd->add_option("--nu-arity", *nu_arity, "near-unanimity arity to search for")
            ->check(CLI::Range(3, 6));
        cmd->add_option("--fold", *fold, "product fold bound (default: arity - 1)")
            ->check(CLI::Range(2, 8));
        cmd->add_option("--s-class", *s_class, "scan class construction")
            ->check(CLI::IsMember({"qrsi", "is"}));
        cmd->add_option("--json-out", *json_out, "write the machine-readable report here");
        cmd->add_option("files", *files, "generating algebras")->required()->expected(-1);
        cmd->callback(guard([&g, mode, nu_arity, fold, s_class, files, json_out] {
            return run_decide(g, *mode, *nu_arity, *fold, *s_class, *files, *json_out);
        }));
    }
    {
        auto* cmd = app.add_subcommand("epic-check", "check whether a subuniverse sits epically");
        cmd->fallthrough();
        auto b_file = std::make_shared<std::string>();
        auto a_list = std::make_shared<std::string>();
        auto targets = std::make_shared<std::vector<std::string>>();
        auto cert_out = std::make_shared<std::string>();
        auto json_out = std::make_shared<std::string>();
        cmd->add_option("--b", *b_file, "ambient algebra document")->required();
        cmd->add_option("--a", *a_list, "subuniverse elements, e.g. 0,1,3")->required();
        cmd->add_option("--targets", *targets, "target algebras")->required()->expected(-1);
        cmd->add_option("--emit-certificate", *cert_out, "write the certificate here when epic");
        cmd->add_option("--json-out", *json_out, "write the machine-readable report here");
        cmd->callback(guard([&g, b_file, a_list, targets, cert_out, json_out] {
            return run_epic_check(g, *b_file, *a_list, *targets, *cert_out, *json_out);
        }));
    }
    {
        auto* cmd = app.add_subcommand("certificate-verify", "verify an epicity certificate");
        cmd->fallthrough();
        auto b_file = std::make_shared<std::string>();
        auto a_list = std::make_shared<std::string>();
        auto cert_file = std::make_shared<std::string>();
        auto targets = std::make_shared<std::vector<std::string>>();
        auto json_out = std::make_shared<std::string>();
        cmd->add_option("--b", *b_file, "ambient algebra document")->required();
        cmd->add_option("--a", *a_list, "subuniverse elements")->required();
        cmd->add_option("--cert", *cert_file, "certificate file")->required();
        cmd->add_option("--targets", *targets, "target algebras")->required()->expected(-1);
        cmd->add_option("--json-out", *json_out, "write the machine-readable report here");
        cmd->callback(guard([&g, b_file, a_list, cert_file, targets, json_out] {
            return run_certificate_verify(g, *b_file, *a_list, *cert_file, *targets, *json_out);
        }));
    }
    {
        auto* cmd = app.add_subcommand("homs", "enumerate homomorphisms");
        cmd->fallthrough();
        auto src = std::make_shared<std::string>();
        auto dst = std::make_shared<std::string>();
        auto count_only = std::make_shared<bool>(false);
        auto json_out = std::make_shared<std::string>();
        cmd->add_option("src", *src, "source algebra document")->required();
        cmd->add_option("dst", *dst, "target algebra document")->required();
        cmd->add_flag("--count-only", *count_only, "print only the number of homomorphisms");
        cmd->add_option("--json-out", *json_out, "write the machine-readable report here");
        cmd->callback(guard([&g, src, dst, count_only, json_out] {
            return run_homs(g, *src, *dst, *count_only, *json_out);
        }));
    }
    {
        auto* cmd = app.add_subcommand("subalgebras", "list all subuniverses");
        cmd->fallthrough();
        auto file = std::make_shared<std::string>();
        auto json_out = std::make_shared<std::string>();
        cmd->add_option("file", *file, "algebra document")->required();
        cmd->add_option("--json-out", *json_out, "write the machine-readable report here");
        cmd->callback(guard([&g, file, json_out] { return run_subalgebras(g, *file, *json_out); }));
    }
    {
        auto* cmd = app.add_subcommand("congruences", "list the congruence lattice");
        cmd->fallthrough();
        auto file = std::make_shared<std::string>();
        auto json_out = std::make_shared<std::string>();
        cmd->add_option("file", *file, "algebra document")->required();
        cmd->add_option("--json-out", *json_out, "write the machine-readable report here");
        cmd->callback(guard([&g, file, json_out] { return run_congruences(g, *file, *json_out); }));
    }
    {
        auto* cmd = app.add_subcommand("free", "build the free algebra of the class");
        cmd->fallthrough();
        auto gens = std::make_shared<int>(0);
        auto files = std::make_shared<std::vector<std::string>>();
        auto json_out = std::make_shared<std::string>();
        cmd->add_option("--gens", *gens, "number of generators")->required()->check(CLI::Range(0, 8));
        cmd->add_option("files", *files, "generating algebras")->required()->expected(-1);
        cmd->add_option("--json-out", *json_out, "write the machine-readable report here");
        cmd->callback(guard([&g, gens, files, json_out] {
            return run_free(g, *gens, *files, *json_out);
        }));
    }
    {
        auto* cmd = app.add_subcommand("find-term", "search for a special term");
        cmd->fallthrough();
        auto kind = std::make_shared<std::string>();
        auto nu_arity = std::make_shared<int>(3);
        auto files = std::make_shared<std::vector<std::string>>();
        auto json_out = std::make_shared<std::string>();
        cmd->add_option("kind", *kind, "nu, majority or pixley")
            ->required()
            ->check(CLI::IsMember({"nu", "majority", "pixley"}));
        cmd->add_option("--nu-arity", *nu_arity, "arity for nu searches")->check(CLI::Range(3, 6));
        cmd->add_option("files", *files, "class members")->required()->expected(-1);
        cmd->add_option("--json-out", *json_out, "write the machine-readable report here");
        cmd->callback(guard([&g, kind, nu_arity, files, json_out] {
            return run_find_term(g, *kind, *nu_arity, *files, *json_out);
        }));
    }
    {
        auto* cmd = app.add_subcommand("canon", "canonical form of an algebra");
        cmd->fallthrough();
        auto file = std::make_shared<std::string>();
        auto json_out = std::make_shared<std::string>();
        cmd->add_option("file", *file, "algebra document")->required();
        cmd->add_option("--json-out", *json_out, "write the machine-readable report here");
        cmd->callback(guard([&g, file, json_out] { return run_canon(g, *file, *json_out); }));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    return rc;
}
