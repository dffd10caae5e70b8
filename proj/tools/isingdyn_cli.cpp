#include "isingdyn/dynamics.hpp"
#include "isingdyn/errors.hpp"
#include "isingdyn/gadgets.hpp"
#include "isingdyn/ising.hpp"
#include "isingdyn/minus_one.hpp"
#include "isingdyn/polynomial.hpp"
#include "isingdyn/real.hpp"
#include "isingdyn/reduction.hpp"
#include "isingdyn/tree.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

using namespace isingdyn;
using json = nlohmann::json;

namespace {

enum Exit { Ok = 0, Generic = 1, CertificateFailure = 2, Budget = 3, Usage = 4 };

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::BudgetExceeded:
        case ErrorKind::TooLarge:
        case ErrorKind::NoConvergence:
            return Budget;
        case ErrorKind::CertificationFailed:
        case ErrorKind::CoverViolated:
        case ErrorKind::HypothesisFailed:
        case ErrorKind::InconsistentOracle:
        case ErrorKind::SeparationFailure:
            return CertificateFailure;
        case ErrorKind::InvalidArgument:
        case ErrorKind::PreconditionViolated:
        case ErrorKind::DegreeViolation:
        case ErrorKind::NoPerfectMatching:
        case ErrorKind::ZeroDenominator:
            return Usage;
        default:
            return Generic;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    require(bool(in), ErrorKind::InvalidArgument, "cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    require(bool(out), ErrorKind::InvalidArgument, "cannot write " + path);
    out << text;
}

// "i", "3/5+4/5 i", or an angle such as "pi/3" (resolved to a rational point within 1e-40).
UnitPoint parse_unit(const std::string& s) {
    if (s.find("pi") != std::string::npos)
        return rational_circle_point(parse_angle(s), mpq_class(1, mpz_class("10000000000000000000000000000000000000000")));
    return UnitPoint(parse_gaussian(s));
}

struct Common {
    bool json_out = false;
    unsigned precision = 0;
    std::string config_out;
};

void emit(const Common& c, const json& config, const json& result, const std::string& text) {
    json doc{{"config", config}, {"result", result}};
    if (!c.config_out.empty()) write_file(c.config_out, config.dump(2) + "\n");
    if (c.json_out)
        std::cout << doc.dump(2) << "\n";
    else
        std::cout << text;
}

json base_config(const std::string& cmd, const Common& c) {
    return {{"command", cmd}, {"precision_bits", c.precision ? c.precision : default_precision_bits()}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ising partition functions on the unit circle: dynamics, gadgets, reductions"};
    app.require_subcommand(1);
    Common common;
    app.add_flag("--json", common.json_out, "print the resolved config and result as JSON");
    app.add_option("--precision", common.precision, "working precision in bits (default from ISINGDYN_PREC_BITS)");
    app.add_option("--config-out", common.config_out, "also write the resolved config to this file");

    // eval
    auto* eval = app.add_subcommand("eval", "exact Z_G(lambda, b)");
    std::string graph_path, lambda_s = "i", b_s = "1/2";
    std::vector<std::string> pins;
    eval->add_option("--graph", graph_path, "graph JSON file")->required();
    eval->add_option("--lambda", lambda_s, "field, e.g. i or 3/5+4/5 i")->required();
    eval->add_option("--b", b_s, "edge activity")->required();
    eval->add_option("--pin", pins, "pin a vertex, e.g. 0:+ or 3:-");

    // field
    auto* field = app.add_subcommand("field", "tree implementing a target field");
    unsigned delta = 3;
    std::string target_s = "-1", eps_s = "1/100", dot_out, tree_out;
    std::uint64_t seed_rng = 1;
    field->add_option("--delta", delta, "maximum degree")->required();
    field->add_option("--b", b_s, "edge activity")->required();
    field->add_option("--lambda", lambda_s, "field on every vertex")->required();
    field->add_option("--target", target_s, "target field (point or angle such as pi/3)")->required();
    field->add_option("--eps", eps_s, "precision");
    field->add_option("--dot", dot_out, "write the DOT tree here instead of stdout");
    field->add_option("--tree-out", tree_out, "write the tree DAG as JSON");
    field->add_option("--seed", seed_rng, "seed of the seed-pair search");

    // orbit
    auto* orb = app.add_subcommand("orbit", "orbit of f_{lambda,k} as CSV");
    unsigned k = 2;
    std::string z0_s = "1";
    std::size_t steps = 10;
    orb->add_option("--lambda", lambda_s)->required();
    orb->add_option("--k", k)->required();
    orb->add_option("--b", b_s)->required();
    orb->add_option("--z0", z0_s, "starting point");
    orb->add_option("--n", steps, "number of steps");

    // zeros
    auto* zeros = app.add_subcommand("zeros", "zeros of the partition polynomial in lambda, as CSV");
    std::string tree_path;
    double tol = 1e-8;
    auto* zg = zeros->add_option("--graph", graph_path, "graph JSON file");
    auto* zt = zeros->add_option("--tree", tree_path, "tree DAG JSON file");
    zg->excludes(zt);
    zeros->add_option("--b", b_s)->required();
    zeros->add_option("--tol", tol, "allowed | |z| - 1 | for the unit-circle check");

    // threshold
    auto* thr = app.add_subcommand("threshold", "parabolic threshold lambda_k(b)");
    thr->add_option("--k", k)->required();
    thr->add_option("--b", b_s)->required();

    // cover
    auto* cov = app.add_subcommand("cover", "covering certificate for one of the covering lemmas");
    std::string lemma = "easy-even", xi_s, xi2_s;
    unsigned p_maps = 1;
    bool from_seeds = false;
    cov->add_option("--lemma", lemma, "easy-odd | easy-even | three-maps | remaining")
        ->check(CLI::IsMember({"easy-odd", "easy-even", "three-maps", "remaining"}));
    cov->add_option("--xi", xi_s, "field of the (first) map");
    cov->add_option("--xi2", xi2_s, "field of the second map (easy-even)");
    cov->add_option("--k", k, "degree (or m for remaining)");
    cov->add_option("--p", p_maps, "p for three-maps");
    cov->add_option("--b", b_s)->required();
    cov->add_flag("--from-seeds", from_seeds, "use the seed pair found for --delta and --lambda (easy-even)");
    cov->add_option("--delta", delta);
    cov->add_option("--lambda", lambda_s);

    // reduce
    auto* red = app.add_subcommand("reduce", "Z_G(lambda, bhat) from a noisy norm/argument oracle");
    std::string mode_s = "ideal", noise_s = "exact", search_s = "norm", bhat_s, transcript_out;
    std::uint64_t seed = 0;
    bool paper = false, shuffle = false;
    red->add_option("--graph", graph_path)->required();
    red->add_option("--lambda", lambda_s)->required();
    red->add_option("--b", b_s, "edge activity b; bhat = b_k")->required();
    red->add_option("--k", k, "path length of the bhat edge");
    red->add_option("--bhat", bhat_s, "use this bhat directly (ideal mode)");
    red->add_option("--mode", mode_s)->check(CLI::IsMember({"ideal", "gadget"}));
    red->add_option("--search", search_s)->check(CLI::IsMember({"norm", "arg"}));
    red->add_option("--noise", noise_s)->check(CLI::IsMember({"exact", "factor", "adversarial"}));
    red->add_option("--seed", seed, "oracle noise seed");
    red->add_flag("--paper-constants", paper, "use the proof's epsilon chain instead of the lattice bound");
    red->add_flag("--shuffle-edges", shuffle, "telescope the edges in a seed-dependent order");
    red->add_option("--transcript", transcript_out, "write the oracle transcript (every query) here");

    // matchings
    auto* mat = app.add_subcommand("matchings", "perfect matchings and the lambda = -1 chain");
    bool check_chain = false;
    std::string emit_dir;
    mat->add_option("--graph", graph_path)->required();
    mat->add_option("--b", b_s, "b with (1-b)/(1+b) = p/q");
    mat->add_flag("--check-chain", check_chain, "check every identity of the chain exactly");
    mat->add_option("--emit-dir", emit_dir, "write G', G'' and G''' as graph JSON files here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return Usage;
    }

    try {
        std::optional<PrecisionScope> prec;
        if (common.precision) prec.emplace(common.precision);

        if (*eval) {
            Graph g = Graph::from_json(read_file(graph_path));
            UnitPoint lam = parse_unit(lambda_s);
            mpq_class b = parse_rational(b_s);
            for (const std::string& p : pins) {
                auto c = p.find(':');
                require(c != std::string::npos && c + 2 == p.size() && (p.back() == '+' || p.back() == '-'),
                        ErrorKind::InvalidArgument, "pin must look like 3:+ or 3:-");
                g.pin(std::stoi(p.substr(0, c)), p.back() == '+' ? 1 : -1);
            }
            GaussianRational z = g.num_vertices() <= 24 ? partition_bruteforce(g, lam.value(), b)
                                                        : partition_reduced(g, lam.value(), b);
            json cfg = base_config("eval", common);
            cfg.update({{"graph", json::parse(g.to_json())}, {"lambda", lam.str()}, {"b", rational_str(b)}});
            emit(common, cfg, {{"Z", z.str()}}, "Z = " + z.str() + "\n");
            return Ok;
        }

        if (*field) {
            UnitPoint lam = parse_unit(lambda_s);
            UnitPoint target = parse_unit(target_s);
            mpq_class b = parse_rational(b_s), eps = parse_rational(eps_s);
            SeedOptions so;
            so.rng_seed = seed_rng;
            SeedPair seeds = seed_pair_search(delta, b, lam, so);
            FieldResult fr = implement_field(seeds, delta, b, lam, target, eps);
            // independent recheck of the tree
            UnitPoint f = tree_field(fr.tree, lam, b);
            GaussianRational d = f.value() - target.value();
            mpq_class dist_sq = d.norm();
            bool verified = dist_sq <= eps * eps && fr.tree.max_degree() <= delta && fr.tree.root_degree() == 1;
            std::string dot = fr.tree.to_dot(lam.value(), b);
            if (!dot_out.empty()) write_file(dot_out, dot);
            if (!tree_out.empty()) write_file(tree_out, fr.tree.to_json());
            json cfg = base_config("field", common);
            cfg.update({{"delta", delta},
                        {"b", rational_str(b)},
                        {"lambda", lam.str()},
                        {"target", target.str()},
                        {"eps", rational_str(eps)},
                        {"seed", seed_rng}});
            double dist = std::sqrt(dist_sq.get_d());
            json res{{"field", f.str()},
                     {"distance", dist},
                     {"dist_sq", rational_str(dist_sq)},
                     {"verified", verified},
                     {"tree_size", fr.tree.size().get_str()},
                     {"predicted_size", fr.plan.predicted_size.get_str()},
                     {"plan", json::parse(fr.plan.to_json())}};
            std::ostringstream text;
            if (dot_out.empty()) text << dot;
            text << "// distance = " << dist << "\n// verified = " << (verified ? "true" : "false") << "\n";
            emit(common, cfg, res, text.str());
            return verified ? Ok : CertificateFailure;
        }

        if (*orb) {
            UnitPoint lam = parse_unit(lambda_s), z0 = parse_unit(z0_s);
            mpq_class b = parse_rational(b_s);
            auto pts = orbit(MapParams(lam, k, b), z0, steps);
            json cfg = base_config("orbit", common);
            cfg.update({{"lambda", lam.str()}, {"k", k}, {"b", rational_str(b)}, {"z0", z0.str()}, {"n", steps}});
            std::string csv = orbit_csv(pts);
            emit(common, cfg, {{"csv", csv}}, csv);
            return Ok;
        }

        if (*zeros) {
            require(!graph_path.empty() || !tree_path.empty(), ErrorKind::InvalidArgument, "give --graph or --tree");
            mpq_class b = parse_rational(b_s);
            PolyQ poly = graph_path.empty() ? partition_polynomial(RootedTree::from_json(read_file(tree_path)), b)
                                            : partition_polynomial(Graph::from_json(read_file(graph_path)), b);
            auto roots = polynomial_roots(poly);
            std::ostringstream csv;
            csv << "re,im,modulus,multiplicity,error\n";
            double worst = 0;
            json rj = json::array();
            for (const auto& r : roots) {
                double dev = std::fabs(to_double(r.modulus) - 1);
                worst = std::max(worst, dev);
                csv << to_string(r.value.re, 20) << "," << to_string(r.value.im, 20) << ","
                    << to_string(r.modulus, 20) << "," << r.multiplicity << "," << to_string(r.error, 6) << "\n";
                rj.push_back({{"re", to_string(r.value.re, 20)},
                              {"im", to_string(r.value.im, 20)},
                              {"multiplicity", r.multiplicity}});
            }
            bool ok = worst <= tol;
            json cfg = base_config("zeros", common);
            cfg.update({{"source", graph_path.empty() ? tree_path : graph_path}, {"b", rational_str(b)}, {"tol", tol}});
            emit(common, cfg, {{"roots", rj}, {"max_modulus_deviation", worst}, {"on_circle", ok}}, csv.str());
            return ok ? Ok : CertificateFailure;
        }

        if (*thr) {
            mpq_class b = parse_rational(b_s);
            ThresholdResult t = lambda_threshold(k, b);
            json cfg = base_config("threshold", common);
            cfg.update({{"k", k}, {"b", rational_str(b)}});
            json res{{"exists", t.exists}};
            std::ostringstream text;
            if (t.exists) {
                res.update({{"re_parabolic", rational_str(t.re_parabolic)},
                            {"lambda_k", {to_string(t.lambda_k.re, 30), to_string(t.lambda_k.im, 30)}},
                            {"arg_lambda_k", to_string(t.arg_lambda_k, 30)},
                            {"err", to_string(t.err, 6)}});
                if (t.lambda_k_exact) res["lambda_k_exact"] = t.lambda_k_exact->str();
                text << "lambda_" << k << " = " << to_string(t.lambda_k.re, 30) << " + " << to_string(t.lambda_k.im, 30)
                     << " i\narg = " << to_string(t.arg_lambda_k, 30) << "\n";
            } else {
                text << "no parabolic threshold\n";
            }
            emit(common, cfg, res, text.str());
            return Ok;
        }

        if (*cov) {
            mpq_class b = parse_rational(b_s);
            CoveringCertificate cert;
            json cfg = base_config("cover", common);
            cfg.update({{"lemma", lemma}, {"b", rational_str(b)}, {"k", k}});
            if (lemma == "easy-even") {
                UnitPoint x1, x2;
                if (from_seeds) {
                    SeedPair sp = seed_pair_search(delta, b, parse_unit(lambda_s));
                    x1 = sp.xi1;
                    x2 = sp.xi2;
                    cfg.update({{"delta", delta}, {"lambda", parse_unit(lambda_s).str()}});
                } else {
                    require(!xi_s.empty() && !xi2_s.empty(), ErrorKind::InvalidArgument, "easy-even needs --xi and --xi2");
                    x1 = parse_unit(xi_s);
                    x2 = parse_unit(xi2_s);
                }
                cfg.update({{"xi", x1.str()}, {"xi2", x2.str()}});
                cert = verify_easy_even(x1, x2, k, b);
            } else {
                require(!xi_s.empty(), ErrorKind::InvalidArgument, lemma + " needs --xi");
                UnitPoint x = parse_unit(xi_s);
                cfg["xi"] = x.str();
                if (lemma == "easy-odd") cert = verify_easy_odd(x, k, b);
                if (lemma == "three-maps") {
                    cfg["p"] = p_maps;
                    cert = verify_three_maps(x, k, b, p_maps);
                }
                if (lemma == "remaining") cert = verify_remaining(x, k, b);
            }
            json lengths = json::array();
            for (const auto& l : cert.image_lengths) lengths.push_back(to_string(l, 20));
            json res{{"lemma", covering_lemma_name(cert.lemma)},
                     {"arc_length", to_string(cert.arc_length, 20)},
                     {"image_lengths", lengths},
                     {"covers", cert.covers},
                     {"holds", cert.holds},
                     {"verdict", cert.verdict},
                     {"hypotheses", cert.hypotheses}};
            std::ostringstream text;
            text << "holds = " << (cert.holds ? "true" : "false") << "\n" << cert.verdict << "\n";
            for (const auto& h : cert.hypotheses) text << "  " << h << "\n";
            emit(common, cfg, res, text.str());
            return cert.holds ? Ok : CertificateFailure;
        }

        if (*red) {
            Graph g = Graph::from_json(read_file(graph_path));
            UnitPoint lam = parse_unit(lambda_s);
            mpq_class b = parse_rational(b_s);
            bool gadget = mode_s == "gadget";
            require(!(gadget && !bhat_s.empty()), ErrorKind::InvalidArgument, "--bhat applies to ideal mode only");
            mpq_class bhat = bhat_s.empty() ? path_transfer(k, b).b_k : parse_rational(bhat_s);
            OracleConfig oc;
            oc.mode = parse_noise_mode(noise_s);
            oc.seed = seed;
            oc.record = true;
            Oracle oracle(lam, gadget ? b : bhat, oc);
            RatioOptions opt;
            opt.search = search_s == "arg" ? SearchKind::Arg : SearchKind::Norm;
            opt.paper_constants = paper;
            std::optional<GadgetContext> gc;
            if (gadget) {
                opt.mode = ProbeMode::Gadget;
                ReductionParams p0 = ReductionParams::relaxed_for(g.num_vertices(), g.edge_count(), k, bhat, lam);
                gc = make_gadget_context(3, b, lam, p0.epsilon0);
                opt.gadget = &*gc;
            }
            std::vector<int> order(g.edges().size());
            std::iota(order.begin(), order.end(), 0);
            if (shuffle) {
                std::mt19937_64 rng(seed);
                std::shuffle(order.begin(), order.end(), rng);
            }
            OracleRun run = partition_via_oracle(g, oracle, k, bhat, opt, order);
            if (!transcript_out.empty()) write_file(transcript_out, oracle.transcript_json() + "\n");
            std::optional<GaussianRational> truth;
            if (g.num_vertices() <= 24) truth = partition_bruteforce(g, lam.value(), bhat);
            bool ok = !truth || *truth == run.value;
            json cfg = base_config("reduce", common);
            cfg.update({{"graph", json::parse(g.to_json())},
                        {"lambda", lam.str()},
                        {"b", rational_str(b)},
                        {"k", k},
                        {"bhat", rational_str(bhat)},
                        {"mode", mode_s},
                        {"search", search_s},
                        {"noise", noise_s},
                        {"seed", seed},
                        {"paper_constants", paper},
                        {"edge_order", order}});
            json res = json::parse(run.to_json());
            if (truth) res["bruteforce"] = truth->str();
            res["matches_bruteforce"] = ok;
            std::ostringstream text;
            text << json{{"config", cfg}, {"result", res}}.dump(2) << "\n";
            emit(common, cfg, res, text.str());
            return ok ? Ok : CertificateFailure;
        }

        if (*mat) {
            Graph g = Graph::from_json(read_file(graph_path));
            MatchingCount mc = count_perfect_matchings(g);
            json cfg = base_config("matchings", common);
            cfg.update({{"graph", json::parse(g.to_json())}, {"b", b_s}, {"check_chain", check_chain}});
            json res{{"perfect_matchings", mc.count.get_str()}, {"fingerprint", mc.fingerprint}};
            std::ostringstream text;
            text << "perfect matchings = " << mc.count.get_str() << "\n";
            bool ok = true;
            if (check_chain || !emit_dir.empty()) {
                mpq_class b = parse_rational(b_s);
                MinusOneChain chain = build_minusone_chain(g, b);
                if (!emit_dir.empty()) {
                    write_file(emit_dir + "/G1.json", chain.fisher.g.to_json());
                    write_file(emit_dir + "/G2.json", chain.parallel.g.to_json());
                    write_file(emit_dir + "/G3.json", chain.subdivided.to_json());
                }
                res["normalizer"] = rational_str(chain.normalizer);
                res["q_exponent"] = chain.q_exponent;
                if (check_chain) {
                    json ledger = json::array();
                    for (const IdentityCheck& ic : chain.check(g, b)) {
                        ledger.push_back({{"identity", ic.name}, {"lhs", ic.lhs}, {"rhs", ic.rhs}, {"holds", ic.holds}});
                        text << (ic.holds ? "ok   " : "FAIL ") << ic.name << ": " << ic.lhs << " = " << ic.rhs << "\n";
                        ok = ok && ic.holds;
                    }
                    res["ledger"] = ledger;
                }
            }
            emit(common, cfg, res, text.str());
            return ok ? Ok : CertificateFailure;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return Generic;
    }
    return Usage;
}
