// properpo: command-line front end. Exit 0 on pass, 1 on a certified failure
// (a valid mathematical finding), 2 on usage or IO errors.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "properpo/json_io.hpp"

using namespace properpo;
using io::json;

namespace {

constexpr int kPass = 0, kFinding = 1, kOperational = 2;

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    double tol = 1e-9;
    std::size_t resolution = 20;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON config; keys mirror long flag names");
    sub->add_option("--out", c.out, "write the result JSON here instead of stdout");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--tol", c.tol, "numeric tolerance");
    sub->add_option("--resolution", c.resolution, "simplex grid resolution");
}

/// Fills options not given on the command line from the config object.
void apply_config(CLI::App* sub, const json& cfg) {
    for (auto* opt : sub->get_options()) {
        if (opt->count() > 0 || opt->get_lnames().empty()) continue;
        const std::string key = opt->get_lnames().front();
        if (key == "config" || key == "help") continue;
        std::string alt = key;
        for (char& ch : alt)
            if (ch == '-') ch = '_';
        const json* v = nullptr;
        if (cfg.contains(key)) v = &cfg[key];
        else if (cfg.contains(alt)) v = &cfg[alt];
        if (!v || v->is_object()) continue;
        std::vector<std::string> values;
        if (v->is_array()) {
            std::string joined;
            for (const auto& e : *v) joined += (joined.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
            values.push_back(joined);
        } else {
            values.push_back(v->is_string() ? v->get<std::string>() : v->dump());
        }
        opt->add_result(values);
        opt->run_callback();
    }
}

Vec parse_list(const std::string& s, const char* what) {
    Vec out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size() && tok.find_first_not_of(" \t", used) != std::string::npos) throw std::exception();
        } catch (const std::exception&) {
            throw InvalidArgument(std::string("--") + what + ": '" + tok + "' is not a number");
        }
    }
    if (out.empty()) throw InvalidArgument(std::string("--") + what + ": empty list");
    return out;
}

int emit(const Common& c, json payload, const json& effective) {
    payload["config_hash"] = io::config_hash(effective);
    payload["seed"] = c.seed;
    payload["schema_version"] = io::kSchemaVersion;
    const std::string text = payload.dump(2) + "\n";
    if (c.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(c.out, std::ios::binary);
        if (!f) throw InvalidArgument("cannot write '" + c.out + "'");
        f << text;
        // Timestamps live in a sidecar so the primary payload stays byte-identical.
        std::ofstream meta(c.out + ".meta.json", std::ios::binary);
        const auto now = std::chrono::system_clock::now().time_since_epoch();
        meta << json{{"unix_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()},
                     {"config_hash", payload["config_hash"]}}
                    .dump(2)
             << "\n";
    }
    return payload.value("pass", true) ? kPass : kFinding;
}

// Increasing partial losses for composite-build, keyed by name.
std::map<std::string, std::pair<ScalarFn, ScalarFn>> named_ell0() {
    const Interval unit{0.0, 1.0};
    return {
        {"square", {ScalarFn([](double p) { return p * p; }, unit), ScalarFn([](double p) { return 2 * p; }, unit)}},
        {"linear", {ScalarFn([](double p) { return p; }, unit), ScalarFn([](double) { return 1.0; }, unit)}},
        {"cubic", {ScalarFn([](double p) { return p * p * p; }, unit),
                   ScalarFn([](double p) { return 3 * p * p; }, unit)}},
        {"exp", {ScalarFn([](double p) { return std::exp(p); }, unit), ScalarFn([](double p) { return std::exp(p); }, unit)}},
        {"sqrt", {ScalarFn([](double p) { return std::sqrt(p); }, unit),
                  ScalarFn([](double p) { return 0.5 / std::sqrt(p); }, unit)}},
        {"wavy", {ScalarFn([](double p) { return p + 0.1 * std::sin(6 * p); }, unit),
                  ScalarFn([](double p) { return 1 + 0.6 * std::cos(6 * p); }, unit)}},
        {"log", {ScalarFn([](double p) { return -std::log1p(-p); }, unit),
                 ScalarFn([](double p) { return 1 / (1 - p); }, unit)}},
    };
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"properpo: proper losses, choice models and generalized preference optimization"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::map<CLI::App*, Common> common;
    auto sub = [&](const char* name, const char* desc) {
        CLI::App* s = app.add_subcommand(name, desc);
        add_common(s, common[s]);
        return s;
    };

    catalog::Params params;
    auto add_params = [&](CLI::App* s) {
        s->add_option("--tau", params.tau, "square-loss scale");
        s->add_option("--mu", params.mu, "Matsushita scale");
        s->add_option("--beta", params.beta, "alpha-loss exponent");
    };

    CLI::App* c_catalog = sub("catalog", "export the loss catalog");
    add_params(c_catalog);

    std::string loss_id;
    std::size_t n = 2;
    CLI::App* c_proper = sub("check-proper", "certify properness of a catalog loss");
    c_proper->add_option("--loss", loss_id, "catalog id");
    c_proper->add_option("--n", n, "number of classes");
    add_params(c_proper);

    std::string potential;
    CLI::App* c_phipo = sub("phipo-build", "build and certify the loss of an eligible potential");
    c_phipo->add_option("--potential", potential, "potential name");
    c_phipo->add_option("--n", n, "lift dimension for the certificate");

    std::string ell_name, psi_name, link_name;
    CLI::App* c_comp = sub("composite-build", "complete a partial loss, or decompose (psi, F)");
    c_comp->add_option("--ell", ell_name, "increasing partial loss name");
    c_comp->add_option("--psi", psi_name, "surrogate name (with --link)");
    c_comp->add_option("--link", link_name, "choice link name (with --psi)");

    std::string table_path;
    double alpha_mono = 0.5;
    CLI::App* c_klst = sub("klst-verify", "verify the choice-structure axioms on a table");
    c_klst->add_option("--table", table_path, "choice table JSON");
    c_klst->add_option("--alpha-mono", alpha_mono, "lottery weight for the monotonicity check");

    std::string rewards_s, ref_s, vec_potential = "neg_entropy";
    CLI::App* c_step1 = sub("solve-step1", "regularized policy solve and reward-difference recovery");
    c_step1->add_option("--rewards", rewards_s, "comma-separated rewards");
    c_step1->add_option("--ref", ref_s, "comma-separated reference policy (default uniform)");
    c_step1->add_option("--potential", vec_potential, "neg_entropy | itakura_saito | squared_euclidean");

    std::string factors_s, mode_s = "kl_geometric";
    CLI::App* c_len = sub("lennorm", "length-normalize a list of token factors");
    c_len->add_option("--factors", factors_s, "comma-separated factors in (0, 1]");
    c_len->add_option("--mode", mode_s, "none | kl_geometric | is_harmonic");

    std::string trace_path;
    CLI::App* c_train = sub("train", "train a tabular policy on a synthetic task");
    c_train->add_option("--trace", trace_path, "write the per-step CSV trace here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kOperational;
    }

    CLI::App* active = app.get_subcommands().front();
    Common& c = common[active];
    json cfg = json::object();
    try {
        if (!c.config.empty()) {
            cfg = io::read_file(c.config);
            if (!cfg.is_object()) throw io::SchemaError("config", "expected an object");
            apply_config(active, cfg);
        }
        if (c.resolution == 0) throw InvalidArgument("--resolution must be >= 1");
        auto need = [](const std::string& v, const char* flag) {
            if (v.empty()) throw InvalidArgument(std::string(flag) + " is required");
        };
        if (active == c_proper) need(loss_id, "--loss");
        if (active == c_phipo) need(potential, "--potential");
        if (active == c_step1) need(rewards_s, "--rewards");
        if (active == c_len) need(factors_s, "--factors");

        if (active == c_catalog) {
            json rows = json::array();
            for (const auto& e : catalog::list(params)) {
                json r{{"id", e.id},
                       {"params", {{"tau", e.params.tau}, {"mu", e.params.mu}, {"beta", e.params.beta}}},
                       {"proper_n2", e.proper_n2},
                       {"proper_ngt2", e.proper_ngt2},
                       {"flags_numeric", e.flags_numeric},
                       {"symmetric", e.symmetric},
                       {"link", e.F ? json(e.F->name()) : json(nullptr)},
                       {"surrogate", e.surrogate ? json(e.surrogate->name()) : json(nullptr)}};
                rows.push_back(std::move(r));
            }
            json eff{{"cmd", "catalog"}, {"tau", params.tau}, {"mu", params.mu}, {"beta", params.beta}};
            return emit(c, {{"pass", true}, {"losses", rows}}, eff);
        }

        if (active == c_proper) {
            const auto e = catalog::get(loss_id, params);
            ProperOptions o;
            o.resolution = c.resolution;
            o.tol = c.tol;
            const auto cert = n == 2 ? check_proper(e.binary, o) : check_proper(e.multiclass(n), o);
            json eff{{"cmd", "check-proper"}, {"loss", loss_id}, {"n", n}, {"resolution", c.resolution},
                     {"tol", c.tol}, {"tau", params.tau}, {"mu", params.mu}, {"beta", params.beta}};
            json out = io::to_json(cert);
            return emit(c, {{"pass", cert.pass()}, {"certificate", out}}, eff);
        }

        if (active == c_phipo) {
            const auto pot = named_potential(potential);
            const auto elig = certify_eligible(pot);
            json eff{{"cmd", "phipo-build"}, {"potential", potential}, {"n", n}, {"resolution", c.resolution}};
            json out{{"potential", potential}, {"eligibility", io::to_json(elig)}};
            if (!elig.ok) {
                out["pass"] = false;
                return emit(c, out, eff);
            }
            ProperOptions o;
            o.resolution = c.resolution;
            const BinaryLoss loss = phi_po_build(pot);
            const auto cert2 = check_proper(loss, o);
            const auto sym = phi_po_symmetric_loss(pot);
            const auto certn = check_proper(one_vs_rest_lift(sym, n, false), o);
            out["certificate_binary"] = io::to_json(cert2);
            out["certificate_lift"] = io::to_json(certn);
            out["pass"] = cert2.pass() && certn.pass();
            return emit(c, out, eff);
        }

        if (active == c_comp) {
            json eff{{"cmd", "composite-build"}, {"ell", ell_name}, {"psi", psi_name}, {"link", link_name},
                     {"resolution", c.resolution}};
            if (!psi_name.empty() || !link_name.empty()) {
                if (psi_name.empty() || link_name.empty()) throw InvalidArgument("--psi and --link go together");
                const auto res = composite_decompose(named_psi(psi_name), named_link(link_name));
                json out{{"accepted", res.accepted},
                         {"pass", res.accepted},
                         {"f_condition", io::to_json(res.f_condition)}};
                if (res.accepted) out["reconstruction_error"] = res.reconstruction_error;
                return emit(c, out, eff);
            }
            const auto table = named_ell0();
            auto it = table.find(ell_name);
            if (it == table.end()) throw InvalidArgument("--ell: unknown partial loss '" + ell_name + "'");
            const BinaryLoss loss = composite_build(it->second.first, it->second.second);
            ProperOptions o;
            o.resolution = c.resolution;
            const auto cert = check_proper(loss, o);
            return emit(c, {{"pass", cert.pass()}, {"certificate", io::to_json(cert)}}, eff);
        }

        if (active == c_klst) {
            json tj;
            if (!table_path.empty()) tj = io::read_file(table_path);
            else if (cfg.contains("table") && cfg["table"].is_object()) tj = cfg["table"];
            else throw InvalidArgument("--table is required");
            const ChoiceTable table = io::table_from_json(tj);
            MonotonicityOptions mo;
            mo.seed = c.seed ? c.seed : mo.seed;
            const auto cert = verify_klst(table, default_lcs_alphas(), alpha_mono, c.tol, mo);
            json eff{{"cmd", "klst-verify"}, {"table", tj}, {"alpha_mono", alpha_mono}, {"tol", c.tol},
                     {"seed", mo.seed}};
            json out = io::to_json(cert);
            return emit(c, out, eff);
        }

        if (active == c_step1) {
            const Vec r = parse_list(rewards_s, "rewards");
            const ProbVector ref = ref_s.empty() ? ProbVector::uniform(r.size())
                                                 : ProbVector(parse_list(ref_s, "ref"));
            VectorPotential phi;
            if (vec_potential == "neg_entropy") phi = negative_entropy();
            else if (vec_potential == "itakura_saito") phi = itakura_saito();
            else if (vec_potential == "squared_euclidean") phi = squared_euclidean();
            else throw InvalidArgument("--potential: unknown potential '" + vec_potential + "'");
            Step1Options so;
            const auto res = solve_step1(r, ref, phi, so);
            const auto diffs = recover_reward_diffs(res.pi, ref, phi.G);
            json M = json::array();
            for (const auto& row : diffs.M) M.push_back(row);
            json eff{{"cmd", "solve-step1"}, {"rewards", r}, {"ref", ref.vec()}, {"potential", vec_potential}};
            json out{{"pi", res.pi.vec()},
                     {"kkt_residual", res.kkt_residual},
                     {"iterations", res.iterations},
                     {"interior", res.interior},
                     {"boundary", diffs.boundary},
                     {"pass", true}};
            if (!diffs.boundary) out["reward_diffs"] = M;
            return emit(c, out, eff);
        }

        if (active == c_len) {
            const Vec f = parse_list(factors_s, "factors");
            const LengthMode mode = length_mode_from_string(mode_s);
            const auto res = length_normalize(f, mode);
            json out{{"value", res.value}, {"alpha", res.alpha}, {"mode", mode_s}, {"pass", true}};
            if (mode != LengthMode::none) {
                const auto pot = mode == LengthMode::kl_geometric ? scalar_negative_entropy() : scalar_itakura_saito();
                const double oracle = oracle_length_solution(f, pot);
                out["oracle"] = oracle;
                out["oracle_gap"] = std::abs(oracle - res.value);
            }
            return emit(c, out, {{"cmd", "lennorm"}, {"factors", f}, {"mode", mode_s}});
        }

        if (active == c_train) {
            if (c.config.empty()) throw InvalidArgument("train needs --config with spec, task and train sections");
            const PipelineSpec spec = io::spec_from_json(io::json(cfg.value("spec", json::object())), "spec");
            const TaskParams tp = io::task_from_json(cfg.value("task", json::object()), "task");
            const TrainOptions to = io::train_options_from_json(cfg.value("train", json::object()), "train");
            const auto chk = validate_spec(spec);
            if (!chk.ok) throw io::SchemaError("spec", chk.detail);
            const SyntheticTask task = generate(tp, c.seed);
            const auto res = train(spec, task, to);
            const auto met = evaluate(spec, res.policy, task, to.ref);
            if (!trace_path.empty()) {
                std::ofstream f(trace_path, std::ios::binary);
                if (!f) throw InvalidArgument("cannot write '" + trace_path + "'");
                f << trace_csv(res.trace);
            }
            json policy = json::array();
            for (const auto& row : res.policy.prob_table()) policy.push_back(row);
            json out{{"spec", spec.name},
                     {"policy", policy},
                     {"metrics",
                      {{"accuracy", met.accuracy}, {"correlation", met.correlation}, {"objective", met.objective}}},
                     {"draws", task.draws},
                     {"abstentions", task.abstentions},
                     {"halvings", res.halvings},
                     {"pass", true}};
            json eff = cfg;
            eff["cmd"] = "train";
            eff["seed"] = c.seed;
            return emit(c, out, eff);
        }
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOperational;
    } catch (const io::SchemaError& e) {
        std::cerr << "schema error at " << e.path << ": " << e.what() << "\n";
        return kOperational;
    } catch (const ContractViolation& e) {
        // A rejected input is a certified finding, not an operational fault.
        std::cerr << "finding: " << e.what() << "\n";
        return kFinding;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kOperational;
    }
    return kOperational;
}
