#include "properpo/json_io.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

namespace properpo::io {

namespace {

json num(double v) {
    // JSON has no infinities; encode them as strings.
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json nums(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

const json& require(const json& j, const char* key, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(path + "." + key, "missing required field");
    return *it;
}

double get_number(const json& j, const char* key, const std::string& path, std::optional<double> dflt = {}) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) {
        if (dflt) return *dflt;
        throw SchemaError(path + "." + key, "missing required field");
    }
    if (!it->is_number()) throw SchemaError(path + "." + key, "expected a number");
    return it->get<double>();
}

std::size_t get_count(const json& j, const char* key, const std::string& path, std::optional<std::size_t> dflt = {}) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) {
        if (dflt) return *dflt;
        throw SchemaError(path + "." + key, "missing required field");
    }
    if (!it->is_number_unsigned()) throw SchemaError(path + "." + key, "expected a non-negative integer");
    return it->get<std::size_t>();
}

std::string get_string(const json& j, const char* key, const std::string& path,
                       std::optional<std::string> dflt = {}) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) {
        if (dflt) return *dflt;
        throw SchemaError(path + "." + key, "missing required field");
    }
    if (!it->is_string()) throw SchemaError(path + "." + key, "expected a string");
    return it->get<std::string>();
}

Mat get_matrix(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array of arrays");
    Mat out;
    for (std::size_t r = 0; r < j.size(); ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        if (!j[r].is_array()) throw SchemaError(rp, "expected an array");
        Vec row;
        for (std::size_t c = 0; c < j[r].size(); ++c) {
            if (!j[r][c].is_number()) throw SchemaError(rp + "[" + std::to_string(c) + "]", "expected a number");
            row.push_back(j[r][c].get<double>());
        }
        out.push_back(std::move(row));
    }
    return out;
}

void check_version(const json& j, const std::string& path) {
    if (j.is_object() && j.contains("schema_version")) {
        const auto& v = j["schema_version"];
        if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
            throw SchemaError(path + ".schema_version", "unsupported schema version");
        }
    }
}

template <class F>
auto wrap(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const SchemaError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw SchemaError(path, e.what());
    }
}

}  // namespace

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream msg;
        msg << "malformed JSON at line " << line << ", column " << col;
        throw ParseError(msg.str(), line, col);
    }
}

json read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_text(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), e.line, e.column);
    }
}

std::string config_hash(const json& config) {
    const std::string s = config.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json to_json(const ProperCertificate& c) {
    json j{{"loss", c.loss_id},   {"n", c.n},           {"resolution", c.resolution}, {"tol", c.tol},
           {"proper", c.proper},  {"strict_checked", c.strict_checked},          {"pass", c.pass()},
           {"margin", num(c.margin)}};
    if (c.strict_checked) j["strict"] = c.strict;
    if (!c.worst_p.empty()) j["worst"] = {{"p", nums(c.worst_p)}, {"q", nums(c.worst_q)}};
    if (!c.proper) j["witness"] = {{"p", nums(c.worst_p)}, {"q", nums(c.worst_q)}, {"regret", num(c.margin)}};
    if (c.strict_checked && !c.strict)
        j["strict_witness"] = {{"p", nums(c.strict_p)}, {"q", nums(c.strict_q)}, {"gap", num(c.strict_gap)}};
    return j;
}

json to_json(const FConditionReport& r) {
    return {{"pass", r.pass},
            {"debreu", r.debreu},
            {"worst_z", num(r.worst_z)},
            {"worst_sum", num(r.worst_sum)},
            {"F_at_0", num(r.f_at_zero)}};
}

json to_json(const EligibilityReport& r) {
    json j{{"ok", r.ok}, {"numeric_inverse", r.numeric_inverse}, {"inverse_error", num(r.inverse_error)}};
    if (!r.ok) j["failure"] = {{"condition", r.failure}, {"witness", num(r.witness)}, {"witness2", num(r.witness2)}};
    return j;
}

json to_json(const AxiomVerdict& v) {
    json j{{"axiom", v.axiom}, {"pass", v.pass}, {"checked", v.checked}, {"sampled", v.sampled}};
    if (v.alpha) j["alpha"] = *v.alpha;
    if (!v.pass) {
        j["state"] = v.state;
        j["witness"] = v.witness;
        j["values"] = nums(v.values);
        j["detail"] = v.detail;
    }
    return j;
}

json to_json(const KlstCertificate& c) {
    json lcs = json::array();
    for (std::size_t k = 0; k < c.lcs.size(); ++k) {
        json row{{"alpha", c.lcs_alphas[k]}, {"axioms", json::array()}};
        for (const auto& v : c.lcs[k]) row["axioms"].push_back(to_json(v));
        lcs.push_back(std::move(row));
    }
    return {{"pass", c.pass}, {"alpha_mono", c.alpha_mono}, {"lcs", lcs}, {"monotonicity", to_json(c.monotonicity)}};
}

json to_json(const Representation& r) {
    json u = json::array();
    for (const auto& row : r.u) u.push_back(nums(row));
    return {{"u", u},
            {"knots_z", nums(r.knots_z)},
            {"knots_p", nums(r.knots_p)},
            {"residual", num(r.residual)},
            {"order_violations", r.order_violations},
            {"f_condition_at_knots", r.f_condition_at_knots}};
}

json to_json(const ChoiceTable& t) {
    json probs = json::array();
    for (const auto& slice : t.probs) {
        json s = json::array();
        for (const auto& row : slice) s.push_back(nums(row));
        probs.push_back(std::move(s));
    }
    return {{"schema_version", kSchemaVersion}, {"states", t.states}, {"actions", t.actions}, {"probs", probs}};
}

json to_json(const SeparabilityReport& r) {
    return {{"pass", r.pass},
            {"fits_log", r.fits_log},
            {"K1", num(r.K1)},
            {"K2", num(r.K2)},
            {"fit_residual", num(r.fit_residual)},
            {"certificate", to_json(r.certificate)}};
}

ChoiceTable table_from_json(const json& j, const std::string& path) {
    check_version(j, path);
    ChoiceTable t;
    const json& probs = require(j, "probs", path);
    if (!probs.is_array() || probs.empty()) throw SchemaError(path + ".probs", "expected a non-empty array");
    for (std::size_t x = 0; x < probs.size(); ++x) {
        t.probs.push_back(get_matrix(probs[x], path + ".probs[" + std::to_string(x) + "]"));
    }
    const std::size_t n = t.probs.front().size();
    for (std::size_t x = 0; x < t.m(); ++x) {
        t.states.push_back("x" + std::to_string(x));
    }
    for (std::size_t y = 0; y < n; ++y) t.actions.push_back("y" + std::to_string(y));
    auto names = [&](const char* key, std::vector<std::string>& dst, std::size_t count) {
        if (!j.contains(key)) return;
        const auto& a = j[key];
        const std::string p = path + "." + key;
        if (!a.is_array() || a.size() != count) throw SchemaError(p, "expected " + std::to_string(count) + " names");
        for (std::size_t k = 0; k < count; ++k) {
            if (!a[k].is_string()) throw SchemaError(p + "[" + std::to_string(k) + "]", "expected a string");
            dst[k] = a[k].get<std::string>();
        }
    };
    names("states", t.states, t.m());
    names("actions", t.actions, n);
    wrap(path + ".probs", [&] {
        t.validate();
        return 0;
    });
    return t;
}

catalog::Params params_from_json(const json& j, const std::string& path) {
    catalog::Params p;
    p.tau = get_number(j, "tau", path, p.tau);
    p.mu = get_number(j, "mu", path, p.mu);
    p.beta = get_number(j, "beta", path, p.beta);
    return p;
}

namespace {

catalog::Entry loss_from_json(const json& j, const std::string& path) {
    if (j.is_string()) return wrap(path, [&] { return catalog::get(j.get<std::string>()); });
    const std::string id = get_string(j, "id", path);
    const catalog::Params params = params_from_json(j, path);
    return wrap(path, [&] { return catalog::get(id, params); });
}

}  // namespace

PipelineSpec spec_from_json(const json& j, const std::string& path) {
    check_version(j, path);
    const std::string recipe = get_string(j, "recipe", path);
    const std::size_t n = get_count(j, "n", path);
    if (n < 2) throw SchemaError(path + ".n", "need at least 2 actions");
    PipelineSpec spec;
    if (recipe == "dpo") {
        spec = make_dpo(n);
    } else if (recipe == "pppo") {
        const auto la = loss_from_json(require(j, "loss_a", path), path + ".loss_a");
        const auto lb = j.contains("loss_b") ? loss_from_json(j["loss_b"], path + ".loss_b") : la;
        spec = make_pppo(la.binary, lb.multiclass(n));
        // Prefer the catalog's closed forms when present.
        if (la.conj) spec.psi = *la.conj;
        if (la.F) spec.dpsi = *la.F, spec.F = *la.F;
    } else if (recipe == "pmpo") {
        const std::string psi = get_string(j, "psi", path);
        const auto lb = loss_from_json(require(j, "loss_b", path), path + ".loss_b");
        std::optional<ScalarFn> F;
        if (j.contains("link")) {
            const std::string link = get_string(j, "link", path);
            F = wrap(path + ".link", [&] { return named_link(link); });
        }
        spec = wrap(path + ".psi", [&] {
            return make_pmpo(named_psi(psi), named_psi_derivative(psi), lb.multiclass(n), F);
        });
    } else if (recipe == "phi_po") {
        const std::string pot = get_string(j, "potential", path);
        spec = wrap(path + ".potential", [&] { return make_phi_po(named_potential(pot), n); });
    } else {
        throw SchemaError(path + ".recipe", "unknown recipe '" + recipe + "'");
    }
    if (j.contains("margin")) {
        const std::string mp = path + ".margin";
        spec.a = get_number(j["margin"], "a", mp, 1.0);
        spec.c = get_number(j["margin"], "c", mp, 0.0);
        if (!(spec.a > 0.0)) throw SchemaError(mp + ".a", "must be > 0");
    }
    const std::string mode = get_string(j, "length_mode", path, std::string("none"));
    spec.length_mode = wrap(path + ".length_mode", [&] { return length_mode_from_string(mode); });
    if (j.contains("lengths")) {
        const auto& a = j["lengths"];
        if (!a.is_array() || a.size() != n) throw SchemaError(path + ".lengths", "expected one length per action");
        for (std::size_t k = 0; k < n; ++k) {
            if (!a[k].is_number() || !(a[k].get<double>() >= 1.0))
                throw SchemaError(path + ".lengths[" + std::to_string(k) + "]", "expected a number >= 1");
            spec.lengths.push_back(a[k].get<double>());
        }
    }
    return spec;
}

TaskParams task_from_json(const json& j, const std::string& path) {
    TaskParams t;
    t.m = get_count(j, "m", path, t.m);
    t.n = get_count(j, "n", path, t.n);
    t.samples = get_count(j, "samples", path, t.samples);
    t.reward_span = static_cast<int>(get_count(j, "reward_span", path, static_cast<std::size_t>(t.reward_span)));
    if (j.contains("rewards")) t.rewards = get_matrix(j["rewards"], path + ".rewards");
    if (j.contains("link")) {
        const std::string link = get_string(j, "link", path);
        t.F_gen = wrap(path + ".link", [&] { return named_link(link); });
    }
    return t;
}

TrainOptions train_options_from_json(const json& j, const std::string& path) {
    TrainOptions o;
    o.steps = get_count(j, "steps", path, o.steps);
    o.lr = get_number(j, "lr", path, o.lr);
    const std::string mode = get_string(j, "mode", path, std::string("expected"));
    if (mode == "expected") o.mode = TrainMode::expected;
    else if (mode == "sampled") o.mode = TrainMode::sampled;
    else throw SchemaError(path + ".mode", "expected 'expected' or 'sampled'");
    if (j.contains("ref")) o.ref = get_matrix(j["ref"], path + ".ref");
    return o;
}

}  // namespace properpo::io
