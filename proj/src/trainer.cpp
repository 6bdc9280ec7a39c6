#include "properpo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace properpo {

TabularPolicy TabularPolicy::uniform(std::size_t m, std::size_t n) {
    if (m == 0 || n < 2) throw InvalidArgument("TabularPolicy: need m >= 1 and n >= 2");
    return TabularPolicy{m, n, Mat(m, Vec(n, 0.0))};
}

TabularPolicy TabularPolicy::from_probs(const Mat& probs) {
    if (probs.empty()) throw InvalidArgument("TabularPolicy: empty table");
    TabularPolicy p = uniform(probs.size(), probs[0].size());
    for (std::size_t x = 0; x < p.m; ++x) {
        if (probs[x].size() != p.n) throw InvalidArgument("TabularPolicy: ragged table");
        for (std::size_t j = 0; j < p.n; ++j) {
            if (!(probs[x][j] > 0.0)) throw InvalidArgument("TabularPolicy: probabilities must be > 0");
            p.logits[x][j] = std::log(probs[x][j]);
        }
    }
    return p;
}

Vec TabularPolicy::probs(std::size_t x) const {
    const Vec& z = logits.at(x);
    const double mx = *std::max_element(z.begin(), z.end());
    Vec out(n);
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = std::exp(z[j] - mx);
        s += out[j];
    }
    for (double& v : out) v /= s;
    return out;
}

Mat TabularPolicy::prob_table() const {
    Mat out(m);
    for (std::size_t x = 0; x < m; ++x) out[x] = probs(x);
    return out;
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

SyntheticTask generate(const TaskParams& params, std::uint64_t seed) {
    if (params.m == 0 || params.n < 2) throw InvalidArgument("generate: need m >= 1 and n >= 2");
    const auto fc = check_F_condition(params.F_gen);
    if (!fc.pass) {
        std::ostringstream msg;
        msg << "generate: F_gen fails F(z) + F(-z) <= 1 at z = " << fc.worst_z;
        throw ContractViolation(msg.str());
    }
    SyntheticTask t;
    t.m = params.m;
    t.n = params.n;
    t.F_gen = params.F_gen;
    t.seed = seed;
    std::mt19937_64 rng(seed);
    if (params.rewards.empty()) {
        const auto span = static_cast<std::uint64_t>(2 * params.reward_span + 1);
        t.rewards.assign(t.m, Vec(t.n));
        for (auto& row : t.rewards)
            for (double& v : row) v = static_cast<double>(static_cast<int>(rng() % span) - params.reward_span);
    } else {
        if (params.rewards.size() != t.m) throw InvalidArgument("generate: reward table has wrong state count");
        for (const auto& row : params.rewards) {
            if (row.size() != t.n) throw InvalidArgument("generate: reward row has wrong action count");
            for (double v : row)
                if (!std::isfinite(v)) throw InvalidArgument("generate: non-finite reward");
        }
        t.rewards = params.rewards;
    }
    t.draws = params.samples;
    for (std::size_t k = 0; k < params.samples; ++k) {
        const std::size_t x = rng() % t.m;
        const std::size_t y = rng() % t.n;
        std::size_t y2 = rng() % (t.n - 1);
        if (y2 >= y) ++y2;
        const double d = t.rewards[x][y] - t.rewards[x][y2];
        const double p_first = t.F_gen(d);
        const double p_second = t.F_gen(-d);
        const double u = uniform01(rng);
        if (u < p_first) {
            t.triples.push_back({x, y, y2, 1.0});
        } else if (u < p_first + p_second) {
            t.triples.push_back({x, y2, y, 1.0});
        } else {
            ++t.abstentions;
        }
    }
    return t;
}

std::vector<Preference> expected_preferences(const SyntheticTask& task) {
    std::vector<Preference> out;
    for (std::size_t x = 0; x < task.m; ++x)
        for (std::size_t i = 0; i < task.n; ++i)
            for (std::size_t j = 0; j < task.n; ++j) {
                if (i == j) continue;
                const double p = task.F_gen(task.rewards[x][i] - task.rewards[x][j]);
                if (p > 0.0) out.push_back({x, i, j, p});
            }
    return out;
}

namespace {

Mat resolve_ref(const Mat& ref, std::size_t m, std::size_t n) {
    if (ref.empty()) return Mat(m, Vec(n, 1.0 / static_cast<double>(n)));
    if (ref.size() != m) throw InvalidArgument("reference policy has wrong state count");
    for (const auto& row : ref) ProbVector check(row);
    return ref;
}

}  // namespace

Mat objective_grad_logits(const PipelineSpec& spec, const TabularPolicy& policy, const Mat& ref,
                          const std::vector<Preference>& data) {
    const Mat pi = policy.prob_table();
    const Mat gp = objective_grad_pi(spec, pi, ref, data);
    Mat out(policy.m, Vec(policy.n, 0.0));
    for (std::size_t x = 0; x < policy.m; ++x) {
        double mean = 0.0;
        for (std::size_t j = 0; j < policy.n; ++j) mean += pi[x][j] * gp[x][j];
        for (std::size_t k = 0; k < policy.n; ++k) out[x][k] = pi[x][k] * (gp[x][k] - mean);
    }
    return out;
}

Metrics evaluate(const PipelineSpec& spec, const TabularPolicy& policy, const SyntheticTask& task, const Mat& ref_in,
                 double margin) {
    const Mat ref = resolve_ref(ref_in, task.m, task.n);
    const Mat pi = policy.prob_table();
    Metrics out;
    Vec rec, truth;
    double hits = 0.0;
    std::size_t counted = 0;
    auto G = [&spec](std::span<const double> row) { return spec.lb.selection(normalized_row(spec, row)); };
    for (std::size_t x = 0; x < task.m; ++x) {
        const Vec gp = G(pi[x]), gr = G(ref[x]);
        for (std::size_t i = 0; i < task.n; ++i)
            for (std::size_t j = i + 1; j < task.n; ++j) {
                const double d = gp[i] - gr[i] - gp[j] + gr[j];
                const double dr = task.rewards[x][i] - task.rewards[x][j];
                rec.push_back(d);
                truth.push_back(dr);
                if (std::abs(dr) >= margin) {
                    ++counted;
                    if (d == 0.0) hits += 0.5;
                    else if ((d > 0.0) == (dr > 0.0)) hits += 1.0;
                }
            }
    }
    out.pairs = counted;
    out.accuracy = counted ? hits / static_cast<double>(counted) : 0.5;
    const double k = static_cast<double>(rec.size());
    double mr = 0.0, mt = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        mr += rec[i] / k;
        mt += truth[i] / k;
    }
    double srt = 0.0, srr = 0.0, stt = 0.0;
    for (std::size_t i = 0; i < rec.size(); ++i) {
        srt += (rec[i] - mr) * (truth[i] - mt);
        srr += (rec[i] - mr) * (rec[i] - mr);
        stt += (truth[i] - mt) * (truth[i] - mt);
    }
    out.correlation = (srr > 0.0 && stt > 0.0) ? srt / std::sqrt(srr * stt) : 0.0;
    const auto data = expected_preferences(task);
    out.objective = data.empty() ? 0.0 : objective(spec, pi, ref, data);
    return out;
}

TrainResult train(const PipelineSpec& spec, const SyntheticTask& task, const TrainOptions& opts) {
    if (spec.lb.n != task.n) throw InvalidArgument("train: spec dimension differs from task action count");
    if (!(opts.lr >= 0.0)) throw InvalidArgument("train: learning rate must be >= 0");
    const Mat ref = resolve_ref(opts.ref, task.m, task.n);
    const std::vector<Preference> data =
        opts.mode == TrainMode::expected ? expected_preferences(task) : task.triples;
    if (data.empty()) throw InvalidArgument("train: no preference data");

    TrainResult out;
    out.policy = TabularPolicy::from_probs(ref);
    double lr = opts.lr;
    double J = objective(spec, out.policy.prob_table(), ref, data);
    for (std::size_t step = 0; step <= opts.steps; ++step) {
        if (std::isnan(J)) throw ConvergenceError("train: objective is NaN at step " + std::to_string(step));
        const Mat g = objective_grad_logits(spec, out.policy, ref, data);
        double gn = 0.0;
        for (const auto& row : g)
            for (double v : row) gn += v * v;
        gn = std::sqrt(gn);
        out.trace.push_back({step, J, gn, evaluate(spec, out.policy, task, ref).accuracy});
        if (step == opts.steps || lr == 0.0) continue;
        for (int attempt = 0; attempt < 40; ++attempt) {
            TabularPolicy cand = out.policy;
            for (std::size_t x = 0; x < cand.m; ++x)
                for (std::size_t j = 0; j < cand.n; ++j) cand.logits[x][j] -= lr * g[x][j];
            double Jc;
            try {
                Jc = objective(spec, cand.prob_table(), ref, data);
            } catch (const DomainError&) {
                Jc = kInf;
            }
            if (std::isnan(Jc)) throw ConvergenceError("train: objective is NaN at step " + std::to_string(step + 1));
            if (Jc <= J) {
                out.policy = std::move(cand);
                J = Jc;
                break;
            }
            lr *= 0.5;
            ++out.halvings;
        }
    }
    return out;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream s;
    s.precision(17);
    s << "step,objective,grad_norm,accuracy\n";
    for (const auto& r : trace) s << r.step << ',' << r.objective << ',' << r.grad_norm << ',' << r.accuracy << '\n';
    return s.str();
}

}  // namespace properpo
