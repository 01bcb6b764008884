#include "lsctl/metaheuristics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "lsctl/config.hpp"
#include "lsctl/error.hpp"

namespace lsctl {

std::string_view to_string(ControllerKind kind) {
    switch (kind) {
        case ControllerKind::Sa: return "SA";
        case ControllerKind::SaRestart: return "SA_RESTART";
        case ControllerKind::Ils: return "ILS";
        case ControllerKind::IlsSa: return "ILS_SA";
        case ControllerKind::Vns: return "VNS";
    }
    return "?";
}

std::optional<ControllerKind> parse_controller_kind(std::string_view name) {
    std::string s(name);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (auto k : {ControllerKind::Sa, ControllerKind::SaRestart, ControllerKind::Ils, ControllerKind::IlsSa,
                   ControllerKind::Vns})
        if (s == to_string(k)) return k;
    if (s == "ILS+SA") return ControllerKind::IlsSa;
    return std::nullopt;
}

void ControllerConfig::check() const {
    if (t0 <= 0.0) throw Error(ErrorCode::InvalidConfig, "t0 must be positive");
    if (alpha_T > 0.0 && alpha_T >= 1.0) throw Error(ErrorCode::InvalidConfig, "alpha_T must lie in (0, 1)");
    if (final_temp_fraction <= 0.0 || final_temp_fraction >= 1.0)
        throw Error(ErrorCode::InvalidConfig, "final_temp_fraction must lie in (0, 1)");
    if (n_stall < 1) throw Error(ErrorCode::InvalidConfig, "n_stall must be >= 1");
    if (restart_stall < 1) throw Error(ErrorCode::InvalidConfig, "restart_stall must be >= 1");
    if (perturb_strength < 1) throw Error(ErrorCode::InvalidConfig, "perturb_strength must be >= 1");
    if (restart_noise < 0.0 || restart_noise > 1.0) throw Error(ErrorCode::InvalidConfig, "restart_noise outside [0, 1]");
    auto sorted = vns_order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.size() != kAllOperators.size() || !std::equal(sorted.begin(), sorted.end(), kAllOperators.begin()))
        throw Error(ErrorCode::InvalidConfig, "vns_order must be a permutation of CT, CET, ECET, CEI");
}

ControllerConfig parse_controller_config(const std::map<std::string, std::string>& kv) {
    ControllerConfig cfg;
    for (const auto& [key, value] : kv) {
        if (key == "kind") {
            auto k = parse_controller_kind(value);
            if (!k) throw Error(ErrorCode::InvalidConfig, "unknown controller kind '" + value + "'");
            cfg.kind = *k;
        } else if (key == "operator") {
            auto op = parse_operator(value);
            if (!op) throw Error(ErrorCode::InvalidConfig, "unknown operator '" + value + "'");
            cfg.fixed_operator = *op;
        } else if (key == "t0") {
            cfg.t0 = kv_double(key, value);
        } else if (key == "alpha_T") {
            cfg.alpha_T = kv_double(key, value);
        } else if (key == "final_temp_fraction") {
            cfg.final_temp_fraction = kv_double(key, value);
        } else if (key == "restart_stall") {
            cfg.restart_stall = kv_int(key, value);
        } else if (key == "restart_noise") {
            cfg.restart_noise = kv_double(key, value);
        } else if (key == "n_stall") {
            cfg.n_stall = kv_int(key, value);
        } else if (key == "perturb_strength") {
            cfg.perturb_strength = kv_int(key, value);
        } else if (key == "vns_order") {
            cfg.vns_order.clear();
            std::stringstream ss(value);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                tok.erase(std::remove_if(tok.begin(), tok.end(), [](unsigned char c) { return std::isspace(c); }),
                          tok.end());
                auto op = parse_operator(tok);
                if (!op) throw Error(ErrorCode::InvalidConfig, "unknown operator '" + tok + "' in vns_order");
                cfg.vns_order.push_back(*op);
            }
        } else if (key == "vns_perturb_on_cycle") {
            cfg.vns_perturb_on_cycle = kv_bool(key, value);
        } else if (key == "method" || key == "iterations" || key == "seed") {
            // benchmark-level keys sharing the file
        } else {
            throw Error(ErrorCode::InvalidConfig, "unknown key '" + key + "'");
        }
    }
    cfg.check();
    return cfg;
}

std::map<std::string, std::string> to_key_values(const ControllerConfig& cfg) {
    std::map<std::string, std::string> kv;
    auto num = [](double d) {
        std::ostringstream os;
        os.precision(17);
        os << d;
        return os.str();
    };
    kv["kind"] = std::string(to_string(cfg.kind));
    kv["operator"] = std::string(to_string(cfg.fixed_operator));
    kv["t0"] = num(cfg.t0);
    kv["alpha_T"] = num(cfg.alpha_T);
    kv["final_temp_fraction"] = num(cfg.final_temp_fraction);
    kv["restart_stall"] = std::to_string(cfg.restart_stall);
    kv["restart_noise"] = num(cfg.restart_noise);
    kv["n_stall"] = std::to_string(cfg.n_stall);
    kv["perturb_strength"] = std::to_string(cfg.perturb_strength);
    std::string order;
    for (std::size_t i = 0; i < cfg.vns_order.size(); ++i) {
        if (i) order += ",";
        order += to_string(cfg.vns_order[i]);
    }
    kv["vns_order"] = order;
    kv["vns_perturb_on_cycle"] = cfg.vns_perturb_on_cycle ? "true" : "false";
    return kv;
}

ClassicController::ClassicController(ControllerConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
    cfg_.check();
}

double ClassicController::acceptance_probability(double delta, double temperature) {
    if (delta <= 0.0) return 1.0;
    if (temperature <= 0.0) return 0.0;
    return std::exp(-delta / temperature);
}

void ClassicController::begin(Time initial_cost, int iterations) {
    temperature_ = cfg_.t0 * static_cast<double>(initial_cost);
    alpha_ = cfg_.alpha_T > 0.0 ? cfg_.alpha_T
                                : std::pow(cfg_.final_temp_fraction, 1.0 / std::max(1, iterations));
    since_event_ = 0;
    last_best_ = initial_cost;
    cursor_ = 0;
    improved_in_cycle_ = false;
}

Operator ClassicController::initial_operator() const {
    return cfg_.kind == ControllerKind::Vns ? cfg_.vns_order.front() : cfg_.fixed_operator;
}

bool ClassicController::sa_accept(Time delta) {
    const double p = acceptance_probability(static_cast<double>(delta), temperature_);
    if (p >= 1.0) return true;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
}

ControllerDecision ClassicController::decide(const ControllerObservation& obs) {
    ControllerDecision d;
    const auto delta = obs.delta();
    const Time best_after = delta ? std::min(obs.best_cost, *obs.proposal_cost) : obs.best_cost;

    switch (cfg_.kind) {
        case ControllerKind::Sa:
        case ControllerKind::SaRestart: {
            d.accept_last = delta && sa_accept(*delta);
            d.next_operator = cfg_.fixed_operator;
            temperature_ *= alpha_;
            const Time committed_best = d.accept_last ? best_after : obs.best_cost;
            if (committed_best < last_best_) {
                last_best_ = committed_best;
                since_event_ = 0;
            } else {
                ++since_event_;
            }
            if (cfg_.kind == ControllerKind::SaRestart && since_event_ >= cfg_.restart_stall) {
                d.restart = RestartRequest{DispatchRule::FDD_over_MWKR, cfg_.restart_noise};
                since_event_ = 0;
            }
            break;
        }
        case ControllerKind::Ils:
        case ControllerKind::IlsSa: {
            if (cfg_.kind == ControllerKind::Ils) d.accept_last = delta && *delta < 0;
            else d.accept_last = delta && sa_accept(*delta);
            if (cfg_.kind == ControllerKind::IlsSa) temperature_ *= alpha_;
            d.next_operator = cfg_.fixed_operator;
            const Time committed_best = d.accept_last ? best_after : obs.best_cost;
            if (committed_best < last_best_) {
                last_best_ = committed_best;
                since_event_ = 0;
            } else {
                ++since_event_;
            }
            if (since_event_ >= cfg_.n_stall) {
                d.perturb = Perturbation{PerturbationKind::RandomCtSequence, cfg_.perturb_strength};
                d.perturb_from_best = true;
                since_event_ = 0;
            }
            break;
        }
        case ControllerKind::Vns: {
            const bool improving = delta && *delta < 0;
            d.accept_last = improving;
            if (improving) {
                cursor_ = 0;
            } else if (++cursor_ >= cfg_.vns_order.size()) {
                cursor_ = 0;
                if (cfg_.vns_perturb_on_cycle) {
                    d.perturb = Perturbation{PerturbationKind::RandomCtSequence, cfg_.perturb_strength};
                    d.perturb_from_best = true;
                }
            }
            d.next_operator = cfg_.vns_order[cursor_];
            break;
        }
    }
    return d;
}

RunResult run_from(SearchController& controller, const Instance& instance, const Solution& start, int iterations,
                   std::uint64_t seed) {
    if (iterations < 1) throw Error(ErrorCode::InvalidConfig, "iterations must be >= 1");
    std::mt19937_64 rng(seed);
    SearchState state(instance, start);
    SearchState best = state;
    RunResult out;
    out.initial_cost = state.cost();
    controller.begin(state.cost(), iterations);
    Operator op = controller.initial_operator();
    int stall = 0;
    int perturbations = 0;
    out.trace.reserve(iterations);

    auto note_best = [&](const SearchState& s) {
        if (s.cost() < best.cost()) {
            best = s;
            return true;
        }
        return false;
    };

    for (int it = 0; it < iterations; ++it) {
        SearchState snapshot = state;
        const auto proposal = ls_step(state, op);
        ControllerObservation obs;
        obs.step = it;
        obs.iterations = iterations;
        obs.initial_cost = out.initial_cost;
        obs.current_cost = snapshot.cost();
        obs.best_cost = best.cost();
        obs.last_operator = op;
        obs.stall = stall;
        obs.num_perturbations = perturbations;
        if (proposal) obs.proposal_cost = proposal->new_cost;

        const ControllerDecision d = controller.decide(obs);
        TraceRecord rec{it, op, proposal.has_value(), proposal && d.accept_last, false, false, 0, 0};
        if (proposal && !d.accept_last) state = std::move(snapshot);
        bool improved = note_best(state);

        if (d.restart) {
            state = SearchState(instance, stochastic_dispatch(instance, d.restart->rule, d.restart->noise, rng()));
            rec.restarted = true;
            ++perturbations;
            improved = note_best(state) || improved;
        } else if (d.perturb) {
            if (d.perturb_from_best) state = best;
            perturb(state, *d.perturb, rng);
            rec.perturbed = true;
            ++perturbations;
            improved = note_best(state) || improved;
        }
        stall = improved ? 0 : stall + 1;
        rec.cost = state.cost();
        rec.best = best.cost();
        out.trace.push_back(rec);
        op = d.next_operator;
    }
    out.best_cost = best.cost();
    out.best_solution = best.solution();
    return out;
}

RunResult run(SearchController& controller, const Instance& instance, DispatchRule init_rule, int iterations,
              std::uint64_t seed) {
    if (iterations < 1) throw Error(ErrorCode::InvalidConfig, "iterations must be >= 1");
    return run_from(controller, instance, dispatch(instance, init_rule, seed), iterations, seed);
}

}  // namespace lsctl
