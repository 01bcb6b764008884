#include "lsctl/qnetwork.hpp"

#include <cstring>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "lsctl/config.hpp"
#include "lsctl/error.hpp"

namespace lsctl {

namespace {

constexpr const char* kMagic = "lsctl-qnetwork";
constexpr int kVersion = 1;


}  // namespace

void GNNConfig::check() const {
    auto positive = [](int v, const char* what) {
        if (v < 1) throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be >= 1");
    };
    positive(d_in, "d_in");
    positive(num_scalars, "num_scalars");
    positive(d_emb, "d_emb");
    positive(mlp_hidden, "mlp_hidden");
    positive(iqn_hidden, "iqn_hidden");
    positive(num_cosines, "num_cosines");
    positive(num_actions, "num_actions");
    if (l_stat < 0 || l_dyna < 0 || l_final < 0) throw Error(ErrorCode::InvalidConfig, "layer counts must be >= 0");
}

GNNConfig parse_gnn_config(const std::map<std::string, std::string>& kv) {
    GNNConfig c;
    const std::map<std::string, int*> fields = {
        {"d_in", &c.d_in},           {"num_scalars", &c.num_scalars}, {"d_emb", &c.d_emb},
        {"mlp_hidden", &c.mlp_hidden}, {"l_stat", &c.l_stat},         {"l_dyna", &c.l_dyna},
        {"l_final", &c.l_final},     {"iqn_hidden", &c.iqn_hidden},   {"num_cosines", &c.num_cosines},
        {"num_actions", &c.num_actions}};
    for (const auto& [key, value] : kv)
        if (auto it = fields.find(key); it != fields.end()) *it->second = kv_int(key, value);
    c.check();
    return c;
}

std::map<std::string, std::string> to_key_values(const GNNConfig& c) {
    return {{"d_in", std::to_string(c.d_in)},
            {"num_scalars", std::to_string(c.num_scalars)},
            {"d_emb", std::to_string(c.d_emb)},
            {"mlp_hidden", std::to_string(c.mlp_hidden)},
            {"l_stat", std::to_string(c.l_stat)},
            {"l_dyna", std::to_string(c.l_dyna)},
            {"l_final", std::to_string(c.l_final)},
            {"iqn_hidden", std::to_string(c.iqn_hidden)},
            {"num_cosines", std::to_string(c.num_cosines)},
            {"num_actions", std::to_string(c.num_actions)}};
}

int QNetwork::add_param(std::string name, int rows, int cols, double scale, std::mt19937_64* rng) {
    RowMatrix v = RowMatrix::Zero(rows, cols);
    if (rng) {
        std::uniform_real_distribution<double> u(-scale, scale);
        for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = u(*rng);
    }
    params_.emplace_back(std::move(name), std::move(v));
    return static_cast<int>(params_.size()) - 1;
}

Linear QNetwork::make_linear(const std::string& name, int in, int out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / (in + out));
    Linear l;
    l.w = add_param(name + ".w", in, out, limit, &rng);
    l.b = add_param(name + ".b", 1, out, 0.0, nullptr);
    return l;
}

Mlp QNetwork::make_mlp(const std::string& name, int in, int hidden, int out, std::mt19937_64& rng) {
    return {make_linear(name + ".0", in, hidden, rng), make_linear(name + ".1", hidden, out, rng)};
}

QNetwork::QNetwork(const GNNConfig& config, std::uint64_t seed) : config_(config) {
    config_.check();
    std::mt19937_64 rng(seed);
    const int d = config_.d_emb;
    const int h = config_.mlp_hidden;
    embed_ = make_mlp("embed", config_.d_in, h, d, rng);
    for (int l = 0; l < config_.num_layers(); ++l) {
        const std::string base = "gnn" + std::to_string(l);
        GnnLayer layer;
        layer.self = make_mlp(base + ".self", d, h, d, rng);
        layer.neigh = make_mlp(base + ".neigh", d, h, d, rng);
        layer.gamma = add_param(base + ".ln.gamma", 1, d, 0.0, nullptr);
        params_[layer.gamma].value.setOnes();
        layer.beta = add_param(base + ".ln.beta", 1, d, 0.0, nullptr);
        layers_.push_back(layer);
    }
    out_mlp_ = make_mlp("out", d, h, d, rng);
    group_mlp_ = make_mlp("group", 2 * d, h, d, rng);
    feat_ = make_linear("feat", config_.num_scalars, d, rng);
    tau_embed_ = make_linear("tau", config_.num_cosines, 3 * d, rng);
    decoder_ = make_mlp("decoder", 3 * d, config_.iqn_hidden, config_.num_actions, rng);
}

std::size_t QNetwork::num_parameters() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

void QNetwork::zero_grad() {
    for (auto& p : params_) p.grad.setZero();
}

ad::Var QNetwork::apply(ad::Tape& tape, const Linear& l, ad::Var x) {
    return tape.add_row(tape.matmul(x, tape.param(params_[l.w])), tape.param(params_[l.b]));
}

ad::Var QNetwork::apply(ad::Tape& tape, const Mlp& m, ad::Var x) {
    return apply(tape, m.second, tape.gelu(apply(tape, m.first, x)));
}

ad::Var QNetwork::gnn_layer(ad::Tape& tape, ad::Var h, std::shared_ptr<const std::vector<Edge>> edges, int layer) {
    const GnnLayer& L = layers_.at(static_cast<std::size_t>(layer));
    ad::Var agg = tape.aggregate(h, std::move(edges));
    ad::Var msg = tape.gelu(tape.add(apply(tape, L.self, h), apply(tape, L.neigh, agg)));
    return tape.layer_norm(tape.add(h, msg), tape.param(params_[L.gamma]), tape.param(params_[L.beta]));
}

Encoding QNetwork::encode(ad::Tape& tape, const Observation& obs) {
    if (obs.node_features.cols() != config_.d_in)
        throw Error(ErrorCode::ShapeMismatch, "observation has " + std::to_string(obs.node_features.cols()) +
                                                  " node features, network expects " + std::to_string(config_.d_in));
    ad::Var h = apply(tape, embed_, tape.constant(obs.node_features));
    auto dyn = std::make_shared<const std::vector<Edge>>(obs.dynamic_edges);
    int layer = 0;
    for (int i = 0; i < config_.l_stat; ++i) h = gnn_layer(tape, h, obs.static_edges, layer++);
    for (int i = 0; i < config_.l_dyna; ++i) h = gnn_layer(tape, h, dyn, layer++);
    for (int i = 0; i < config_.l_final; ++i) h = gnn_layer(tape, h, obs.static_edges, layer++);

    Encoding e;
    e.node = apply(tape, out_mlp_, h);
    ad::Var pooled_groups = tape.concat_cols(tape.group_max(e.node, obs.groups, obs.num_groups),
                                             tape.group_mean(e.node, obs.groups, obs.num_groups));
    e.group = apply(tape, group_mlp_, pooled_groups);
    RowMatrix scalars(1, config_.num_scalars);
    for (int i = 0; i < config_.num_scalars; ++i) scalars(0, i) = obs.scalars.at(static_cast<std::size_t>(i));
    e.feat = apply(tape, feat_, tape.constant(std::move(scalars)));
    e.pooled = tape.concat_cols(tape.concat_cols(tape.mean_rows(e.node), tape.mean_rows(e.group)), e.feat);
    return e;
}

ad::Var QNetwork::quantiles(ad::Tape& tape, ad::Var pooled, const std::vector<double>& taus) {
    if (taus.empty()) throw Error(ErrorCode::ShapeMismatch, "at least one tau is required");
    RowMatrix cosines(static_cast<Eigen::Index>(taus.size()), config_.num_cosines);
    for (std::size_t i = 0; i < taus.size(); ++i)
        for (int m = 0; m < config_.num_cosines; ++m)
            cosines(static_cast<Eigen::Index>(i), m) = std::cos(std::numbers::pi * m * taus[i]);
    ad::Var phi = tape.gelu(apply(tape, tau_embed_, tape.constant(std::move(cosines))));
    return apply(tape, decoder_, tape.mul_row(phi, pooled));
}

QValues QNetwork::q_values(const Observation& obs, const std::vector<double>& taus) const {
    auto& self = const_cast<QNetwork&>(*this);  // forward only; nothing is written
    ad::Tape tape;
    Encoding e = self.encode(tape, obs);
    QValues q;
    q.quantiles = tape.value(self.quantiles(tape, e.pooled, taus));
    q.mean = q.quantiles.colwise().mean().transpose();
    return q;
}

int QNetwork::greedy_action(const Observation& obs) const {
    static const std::vector<double> taus = midpoint_taus(8);
    const QValues q = q_values(obs, taus);
    int best = 0;
    for (int a = 1; a < q.mean.size(); ++a)
        if (q.mean(a) > q.mean(best)) best = a;
    return best;
}

void QNetwork::save(std::ostream& out) const {
    out << kMagic << ' ' << kVersion << '\n';
    for (const auto& [k, v] : to_key_values(config_)) out << "config " << k << ' ' << v << '\n';
    out << "params " << params_.size() << '\n';
    char buf[64];
    for (const auto& p : params_) {
        out << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%a", p.value.data()[i]);
            out << buf << (i + 1 == p.value.size() ? '\n' : ' ');
        }
        if (p.value.size() == 0) out << '\n';
    }
}

void QNetwork::save(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path);
    if (!f) throw Error(ErrorCode::IoError, "cannot write checkpoint " + path.string());
    save(f);
    if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

QNetwork QNetwork::load(std::istream& in) {
    auto fail = [](const std::string& why) -> Error { return Error(ErrorCode::ParseError, "checkpoint: " + why); };
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) throw fail("bad header");
    if (version != kVersion) throw fail("unsupported version " + std::to_string(version));
    std::map<std::string, std::string> kv;
    std::string word;
    std::size_t count = 0;
    while (in >> word) {
        if (word == "config") {
            std::string k, v;
            if (!(in >> k >> v)) throw fail("truncated config line");
            kv[k] = v;
        } else if (word == "params") {
            if (!(in >> count)) throw fail("missing parameter count");
            break;
        } else {
            throw fail("unexpected token '" + word + "'");
        }
    }
    QNetwork net(parse_gnn_config(kv), 0);
    if (count != net.params_.size())
        throw fail("expected " + std::to_string(net.params_.size()) + " parameters, found " + std::to_string(count));
    for (auto& p : net.params_) {
        std::string name;
        Eigen::Index rows = 0, cols = 0;
        if (!(in >> name >> rows >> cols)) throw fail("truncated parameter header");
        if (name != p.name || rows != p.value.rows() || cols != p.value.cols())
            throw Error(ErrorCode::ShapeMismatch, "checkpoint parameter " + name + " does not match " + p.name);
        for (Eigen::Index i = 0; i < p.value.size(); ++i) {
            std::string tok;
            if (!(in >> tok)) throw fail("truncated values for " + name);
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) throw fail("bad number '" + tok + "'");
            p.value.data()[i] = v;
        }
    }
    return net;
}

QNetwork QNetwork::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());
    return load(f);
}

bool QNetwork::operator==(const QNetwork& other) const {
    if (!(config_ == other.config_) || params_.size() != other.params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& a = params_[i].value;
        const auto& b = other.params_[i].value;
        if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
        if (std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) != 0) return false;
    }
    return true;
}

std::vector<double> midpoint_taus(int k) {
    std::vector<double> t(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) t[static_cast<std::size_t>(i)] = (i + 0.5) / k;
    return t;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double m = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - m).exp();
    return e / e.sum();
}

}  // namespace lsctl
