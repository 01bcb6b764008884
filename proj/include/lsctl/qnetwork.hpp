#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lsctl/autodiff.hpp"
#include "lsctl/env.hpp"

namespace lsctl {

struct GNNConfig {
    int d_in = kNumNodeFeatures;
    int num_scalars = kNumScalarFeatures;
    int d_emb = 128;
    int mlp_hidden = 128;
    int l_stat = 3;
    int l_dyna = 2;
    int l_final = 1;
    int iqn_hidden = 256;
    int num_cosines = 64;
    int num_actions = 2;

    void check() const;
    int num_layers() const noexcept { return l_stat + l_dyna + l_final; }
    bool operator==(const GNNConfig&) const = default;
};

GNNConfig parse_gnn_config(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> to_key_values(const GNNConfig& config);

struct Linear {
    int w = -1;  ///< in x out
    int b = -1;  ///< 1 x out
};

/// Linear -> GeLU -> Linear.
struct Mlp {
    Linear first;
    Linear second;
};

struct GnnLayer {
    Mlp self;
    Mlp neigh;
    int gamma = -1;
    int beta = -1;
};

struct Encoding {
    ad::Var node;    ///< N x d_emb
    ad::Var group;   ///< K x d_emb
    ad::Var feat;    ///< 1 x d_emb
    ad::Var pooled;  ///< 1 x 3 d_emb
};

struct QValues {
    RowMatrix quantiles;  ///< |taus| x |A|
    Eigen::VectorXd mean;  ///< |A|
};

/// Graph encoder plus IQN decoder. Parameters live in one vector, addressed by
/// index, so copies (target network) and checkpoints stay trivial.
class QNetwork {
public:
    QNetwork() = default;
    QNetwork(const GNNConfig& config, std::uint64_t seed);

    const GNNConfig& config() const noexcept { return config_; }
    int num_actions() const noexcept { return config_.num_actions; }

    std::vector<ad::Parameter>& parameters() noexcept { return params_; }
    const std::vector<ad::Parameter>& parameters() const noexcept { return params_; }
    std::size_t num_parameters() const;
    void zero_grad();

    Encoding encode(ad::Tape& tape, const Observation& obs);
    /// Single GNN layer over a given edge set.
    ad::Var gnn_layer(ad::Tape& tape, ad::Var h, std::shared_ptr<const std::vector<Edge>> edges, int layer);
    /// |taus| x |A| quantile values from the pooled embedding.
    ad::Var quantiles(ad::Tape& tape, ad::Var pooled, const std::vector<double>& taus);

    QValues q_values(const Observation& obs, const std::vector<double>& taus) const;
    /// Argmax of mean Q over the fixed midpoint taus; ties go to the lower index.
    int greedy_action(const Observation& obs) const;

    /// Text checkpoint: header, config, then each parameter as hexfloats.
    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static QNetwork load(std::istream& in);
    static QNetwork load(const std::filesystem::path& path);

    bool operator==(const QNetwork& other) const;

private:
    int add_param(std::string name, int rows, int cols, double scale, std::mt19937_64* rng);
    Linear make_linear(const std::string& name, int in, int out, std::mt19937_64& rng);
    Mlp make_mlp(const std::string& name, int in, int hidden, int out, std::mt19937_64& rng);
    ad::Var apply(ad::Tape& tape, const Linear& l, ad::Var x);
    ad::Var apply(ad::Tape& tape, const Mlp& m, ad::Var x);

    GNNConfig config_;
    std::vector<ad::Parameter> params_;
    Mlp embed_;
    std::vector<GnnLayer> layers_;
    Mlp out_mlp_;
    Mlp group_mlp_;
    Linear feat_;
    Linear tau_embed_;
    Mlp decoder_;
};

/// (i + 0.5) / k for i < k.
std::vector<double> midpoint_taus(int k);
/// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

}  // namespace lsctl
