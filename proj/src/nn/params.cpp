#include "empcn/nn/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace empcn::nn {

ParamId Params::add(const std::string& key, Matrix value) {
    if (index_.count(key)) throw std::invalid_argument("duplicate parameter key \"" + key + "\"");
    const auto id = static_cast<ParamId>(values_.size());
    keys_.push_back(key);
    values_.push_back(std::move(value));
    index_[key] = id;
    return id;
}

ParamId Params::id(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw std::out_of_range("missing parameter key \"" + key + "\"");
    return it->second;
}

std::size_t Params::total_count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += v.size();
    return n;
}

std::size_t Params::count_with_prefix(const std::string& prefix) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < keys_.size(); ++i)
        if (keys_[i].compare(0, prefix.size(), prefix) == 0) n += values_[i].size();
    return n;
}

Gradients Gradients::zeros_like(const Params& p) {
    Gradients g;
    for (ParamId i = 0; i < p.size(); ++i) g.blocks.emplace_back(p[i].rows, p[i].cols);
    return g;
}

void Gradients::set_zero() {
    for (auto& b : blocks) std::fill(b.data.begin(), b.data.end(), 0.0);
}

void Gradients::add(const Gradients& o) {
    if (o.blocks.size() != blocks.size()) throw std::invalid_argument("gradient block count mismatch");
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t k = 0; k < blocks[i].size(); ++k) blocks[i].data[k] += o.blocks[i].data[k];
}

void Gradients::scale(double s) {
    for (auto& b : blocks)
        for (double& v : b.data) v *= s;
}

DenseIds add_dense(Params& p, std::mt19937_64& rng, const std::string& prefix, std::size_t in, std::size_t out,
                   bool bias) {
    const double bound = in > 0 ? 1.0 / std::sqrt(static_cast<double>(in)) : 0.0;
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(out, in);
    if (bound > 0.0)
        for (double& v : w.data) v = u(rng);
    DenseIds ids;
    ids.w = p.add(prefix + "/W", std::move(w));
    ids.has_bias = bias;
    ids.b = bias ? p.add(prefix + "/b", Matrix(1, out)) : 0;
    return ids;
}

nlohmann::json params_to_json(const Params& p) {
    nlohmann::json j = nlohmann::json::object();
    for (ParamId i = 0; i < p.size(); ++i) {
        const Matrix& m = p[i];
        j[p.key(i)] = {{"shape", {m.rows, m.cols}}, {"data", m.data}};
    }
    return j;
}

void params_from_json(const nlohmann::json& j, Params& p) {
    if (!j.is_object()) throw std::invalid_argument("checkpoint params must be an object");
    if (j.size() != p.size())
        throw std::invalid_argument("checkpoint has " + std::to_string(j.size()) + " parameter blocks, model expects " +
                                    std::to_string(p.size()));
    for (ParamId i = 0; i < p.size(); ++i) {
        const std::string& key = p.key(i);
        if (!j.contains(key)) throw std::invalid_argument("checkpoint is missing parameter \"" + key + "\"");
        const auto& e = j[key];
        const auto shape = e.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2 || shape[0] != p[i].rows || shape[1] != p[i].cols)
            throw std::invalid_argument("checkpoint shape mismatch for \"" + key + "\"");
        auto data = e.at("data").get<std::vector<double>>();
        if (data.size() != p[i].size()) throw std::invalid_argument("checkpoint data size mismatch for \"" + key + "\"");
        p[i].data = std::move(data);
    }
}

}  // namespace empcn::nn
