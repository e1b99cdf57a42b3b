#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "empcn/nn/matrix.hpp"

namespace empcn::nn {

using ParamId = std::uint32_t;

/// Named parameter blocks keyed by a stable path such as
/// "layer0/message/0->0:upper/lin1/W". Shapes are fixed at creation.
class Params {
public:
    ParamId add(const std::string& key, Matrix value);
    ParamId id(const std::string& key) const;  // throws on a missing key
    bool contains(const std::string& key) const { return index_.count(key) > 0; }

    const Matrix& operator[](ParamId id) const { return values_[id]; }
    Matrix& operator[](ParamId id) { return values_[id]; }
    const std::string& key(ParamId id) const { return keys_[id]; }
    std::size_t size() const { return values_.size(); }
    std::size_t total_count() const;

    /// Parameters whose key starts with `prefix`.
    std::size_t count_with_prefix(const std::string& prefix) const;

    friend bool operator==(const Params&, const Params&) = default;

private:
    std::vector<std::string> keys_;
    std::vector<Matrix> values_;
    std::map<std::string, ParamId> index_;
};

/// One gradient block per parameter, same order and shapes.
struct Gradients {
    std::vector<Matrix> blocks;

    static Gradients zeros_like(const Params& p);
    void set_zero();
    void add(const Gradients& o);
    void scale(double s);
};

struct DenseIds {
    ParamId w;
    ParamId b;
    bool has_bias = true;
};

/// W: out×in, uniform in ±1/sqrt(in); b: 1×out zeros.
DenseIds add_dense(Params& p, std::mt19937_64& rng, const std::string& prefix, std::size_t in, std::size_t out,
                   bool bias = true);

inline constexpr int kCheckpointVersion = 1;

nlohmann::json params_to_json(const Params& p);
/// Loads values into `p`, which must already hold every key with the same shape.
void params_from_json(const nlohmann::json& j, Params& p);

}  // namespace empcn::nn
