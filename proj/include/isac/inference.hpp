#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "isac/core.hpp"
#include "isac/dataset.hpp"

namespace isac {

// Layer tags as stored in the weight file.
enum class LayerKind : std::uint32_t { Conv = 1, Relu = 2, MaxPool = 3, Flatten = 4, Dense = 5 };

/// Cross-correlation with zero padding. weights[out][in][kh][kw].
struct Conv2d {
    int in_channels{1};
    int out_channels{1};
    int kernel_h{1};
    int kernel_w{1};
    int stride{1};
    int pad{0};
    std::vector<float> weights;
    std::vector<float> bias;
};

struct Relu {};

struct MaxPool {
    int size{2};
    int stride{2};
};

struct Flatten {};

/// weights[out][in].
struct Dense {
    int in_features{1};
    int out_features{1};
    std::vector<float> weights;
    std::vector<float> bias;
};

using Layer = std::variant<Conv2d, Relu, MaxPool, Flatten, Dense>;

LayerKind kind_of(const Layer& layer);
std::string to_string(LayerKind kind);

/// Normalization context shared by training and inference.
struct BundleHeader {
    std::uint32_t version{1};
    int grid{64};
    double xi{2.0};
    int num_uavs{5};
    double area_x{5000.0};
    double area_y{5000.0};
    double h_min{50.0};
    double h_max{500.0};

    static BundleHeader from(const Scenario& s, int grid, double xi);
};

struct WeightBundle {
    BundleHeader header;
    std::vector<Layer> layers;
};

/// C x H x W activation shape; flattened tensors are C x 1 x 1 with `flat` set.
struct TensorShape {
    int channels{1};
    int height{1};
    int width{1};
    bool flat{false};

    std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
    friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

/// Walks the layer chain from 1 x L x L and returns every layer's output shape.
/// Throws Error("weights", "layer k ...") at the first inconsistency (1-based).
std::vector<TensorShape> validate_chain(const WeightBundle& bundle);

/// Requires the exact deployment network: conv64 7x7 / relu / pool, conv128 3x3 /
/// relu / pool, flatten, dense 1024 / relu, dense 2048 / relu, dense 3M / relu.
void check_reference_topology(const WeightBundle& bundle);

enum class TopologyCheck { Reference, ChainOnly };

WeightBundle read_weights(std::istream& in, TopologyCheck check = TopologyCheck::Reference);
WeightBundle load_weights(const std::string& path, TopologyCheck check = TopologyCheck::Reference);
void write_weights(std::ostream& out, const WeightBundle& bundle);
void save_weights(const std::string& path, const WeightBundle& bundle);

/// Reference architecture with He-uniform random weights (timing and tests).
WeightBundle make_reference_bundle(const BundleHeader& header, Rng& rng);

/// OpenMP forward pass; deterministic for a fixed bundle and input.
std::vector<float> forward(const RasterGrid& grid, const WeightBundle& bundle);
/// Naive serial forward pass with double accumulation.
std::vector<float> forward_reference(const RasterGrid& grid, const WeightBundle& bundle);

struct DecodedDeployment {
    Deployment deployment;
    std::vector<double> normalized;  // clamped network outputs, x0 y0 z0 x1 ...
};

DecodedDeployment decode(std::span<const float> outputs, const BundleHeader& header);
std::vector<double> encode(const Deployment& d, const BundleHeader& header);

/**
 * Clamps UAVs into the area and lifts them to h_min, then pushes violating
 * pairs apart symmetrically along their connecting segment until every pair
 * is d_min apart. When a wall blocks one side the other UAV takes the whole
 * push. Throws Error("repair", ...) if 100 sweeps do not suffice.
 */
Deployment repair(Deployment d, const Scenario& s, Rng& rng, int* sweeps_used = nullptr);

/// Throws Error("inference", ...) unless the bundle was built for this M and area.
void check_compatible(const BundleHeader& header, const Scenario& s);

struct InferenceResult {
    Deployment deployment;
    bool repaired{false};  // repair moved at least one UAV
};

/// Online stage: rasterize, forward, decode and, when `with_repair`, repair.
InferenceResult infer_deployment(const UserSet& users, const Scenario& s, const WeightBundle& bundle, Rng& rng,
                                 bool with_repair = true);

}  // namespace isac
