// Binary weight-file reader/writer. Layout (all little-endian):
//
//   char[4] "CNNW" | u32 version | u32 L | f64 xi | u32 M
//   f64 area_x | f64 area_y | f64 h_min | f64 h_max | u32 layer_count
//   layers: u32 kind, then
//     conv (1):    u32 in, out, kh, kw, stride, pad; f32 w[out][in][kh][kw]; f32 b[out]
//     relu (2):    -
//     maxpool (3): u32 size, stride
//     flatten (4): -
//     dense (5):   u32 in, out; f32 w[out][in]; f32 b[out]

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "isac/inference.hpp"

namespace isac {

namespace {

constexpr char kMagic[4] = {'C', 'N', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    template <typename T>
    T scalar(const std::string& what) {
        T v{};
        raw(reinterpret_cast<char*>(&v), sizeof(T), what);
        return byteswap_if_big(v);
    }

    int count(const std::string& what) {
        const auto v = scalar<std::uint32_t>(what);
        if (v > (1u << 28)) throw Error("weights", what + " = " + std::to_string(v) + " is implausibly large");
        return static_cast<int>(v);
    }

    std::vector<float> floats(std::size_t n, const std::string& what) {
        std::vector<float> v(n);
        raw(reinterpret_cast<char*>(v.data()), n * sizeof(float), what);
        for (auto& f : v) f = byteswap_if_big(f);
        return v;
    }

    void raw(char* dst, std::size_t bytes, const std::string& what) {
        in_.read(dst, static_cast<std::streamsize>(bytes));
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got != bytes)
            throw Error("weights", "truncated weight file at byte offset " + std::to_string(offset_ + got) +
                                       " while reading " + what);
        offset_ += bytes;
    }

    std::size_t offset() const { return offset_; }

private:
    std::istream& in_;
    std::size_t offset_{0};
};

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    template <typename T>
    void scalar(T v) {
        v = byteswap_if_big(v);
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }
    void u32(int v) { scalar<std::uint32_t>(static_cast<std::uint32_t>(v)); }
    void floats(const std::vector<float>& v) {
        for (float f : v) scalar(f);
    }

private:
    std::ostream& out_;
};

std::string layer_name(std::size_t index, LayerKind kind) {
    return "layer " + std::to_string(index + 1) + " (" + to_string(kind) + ")";
}

}  // namespace

LayerKind kind_of(const Layer& layer) {
    return static_cast<LayerKind>(layer.index() + 1);
}

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Dense: return "dense";
    }
    return "unknown";
}

BundleHeader BundleHeader::from(const Scenario& s, int grid, double xi) {
    BundleHeader h;
    h.grid = grid;
    h.xi = xi;
    h.num_uavs = s.num_uavs;
    h.area_x = s.area_x;
    h.area_y = s.area_y;
    h.h_min = s.h_min_m;
    h.h_max = s.h_max_m;
    return h;
}

std::vector<TensorShape> validate_chain(const WeightBundle& bundle) {
    const auto& h = bundle.header;
    if (h.grid < 1) throw Error("weights", "header grid size must be positive");
    if (h.num_uavs < 1) throw Error("weights", "header UAV count must be positive");
    TensorShape shape{1, h.grid, h.grid, false};
    std::vector<TensorShape> shapes;
    for (std::size_t i = 0; i < bundle.layers.size(); ++i) {
        const Layer& layer = bundle.layers[i];
        const std::string name = layer_name(i, kind_of(layer));
        auto fail = [&](const std::string& why) { throw Error("weights", "shape chain broken at " + name + ": " + why); };
        if (const auto* c = std::get_if<Conv2d>(&layer)) {
            if (shape.flat) fail("convolution after flatten");
            if (c->in_channels != shape.channels)
                fail("expects " + std::to_string(c->in_channels) + " input channels, got " + std::to_string(shape.channels));
            if (c->out_channels < 1 || c->kernel_h < 1 || c->kernel_w < 1 || c->stride < 1 || c->pad < 0)
                fail("invalid convolution geometry");
            const int oh = (shape.height + 2 * c->pad - c->kernel_h) / c->stride + 1;
            const int ow = (shape.width + 2 * c->pad - c->kernel_w) / c->stride + 1;
            if (shape.height + 2 * c->pad < c->kernel_h || shape.width + 2 * c->pad < c->kernel_w || oh < 1 || ow < 1)
                fail("kernel larger than padded input");
            const std::size_t expected = static_cast<std::size_t>(c->out_channels) * c->in_channels * c->kernel_h * c->kernel_w;
            if (c->weights.size() != expected || c->bias.size() != static_cast<std::size_t>(c->out_channels))
                fail("parameter count does not match its shape");
            shape = {c->out_channels, oh, ow, false};
        } else if (const auto* p = std::get_if<MaxPool>(&layer)) {
            if (shape.flat) fail("pooling after flatten");
            if (p->size < 1 || p->stride < 1) fail("invalid pooling geometry");
            if (shape.height < p->size || shape.width < p->size) fail("pool window larger than input");
            shape = {shape.channels, (shape.height - p->size) / p->stride + 1, (shape.width - p->size) / p->stride + 1, false};
        } else if (std::holds_alternative<Flatten>(layer)) {
            shape = {static_cast<int>(shape.size()), 1, 1, true};
        } else if (const auto* d = std::get_if<Dense>(&layer)) {
            if (!shape.flat) fail("dense layer needs a flattened input");
            if (static_cast<std::size_t>(d->in_features) != shape.size())
                fail("expects " + std::to_string(d->in_features) + " inputs, got " + std::to_string(shape.size()));
            if (d->weights.size() != static_cast<std::size_t>(d->in_features) * d->out_features ||
                d->bias.size() != static_cast<std::size_t>(d->out_features))
                fail("parameter count does not match its shape");
            shape = {d->out_features, 1, 1, true};
        }
        shapes.push_back(shape);
    }
    if (!shape.flat || shape.size() != static_cast<std::size_t>(3 * h.num_uavs))
        throw Error("weights", "network output has " + std::to_string(shape.size()) + " values, expected 3M = " +
                                   std::to_string(3 * h.num_uavs));
    return shapes;
}

void check_reference_topology(const WeightBundle& bundle) {
    const int M = bundle.header.num_uavs;
    struct Expect {
        LayerKind kind;
        int out{0};
        int kernel{0};
        int pad{0};
    };
    const std::vector<Expect> expected = {
        {LayerKind::Conv, 64, 7, 3},  {LayerKind::Relu},          {LayerKind::MaxPool},
        {LayerKind::Conv, 128, 3, 1}, {LayerKind::Relu},          {LayerKind::MaxPool},
        {LayerKind::Flatten},         {LayerKind::Dense, 1024},   {LayerKind::Relu},
        {LayerKind::Dense, 2048},     {LayerKind::Relu},          {LayerKind::Dense, 3 * M},
        {LayerKind::Relu},
    };
    const std::size_t n = std::min(expected.size(), bundle.layers.size());
    for (std::size_t i = 0; i < n; ++i) {
        const Layer& layer = bundle.layers[i];
        const Expect& e = expected[i];
        const std::string name = layer_name(i, kind_of(layer));
        if (kind_of(layer) != e.kind)
            throw Error("weights", "topology mismatch at " + name + ": expected " + to_string(e.kind));
        if (const auto* c = std::get_if<Conv2d>(&layer)) {
            if (c->out_channels != e.out || c->kernel_h != e.kernel || c->kernel_w != e.kernel || c->stride != 1 ||
                c->pad != e.pad)
                throw Error("weights", "topology mismatch at " + name + ": expected " + std::to_string(e.out) + " x " +
                                           std::to_string(e.kernel) + "x" + std::to_string(e.kernel) +
                                           " stride 1 pad " + std::to_string(e.pad) + ", got " +
                                           std::to_string(c->out_channels) + " x " + std::to_string(c->kernel_h) +
                                           "x" + std::to_string(c->kernel_w));
        } else if (const auto* p = std::get_if<MaxPool>(&layer)) {
            if (p->size != 2 || p->stride != 2)
                throw Error("weights", "topology mismatch at " + name + ": expected 2x2 stride 2");
        } else if (const auto* d = std::get_if<Dense>(&layer)) {
            if (d->out_features != e.out)
                throw Error("weights", "topology mismatch at " + name + ": expected " + std::to_string(e.out) +
                                           " outputs, got " + std::to_string(d->out_features));
        }
    }
    if (bundle.layers.size() != expected.size())
        throw Error("weights", "topology mismatch: expected " + std::to_string(expected.size()) + " layers, got " +
                                   std::to_string(bundle.layers.size()));
}

WeightBundle read_weights(std::istream& in, TopologyCheck check) {
    Reader r(in);
    char magic[4];
    r.raw(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw Error("weights", "bad magic: not a CNNW weight file");
    WeightBundle b;
    b.header.version = r.scalar<std::uint32_t>("version");
    if (b.header.version != kVersion)
        throw Error("weights", "unsupported weight file version " + std::to_string(b.header.version));
    b.header.grid = r.count("grid size");
    b.header.xi = r.scalar<double>("xi");
    b.header.num_uavs = r.count("UAV count");
    b.header.area_x = r.scalar<double>("area_x");
    b.header.area_y = r.scalar<double>("area_y");
    b.header.h_min = r.scalar<double>("h_min");
    b.header.h_max = r.scalar<double>("h_max");
    const int layers = r.count("layer count");
    for (int i = 0; i < layers; ++i) {
        const std::string at = "layer " + std::to_string(i + 1);
        const auto tag = r.scalar<std::uint32_t>(at + " kind");
        switch (static_cast<LayerKind>(tag)) {
            case LayerKind::Conv: {
                Conv2d c;
                c.in_channels = r.count(at + " in_channels");
                c.out_channels = r.count(at + " out_channels");
                c.kernel_h = r.count(at + " kernel_h");
                c.kernel_w = r.count(at + " kernel_w");
                c.stride = r.count(at + " stride");
                c.pad = r.count(at + " pad");
                c.weights = r.floats(static_cast<std::size_t>(c.out_channels) * c.in_channels * c.kernel_h * c.kernel_w,
                                     at + " weights");
                c.bias = r.floats(static_cast<std::size_t>(c.out_channels), at + " bias");
                b.layers.emplace_back(std::move(c));
                break;
            }
            case LayerKind::Relu: b.layers.emplace_back(Relu{}); break;
            case LayerKind::MaxPool: {
                MaxPool p;
                p.size = r.count(at + " pool size");
                p.stride = r.count(at + " pool stride");
                b.layers.emplace_back(p);
                break;
            }
            case LayerKind::Flatten: b.layers.emplace_back(Flatten{}); break;
            case LayerKind::Dense: {
                Dense d;
                d.in_features = r.count(at + " in_features");
                d.out_features = r.count(at + " out_features");
                d.weights = r.floats(static_cast<std::size_t>(d.in_features) * d.out_features, at + " weights");
                d.bias = r.floats(static_cast<std::size_t>(d.out_features), at + " bias");
                b.layers.emplace_back(std::move(d));
                break;
            }
            default:
                throw Error("weights", at + ": unknown layer kind " + std::to_string(tag) + " at byte offset " +
                                           std::to_string(r.offset() - 4));
        }
    }
    if (check == TopologyCheck::Reference) check_reference_topology(b);
    validate_chain(b);
    return b;
}

WeightBundle load_weights(const std::string& path, TopologyCheck check) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot open weight file " + path);
    return read_weights(in, check);
}

void write_weights(std::ostream& out, const WeightBundle& bundle) {
    validate_chain(bundle);
    Writer w(out);
    out.write(kMagic, 4);
    w.scalar<std::uint32_t>(bundle.header.version);
    w.u32(bundle.header.grid);
    w.scalar<double>(bundle.header.xi);
    w.u32(bundle.header.num_uavs);
    w.scalar<double>(bundle.header.area_x);
    w.scalar<double>(bundle.header.area_y);
    w.scalar<double>(bundle.header.h_min);
    w.scalar<double>(bundle.header.h_max);
    w.u32(static_cast<int>(bundle.layers.size()));
    for (const Layer& layer : bundle.layers) {
        w.scalar<std::uint32_t>(static_cast<std::uint32_t>(kind_of(layer)));
        if (const auto* c = std::get_if<Conv2d>(&layer)) {
            w.u32(c->in_channels);
            w.u32(c->out_channels);
            w.u32(c->kernel_h);
            w.u32(c->kernel_w);
            w.u32(c->stride);
            w.u32(c->pad);
            w.floats(c->weights);
            w.floats(c->bias);
        } else if (const auto* p = std::get_if<MaxPool>(&layer)) {
            w.u32(p->size);
            w.u32(p->stride);
        } else if (const auto* d = std::get_if<Dense>(&layer)) {
            w.u32(d->in_features);
            w.u32(d->out_features);
            w.floats(d->weights);
            w.floats(d->bias);
        }
    }
    if (!out) throw Error("io", "failed to write weight file");
}

void save_weights(const std::string& path, const WeightBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io", "cannot create weight file " + path);
    write_weights(out, bundle);
}

WeightBundle make_reference_bundle(const BundleHeader& header, Rng& rng) {
    WeightBundle b;
    b.header = header;
    auto he = [&rng](std::size_t n, int fan_in) {
        std::vector<float> v(n);
        const double limit = std::sqrt(6.0 / fan_in);
        for (auto& f : v) f = static_cast<float>(rng.uniform(-limit, limit));
        return v;
    };
    auto conv = [&](int in, int out, int k, int pad) {
        Conv2d c{in, out, k, k, 1, pad, {}, {}};
        c.weights = he(static_cast<std::size_t>(out) * in * k * k, in * k * k);
        c.bias.assign(static_cast<std::size_t>(out), 0.0f);
        return c;
    };
    auto dense = [&](int in, int out) {
        Dense d{in, out, {}, {}};
        d.weights = he(static_cast<std::size_t>(in) * out, in);
        d.bias.assign(static_cast<std::size_t>(out), 0.01f);
        return d;
    };
    const int pooled = header.grid / 4;
    const int flat = 128 * pooled * pooled;
    b.layers = {conv(1, 64, 7, 3),  Relu{},           MaxPool{2, 2},
                conv(64, 128, 3, 1), Relu{},          MaxPool{2, 2},
                Flatten{},           dense(flat, 1024), Relu{},
                dense(1024, 2048),   Relu{},          dense(2048, 3 * header.num_uavs),
                Relu{}};
    validate_chain(b);
    return b;
}

}  // namespace isac
