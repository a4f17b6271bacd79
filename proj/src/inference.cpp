#include "isac/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace isac {

namespace {

struct Tensor {
    TensorShape shape;
    std::vector<float> data;
};

Tensor input_tensor(const RasterGrid& grid, const WeightBundle& bundle) {
    if (grid.size() != bundle.header.grid)
        throw Error("inference", "raster grid is " + std::to_string(grid.size()) + "x" + std::to_string(grid.size()) +
                                     " but the network expects " + std::to_string(bundle.header.grid));
    Tensor t{{1, grid.size(), grid.size(), false}, {}};
    t.data.reserve(grid.cells().size());
    for (double v : grid.cells()) t.data.push_back(static_cast<float>(v));
    return t;
}

// ---- parallel kernels -------------------------------------------------------

// Lowers the input to a [in*kh*kw][OH*OW] column matrix so the convolution
// becomes one matrix product with the [out][in*kh*kw] weight matrix.
std::vector<float> im2col(const Tensor& in, const Conv2d& c, int OH, int OW) {
    const int H = in.shape.height, W = in.shape.width;
    const std::size_t P = static_cast<std::size_t>(OH) * OW;
    std::vector<float> cols(static_cast<std::size_t>(c.in_channels) * c.kernel_h * c.kernel_w * P, 0.0f);
    for (int ch = 0; ch < c.in_channels; ++ch) {
        const float* src = in.data.data() + static_cast<std::size_t>(ch) * H * W;
        for (int ky = 0; ky < c.kernel_h; ++ky)
            for (int kx = 0; kx < c.kernel_w; ++kx) {
                float* dst = cols.data() + ((static_cast<std::size_t>(ch) * c.kernel_h + ky) * c.kernel_w + kx) * P;
                for (int oy = 0; oy < OH; ++oy) {
                    const int iy = oy * c.stride + ky - c.pad;
                    if (iy < 0 || iy >= H) continue;
                    for (int ox = 0; ox < OW; ++ox) {
                        const int ix = ox * c.stride + kx - c.pad;
                        if (ix >= 0 && ix < W) dst[static_cast<std::size_t>(oy) * OW + ox] = src[iy * W + ix];
                    }
                }
            }
    }
    return cols;
}

constexpr int kRowBlock = 8;
constexpr int kColBlock = 64;

// out[r][j] += sum_k a[r][k] * b[k][j] over R rows and one column tile.
template <int R>
void gemm_tile(const float* a, std::size_t lda, const float* b, std::size_t ldb, int K, float* out, std::size_t ldo,
               int cols) {
    float acc[R][kColBlock] = {};
    if (cols == kColBlock) {
        for (int k = 0; k < K; ++k) {
            const float* brow = b + static_cast<std::size_t>(k) * ldb;
            for (int r = 0; r < R; ++r) {
                const float w = a[r * lda + k];
                for (int j = 0; j < kColBlock; ++j) acc[r][j] += w * brow[j];
            }
        }
    } else {
        for (int k = 0; k < K; ++k) {
            const float* brow = b + static_cast<std::size_t>(k) * ldb;
            for (int r = 0; r < R; ++r) {
                const float w = a[r * lda + k];
                for (int j = 0; j < cols; ++j) acc[r][j] += w * brow[j];
            }
        }
    }
    for (int r = 0; r < R; ++r)
        for (int j = 0; j < cols; ++j) out[r * ldo + j] += acc[r][j];
}

Tensor conv_fast(const Tensor& in, const Conv2d& c) {
    const int OH = (in.shape.height + 2 * c.pad - c.kernel_h) / c.stride + 1;
    const int OW = (in.shape.width + 2 * c.pad - c.kernel_w) / c.stride + 1;
    const int P = OH * OW;
    const int K = c.in_channels * c.kernel_h * c.kernel_w;
    const std::vector<float> cols = im2col(in, c, OH, OW);
    Tensor out{{c.out_channels, OH, OW, false}, std::vector<float>(static_cast<std::size_t>(c.out_channels) * P)};
    for (int o = 0; o < c.out_channels; ++o)
        std::fill_n(out.data.begin() + static_cast<std::ptrdiff_t>(o) * P, P, c.bias[o]);
    const int row_blocks = (c.out_channels + kRowBlock - 1) / kRowBlock;
    const int col_blocks = (P + kColBlock - 1) / kColBlock;
#pragma omp parallel for collapse(2) schedule(static)
    for (int rb = 0; rb < row_blocks; ++rb)
        for (int cb = 0; cb < col_blocks; ++cb) {
            const int r0 = rb * kRowBlock, j0 = cb * kColBlock;
            const int rows = std::min(kRowBlock, c.out_channels - r0);
            const int ncols = std::min(kColBlock, P - j0);
            const float* a = c.weights.data() + static_cast<std::size_t>(r0) * K;
            const float* b = cols.data() + j0;
            float* dst = out.data.data() + static_cast<std::size_t>(r0) * P + j0;
            if (rows == kRowBlock)
                gemm_tile<kRowBlock>(a, K, b, P, K, dst, P, ncols);
            else
                for (int r = 0; r < rows; ++r) gemm_tile<1>(a + r * K, K, b, P, K, dst + r * P, P, ncols);
        }
    return out;
}

Tensor pool_fast(const Tensor& in, const MaxPool& p) {
    const int H = in.shape.height, W = in.shape.width;
    const int OH = (H - p.size) / p.stride + 1, OW = (W - p.size) / p.stride + 1;
    const int C = in.shape.channels;
    Tensor out{{C, OH, OW, false}, std::vector<float>(static_cast<std::size_t>(C) * OH * OW)};
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < C; ++ch) {
        const float* src = in.data.data() + static_cast<std::size_t>(ch) * H * W;
        float* dst = out.data.data() + static_cast<std::size_t>(ch) * OH * OW;
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                float m = -std::numeric_limits<float>::infinity();
                for (int dy = 0; dy < p.size; ++dy)
                    for (int dx = 0; dx < p.size; ++dx)
                        m = std::max(m, src[(oy * p.stride + dy) * W + ox * p.stride + dx]);
                dst[oy * OW + ox] = m;
            }
    }
    return out;
}

Tensor dense_fast(const Tensor& in, const Dense& d) {
    Tensor out{{d.out_features, 1, 1, true}, std::vector<float>(static_cast<std::size_t>(d.out_features))};
    const float* x = in.data.data();
    const int n = d.in_features;
#pragma omp parallel for schedule(static)
    for (int o = 0; o < d.out_features; ++o) {
        const float* w = d.weights.data() + static_cast<std::size_t>(o) * n;
        // fixed-lane partial sums: vectorizable and order-stable
        constexpr int kLanes = 16;
        float acc[kLanes] = {};
        int i = 0;
        for (; i + kLanes <= n; i += kLanes)
            for (int k = 0; k < kLanes; ++k) acc[k] += w[i + k] * x[i + k];
        float tail = 0.0f;
        for (; i < n; ++i) tail += w[i] * x[i];
        for (int width = kLanes / 2; width > 0; width /= 2)
            for (int k = 0; k < width; ++k) acc[k] += acc[k + width];
        out.data[o] = d.bias[o] + (acc[0] + tail);
    }
    return out;
}

// ---- serial reference -------------------------------------------------------

Tensor conv_reference(const Tensor& in, const Conv2d& c) {
    const int H = in.shape.height, W = in.shape.width;
    const int OH = (H + 2 * c.pad - c.kernel_h) / c.stride + 1;
    const int OW = (W + 2 * c.pad - c.kernel_w) / c.stride + 1;
    Tensor out{{c.out_channels, OH, OW, false}, {}};
    out.data.reserve(static_cast<std::size_t>(c.out_channels) * OH * OW);
    for (int o = 0; o < c.out_channels; ++o)
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                double acc = c.bias[o];
                for (int ch = 0; ch < c.in_channels; ++ch)
                    for (int ky = 0; ky < c.kernel_h; ++ky)
                        for (int kx = 0; kx < c.kernel_w; ++kx) {
                            const int iy = oy * c.stride + ky - c.pad;
                            const int ix = ox * c.stride + kx - c.pad;
                            if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                            const std::size_t wi =
                                ((static_cast<std::size_t>(o) * c.in_channels + ch) * c.kernel_h + ky) * c.kernel_w + kx;
                            acc += static_cast<double>(c.weights[wi]) *
                                   in.data[(static_cast<std::size_t>(ch) * H + iy) * W + ix];
                        }
                out.data.push_back(static_cast<float>(acc));
            }
    return out;
}

Tensor pool_reference(const Tensor& in, const MaxPool& p) {
    const int H = in.shape.height, W = in.shape.width, C = in.shape.channels;
    const int OH = (H - p.size) / p.stride + 1, OW = (W - p.size) / p.stride + 1;
    Tensor out{{C, OH, OW, false}, {}};
    for (int ch = 0; ch < C; ++ch)
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                float m = in.data[(static_cast<std::size_t>(ch) * H + oy * p.stride) * W + ox * p.stride];
                for (int dy = 0; dy < p.size; ++dy)
                    for (int dx = 0; dx < p.size; ++dx)
                        m = std::max(m, in.data[(static_cast<std::size_t>(ch) * H + oy * p.stride + dy) * W +
                                                ox * p.stride + dx]);
                out.data.push_back(m);
            }
    return out;
}

Tensor dense_reference(const Tensor& in, const Dense& d) {
    Tensor out{{d.out_features, 1, 1, true}, {}};
    for (int o = 0; o < d.out_features; ++o) {
        double acc = d.bias[o];
        for (int i = 0; i < d.in_features; ++i)
            acc += static_cast<double>(d.weights[static_cast<std::size_t>(o) * d.in_features + i]) * in.data[i];
        out.data.push_back(static_cast<float>(acc));
    }
    return out;
}

void relu_inplace(Tensor& t) {
    for (auto& v : t.data) v = v > 0.0f ? v : 0.0f;
}

template <typename ConvFn, typename PoolFn, typename DenseFn>
std::vector<float> run(const RasterGrid& grid, const WeightBundle& bundle, ConvFn conv, PoolFn pool, DenseFn dense) {
    validate_chain(bundle);
    Tensor t = input_tensor(grid, bundle);
    for (const Layer& layer : bundle.layers) {
        if (const auto* c = std::get_if<Conv2d>(&layer))
            t = conv(t, *c);
        else if (const auto* p = std::get_if<MaxPool>(&layer))
            t = pool(t, *p);
        else if (const auto* d = std::get_if<Dense>(&layer))
            t = dense(t, *d);
        else if (std::holds_alternative<Relu>(layer))
            relu_inplace(t);
        else
            t.shape = {static_cast<int>(t.shape.size()), 1, 1, true};
    }
    return std::move(t.data);
}

}  // namespace

std::vector<float> forward(const RasterGrid& grid, const WeightBundle& bundle) {
    return run(grid, bundle, conv_fast, pool_fast, dense_fast);
}

std::vector<float> forward_reference(const RasterGrid& grid, const WeightBundle& bundle) {
    return run(grid, bundle, conv_reference, pool_reference, dense_reference);
}

DecodedDeployment decode(std::span<const float> outputs, const BundleHeader& header) {
    if (outputs.size() != static_cast<std::size_t>(3 * header.num_uavs))
        throw Error("inference", "expected " + std::to_string(3 * header.num_uavs) + " outputs, got " +
                                     std::to_string(outputs.size()));
    DecodedDeployment out;
    out.normalized.reserve(outputs.size());
    for (float v : outputs) out.normalized.push_back(std::clamp(static_cast<double>(v), 0.0, 1.0));
    for (int m = 0; m < header.num_uavs; ++m) {
        const double* u = out.normalized.data() + 3 * m;
        out.deployment.positions.push_back(
            {u[0] * header.area_x, u[1] * header.area_y, header.h_min + u[2] * (header.h_max - header.h_min)});
    }
    return out;
}

std::vector<double> encode(const Deployment& d, const BundleHeader& header) {
    std::vector<double> out;
    out.reserve(3 * d.size());
    for (const auto& p : d.positions) {
        out.push_back(p.x / header.area_x);
        out.push_back(p.y / header.area_y);
        out.push_back((p.z - header.h_min) / (header.h_max - header.h_min));
    }
    return out;
}

Deployment repair(Deployment d, const Scenario& s, Rng& rng, int* sweeps_used) {
    constexpr int kMaxSweeps = 100;
    const double target = s.d_min_m + 1e-6;
    auto keep_inside = [&](Point3& p) {
        p.x = std::clamp(p.x, 0.0, s.area_x);
        p.y = std::clamp(p.y, 0.0, s.area_y);
        p.z = std::max(p.z, s.h_min_m);
    };
    for (auto& p : d.positions) keep_inside(p);

    const std::size_t M = d.size();
    for (int sweep = 0; sweep <= kMaxSweeps; ++sweep) {
        bool moved = false;
        for (std::size_t a = 0; a < M; ++a)
            for (std::size_t b = a + 1; b < M; ++b) {
                Point3& pa = d.positions[a];
                Point3& pb = d.positions[b];
                const double dist = distance(pa, pb);
                if (dist >= s.d_min_m) continue;
                if (sweep == kMaxSweeps)
                    throw Error("repair", "UAV separation did not converge within " + std::to_string(kMaxSweeps) +
                                              " sweeps");
                moved = true;
                Point3 dir;
                if (dist > 1e-9) {
                    dir = {(pb.x - pa.x) / dist, (pb.y - pa.y) / dist, (pb.z - pa.z) / dist};
                } else {
                    // coincident: of a few random horizontal splits, keep the one
                    // leaving the most room to the other UAVs
                    double best_room = -1.0;
                    for (int trial = 0; trial < 8; ++trial) {
                        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
                        const Point3 cand{std::cos(angle), std::sin(angle), 0.0};
                        Point3 qa{pa.x - cand.x * target / 2, pa.y - cand.y * target / 2, pa.z};
                        Point3 qb{pa.x + cand.x * target / 2, pa.y + cand.y * target / 2, pa.z};
                        keep_inside(qa);
                        keep_inside(qb);
                        double room = distance(qa, qb);
                        for (std::size_t c = 0; c < M; ++c)
                            if (c != a && c != b)
                                room = std::min({room, distance(qa, d.positions[c]), distance(qb, d.positions[c])});
                        if (room > best_room) {
                            best_room = room;
                            dir = cand;
                        }
                    }
                }
                const Point3 mid{(pa.x + pb.x) / 2, (pa.y + pb.y) / 2, (pa.z + pb.z) / 2};
                const double half = target / 2;
                pa = {mid.x - dir.x * half, mid.y - dir.y * half, mid.z - dir.z * half};
                pb = {mid.x + dir.x * half, mid.y + dir.y * half, mid.z + dir.z * half};
                keep_inside(pa);
                keep_inside(pb);
                if (distance(pa, pb) >= s.d_min_m) continue;
                // a wall absorbed part of the push: move the free UAV the rest of the way
                Point3 alt_b{pa.x + dir.x * target, pa.y + dir.y * target, pa.z + dir.z * target};
                keep_inside(alt_b);
                if (distance(pa, alt_b) >= s.d_min_m) {
                    pb = alt_b;
                    continue;
                }
                Point3 alt_a{pb.x - dir.x * target, pb.y - dir.y * target, pb.z - dir.z * target};
                keep_inside(alt_a);
                if (distance(alt_a, pb) >= s.d_min_m) {
                    pa = alt_a;
                    continue;
                }
                pb.z = std::max(pb.z, pa.z + target);  // both pinned: separate vertically
            }
        if (!moved) {
            if (sweeps_used) *sweeps_used = sweep;
            return d;
        }
    }
    return d;  // unreachable: the final sweep either finds no violation or throws
}

void check_compatible(const BundleHeader& header, const Scenario& s) {
    if (header.num_uavs != s.num_uavs || header.area_x != s.area_x || header.area_y != s.area_y ||
        header.h_min != s.h_min_m || header.h_max != s.h_max_m) {
        std::ostringstream os;
        os << "weights were built for M=" << header.num_uavs << ", area " << header.area_x << "x" << header.area_y
           << ", altitude [" << header.h_min << ", " << header.h_max << "] but the scenario has M=" << s.num_uavs
           << ", area " << s.area_x << "x" << s.area_y << ", altitude [" << s.h_min_m << ", " << s.h_max_m << "]";
        throw Error("inference", os.str());
    }
}

InferenceResult infer_deployment(const UserSet& users, const Scenario& s, const WeightBundle& bundle, Rng& rng,
                                 bool with_repair) {
    check_compatible(bundle.header, s);
    const RasterGrid grid = rasterize(users, s, bundle.header.grid, bundle.header.xi);
    const std::vector<float> out = forward(grid, bundle);
    InferenceResult r;
    r.deployment = decode(out, bundle.header).deployment;
    if (with_repair) {
        int sweeps = 0;
        r.deployment = repair(std::move(r.deployment), s, rng, &sweeps);
        r.repaired = sweeps > 0;
    }
    return r;
}

}  // namespace isac
