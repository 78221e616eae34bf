#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "picardnet/linalg.hpp"

namespace picardnet {

/// Layer-size vector (k0, ..., k_{H+1}) of a feed-forward network.
struct DimVector {
    std::vector<std::int64_t> dims;

    std::size_t length() const { return dims.size(); }
    std::int64_t max_width() const;
    std::int64_t param_count() const;  // sum of k_n * (k_{n-1} + 1)

    bool operator==(const DimVector&) const = default;
    std::string to_string() const;
};

/// Same-depth parallel combination: keeps both endpoints, adds interior
/// widths. Requires equal length and equal endpoints.
DimVector dim_sum(const DimVector& a, const DimVector& b);

/// Serial combination of a after b: (b0,...,bH2, b_last + a0, a1,...,a_last).
/// Requires a's input width to equal b's output width.
DimVector dim_compose(const DimVector& a, const DimVector& b);

/// (d, 2d, ..., 2d, d) with n entries; the shape of the identity network.
DimVector standard_dim(std::int64_t n, std::int64_t d);

struct Layer {
    Matrix weight;
    Vec bias;
};

/// Weights and biases of a ReLU feed-forward network. The realized map
/// applies max(.,0) after every layer except the last. Immutable in
/// spirit: all construction goes through the free functions below.
class ReluNetwork {
public:
    ReluNetwork() = default;
    explicit ReluNetwork(std::vector<Layer> layers);

    const std::vector<Layer>& layers() const { return layers_; }
    std::int64_t input_dim() const;
    std::int64_t output_dim() const;
    std::size_t depth() const { return layers_.size() + 1; }  // entries of dims()
    DimVector dims() const;

    /// Number of scalars actually held in weight and bias storage.
    std::int64_t stored_scalar_count() const;

private:
    std::vector<Layer> layers_;
};

/// Forward pass; ReLU on hidden layers only.
Vec realize(const ReluNetwork& net, std::span<const double> x);

/// Exact identity on R^d with the standard (d, 2d, ..., 2d, d) shape.
ReluNetwork identity_net(std::int64_t d, std::int64_t depth);

/// Network of the given length realizing the constant zero map
/// R^in -> R^out, interior widths 1.
ReluNetwork zero_net(std::int64_t in_dim, std::int64_t out_dim, std::int64_t length);

/// Realizes x -> scale * (net(x + shift_in) + shift_out) without
/// changing the layer-size vector.
ReluNetwork affine_wrap(const ReluNetwork& net, double scale,
                        const Vec& shift_in, const Vec& shift_out);

/// Realizes outer after inner; dims equal dim_compose of the operands.
/// The junction doubles the interface width: the inner output z is
/// carried as the pair (max(z,0), max(-z,0)) and reassembled as z+ - z-.
ReluNetwork compose_nets(const ReluNetwork& outer, const ReluNetwork& inner);

/// Realizes sum_i coeffs[i] * nets[i](x). All operands must share input
/// width, output width and depth; dims equal the dim_sum fold.
ReluNetwork sum_nets(std::span<const double> coeffs,
                     std::span<const ReluNetwork> nets);

/// Same function, depth increased by `extra` via composition with an
/// identity network; extra == 0 returns the network unchanged.
ReluNetwork extend_depth(const ReluNetwork& net, std::int64_t extra);

/// Test utility: checks that the width of the composed chain
/// nets[0] o nets[1] o ... is bounded by the operand widths and twice
/// the interface widths.
bool chain_width_bound_holds(std::span<const ReluNetwork> nets);

/// Self-describing text serialization. Weights round-trip bit-exactly
/// (hexadecimal floating point).
void save_network(std::ostream& out, const ReluNetwork& net);
ReluNetwork load_network(std::istream& in);

}  // namespace picardnet
