#include "picardnet/relunet.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace picardnet {

std::int64_t DimVector::max_width() const {
    std::int64_t m = 0;
    for (std::int64_t k : dims) m = std::max(m, k);
    return m;
}

std::int64_t DimVector::param_count() const {
    std::int64_t p = 0;
    for (std::size_t i = 1; i < dims.size(); ++i) p += dims[i] * (dims[i - 1] + 1);
    return p;
}

std::string DimVector::to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + ")";
}

DimVector dim_sum(const DimVector& a, const DimVector& b) {
    if (a.length() != b.length())
        throw std::invalid_argument("dim_sum: length mismatch " + a.to_string() +
                                    " vs " + b.to_string());
    if (a.dims.front() != b.dims.front() || a.dims.back() != b.dims.back())
        throw std::invalid_argument("dim_sum: endpoint mismatch " + a.to_string() +
                                    " vs " + b.to_string());
    DimVector r = a;
    for (std::size_t i = 1; i + 1 < r.dims.size(); ++i) r.dims[i] += b.dims[i];
    return r;
}

DimVector dim_compose(const DimVector& a, const DimVector& b) {
    if (a.length() < 2 || b.length() < 2)
        throw std::invalid_argument("dim_compose: operands need length >= 2");
    if (a.dims.front() != b.dims.back())
        throw std::invalid_argument("dim_compose: interface mismatch " +
                                    a.to_string() + " after " + b.to_string());
    DimVector r;
    r.dims.assign(b.dims.begin(), b.dims.end() - 1);
    r.dims.push_back(b.dims.back() + a.dims.front());
    r.dims.insert(r.dims.end(), a.dims.begin() + 1, a.dims.end());
    return r;
}

DimVector standard_dim(std::int64_t n, std::int64_t d) {
    if (n < 3) throw std::invalid_argument("standard_dim: need n >= 3");
    if (d < 1) throw std::invalid_argument("standard_dim: need d >= 1");
    DimVector r;
    r.dims.assign(static_cast<std::size_t>(n), 2 * d);
    r.dims.front() = d;
    r.dims.back() = d;
    return r;
}

ReluNetwork::ReluNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty())
        throw std::invalid_argument("ReluNetwork: need at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Layer& l = layers_[i];
        if (l.weight.rows() != l.bias.size())
            throw std::invalid_argument("ReluNetwork: bias size mismatch in layer " +
                                        std::to_string(i + 1));
        if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows())
            throw std::invalid_argument("ReluNetwork: shape mismatch between layers " +
                                        std::to_string(i) + " and " +
                                        std::to_string(i + 1));
    }
}

std::int64_t ReluNetwork::input_dim() const {
    return static_cast<std::int64_t>(layers_.front().weight.cols());
}

std::int64_t ReluNetwork::output_dim() const {
    return static_cast<std::int64_t>(layers_.back().weight.rows());
}

DimVector ReluNetwork::dims() const {
    DimVector d;
    d.dims.reserve(layers_.size() + 1);
    d.dims.push_back(input_dim());
    for (const Layer& l : layers_)
        d.dims.push_back(static_cast<std::int64_t>(l.weight.rows()));
    return d;
}

std::int64_t ReluNetwork::stored_scalar_count() const {
    std::int64_t n = 0;
    for (const Layer& l : layers_)
        n += static_cast<std::int64_t>(l.weight.size() + l.bias.size());
    return n;
}

Vec realize(const ReluNetwork& net, std::span<const double> x) {
    const auto& layers = net.layers();
    if (x.size() != layers.front().weight.cols())
        throw std::invalid_argument("realize: input size mismatch");
    Vec h(x.begin(), x.end());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        Vec z = layers[i].weight.apply(h);
        for (std::size_t j = 0; j < z.size(); ++j) z[j] += layers[i].bias[j];
        if (i + 1 < layers.size())
            for (double& v : z) v = std::max(v, 0.0);
        h = std::move(z);
    }
    return h;
}

ReluNetwork identity_net(std::int64_t d, std::int64_t depth) {
    if (depth < 3) throw std::invalid_argument("identity_net: need depth >= 3");
    const auto du = static_cast<std::size_t>(d);
    std::vector<Layer> layers;
    layers.reserve(static_cast<std::size_t>(depth - 1));
    Matrix split(2 * du, du);
    for (std::size_t i = 0; i < du; ++i) {
        split(i, i) = 1.0;
        split(du + i, i) = -1.0;
    }
    layers.push_back({std::move(split), Vec(2 * du, 0.0)});
    // Interior layers pass the nonnegative channels through unchanged.
    for (std::int64_t k = 0; k < depth - 3; ++k)
        layers.push_back({Matrix::identity(2 * du), Vec(2 * du, 0.0)});
    Matrix merge(du, 2 * du);
    for (std::size_t i = 0; i < du; ++i) {
        merge(i, i) = 1.0;
        merge(i, du + i) = -1.0;
    }
    layers.push_back({std::move(merge), Vec(du, 0.0)});
    return ReluNetwork(std::move(layers));
}

ReluNetwork zero_net(std::int64_t in_dim, std::int64_t out_dim, std::int64_t length) {
    if (length < 2) throw std::invalid_argument("zero_net: need length >= 2");
    std::vector<Layer> layers;
    std::int64_t prev = in_dim;
    for (std::int64_t i = 1; i + 1 < length; ++i) {
        layers.push_back({Matrix(1, static_cast<std::size_t>(prev)), Vec(1, 0.0)});
        prev = 1;
    }
    layers.push_back({Matrix(static_cast<std::size_t>(out_dim),
                             static_cast<std::size_t>(prev)),
                      Vec(static_cast<std::size_t>(out_dim), 0.0)});
    return ReluNetwork(std::move(layers));
}

ReluNetwork affine_wrap(const ReluNetwork& net, double scale,
                        const Vec& shift_in, const Vec& shift_out) {
    if (static_cast<std::int64_t>(shift_in.size()) != net.input_dim())
        throw std::invalid_argument("affine_wrap: shift_in size mismatch");
    if (static_cast<std::int64_t>(shift_out.size()) != net.output_dim())
        throw std::invalid_argument("affine_wrap: shift_out size mismatch");
    std::vector<Layer> layers = net.layers();
    {
        Layer& first = layers.front();
        const Vec extra = first.weight.apply(shift_in);
        for (std::size_t i = 0; i < first.bias.size(); ++i) first.bias[i] += extra[i];
    }
    {
        Layer& last = layers.back();
        for (double& w : last.weight.data()) w *= scale;
        for (std::size_t i = 0; i < last.bias.size(); ++i)
            last.bias[i] = scale * (last.bias[i] + shift_out[i]);
    }
    return ReluNetwork(std::move(layers));
}

ReluNetwork compose_nets(const ReluNetwork& outer, const ReluNetwork& inner) {
    if (outer.input_dim() != inner.output_dim())
        throw std::invalid_argument("compose_nets: interface mismatch (" +
                                    std::to_string(outer.input_dim()) + " vs " +
                                    std::to_string(inner.output_dim()) + ")");
    const auto q = static_cast<std::size_t>(inner.output_dim());
    std::vector<Layer> layers(inner.layers().begin(), inner.layers().end() - 1);
    layers.reserve(inner.layers().size() + outer.layers().size());

    // Junction hidden layer carrying (z+, z-) of the inner output z.
    const Layer& ilast = inner.layers().back();
    Matrix jw(2 * q, ilast.weight.cols());
    Vec jb(2 * q);
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = 0; j < ilast.weight.cols(); ++j) {
            jw(i, j) = ilast.weight(i, j);
            jw(q + i, j) = -ilast.weight(i, j);
        }
        jb[i] = ilast.bias[i];
        jb[q + i] = -ilast.bias[i];
    }
    layers.push_back({std::move(jw), std::move(jb)});

    // Outer first layer sees z = z+ - z-.
    const Layer& ofirst = outer.layers().front();
    Matrix fw(ofirst.weight.rows(), 2 * q);
    for (std::size_t i = 0; i < ofirst.weight.rows(); ++i)
        for (std::size_t j = 0; j < q; ++j) {
            fw(i, j) = ofirst.weight(i, j);
            fw(i, q + j) = -ofirst.weight(i, j);
        }
    layers.push_back({std::move(fw), ofirst.bias});

    layers.insert(layers.end(), outer.layers().begin() + 1, outer.layers().end());
    return ReluNetwork(std::move(layers));
}

ReluNetwork sum_nets(std::span<const double> coeffs,
                     std::span<const ReluNetwork> nets) {
    if (nets.empty() || coeffs.size() != nets.size())
        throw std::invalid_argument("sum_nets: need matching nonempty operand lists");
    const std::size_t depth = nets[0].layers().size();
    const std::int64_t in_dim = nets[0].input_dim();
    const std::int64_t out_dim = nets[0].output_dim();
    for (const ReluNetwork& n : nets)
        if (n.layers().size() != depth || n.input_dim() != in_dim ||
            n.output_dim() != out_dim)
            throw std::invalid_argument("sum_nets: operands must share depth and endpoints");
    if (nets.size() == 1 && coeffs[0] == 1.0) return nets[0];

    if (depth == 1) {
        // Single affine layers collapse to one dense weighted sum.
        Matrix w(static_cast<std::size_t>(out_dim), static_cast<std::size_t>(in_dim));
        Vec b(static_cast<std::size_t>(out_dim), 0.0);
        for (std::size_t k = 0; k < nets.size(); ++k) {
            const Layer& src = nets[k].layers()[0];
            for (std::size_t i = 0; i < src.weight.rows(); ++i) {
                for (std::size_t j = 0; j < src.weight.cols(); ++j)
                    w(i, j) += coeffs[k] * src.weight(i, j);
                b[i] += coeffs[k] * src.bias[i];
            }
        }
        std::vector<Layer> single;
        single.push_back({std::move(w), std::move(b)});
        return ReluNetwork(std::move(single));
    }

    std::vector<Layer> layers;
    layers.reserve(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        std::size_t rows = 0, cols = 0;
        for (const ReluNetwork& n : nets) {
            rows += n.layers()[l].weight.rows();
            cols += n.layers()[l].weight.cols();
        }
        if (l == 0) {
            // Shared input: stack vertically.
            Matrix w(rows, static_cast<std::size_t>(in_dim));
            Vec b(rows);
            std::size_t r0 = 0;
            for (const ReluNetwork& n : nets) {
                const Layer& src = n.layers()[0];
                for (std::size_t i = 0; i < src.weight.rows(); ++i) {
                    for (std::size_t j = 0; j < src.weight.cols(); ++j)
                        w(r0 + i, j) = src.weight(i, j);
                    b[r0 + i] = src.bias[i];
                }
                r0 += src.weight.rows();
            }
            layers.push_back({std::move(w), std::move(b)});
        } else if (l + 1 < depth) {
            Matrix w(rows, cols);
            Vec b(rows);
            std::size_t r0 = 0, c0 = 0;
            for (const ReluNetwork& n : nets) {
                const Layer& src = n.layers()[l];
                for (std::size_t i = 0; i < src.weight.rows(); ++i) {
                    for (std::size_t j = 0; j < src.weight.cols(); ++j)
                        w(r0 + i, c0 + j) = src.weight(i, j);
                    b[r0 + i] = src.bias[i];
                }
                r0 += src.weight.rows();
                c0 += src.weight.cols();
            }
            layers.push_back({std::move(w), std::move(b)});
        } else {
            // Output layer: concatenate horizontally, fold in coefficients.
            Matrix w(static_cast<std::size_t>(out_dim), cols);
            Vec b(static_cast<std::size_t>(out_dim), 0.0);
            std::size_t c0 = 0;
            for (std::size_t k = 0; k < nets.size(); ++k) {
                const Layer& src = nets[k].layers()[l];
                for (std::size_t i = 0; i < src.weight.rows(); ++i) {
                    for (std::size_t j = 0; j < src.weight.cols(); ++j)
                        w(i, c0 + j) = coeffs[k] * src.weight(i, j);
                    b[i] += coeffs[k] * src.bias[i];
                }
                c0 += src.weight.cols();
            }
            layers.push_back({std::move(w), std::move(b)});
        }
    }
    return ReluNetwork(std::move(layers));
}

ReluNetwork extend_depth(const ReluNetwork& net, std::int64_t extra) {
    if (extra < 0) throw std::invalid_argument("extend_depth: extra must be >= 0");
    if (extra == 0) return net;
    // Composing with an identity of length j adds j - 1 entries.
    if (extra == 1) {
        const auto d = static_cast<std::size_t>(net.output_dim());
        std::vector<Layer> one;
        one.push_back({Matrix::identity(d), Vec(d, 0.0)});
        return compose_nets(ReluNetwork(std::move(one)), net);
    }
    return compose_nets(identity_net(net.output_dim(), extra + 1), net);
}

bool chain_width_bound_holds(std::span<const ReluNetwork> nets) {
    if (nets.empty()) throw std::invalid_argument("chain_width_bound_holds: empty chain");
    DimVector chain = nets.front().dims();
    std::int64_t bound = chain.max_width();
    for (std::size_t i = 1; i < nets.size(); ++i) {
        if (nets[i].output_dim() != chain.dims.front())
            throw std::invalid_argument("chain_width_bound_holds: chain not composable");
        bound = std::max(bound, nets[i].dims().max_width());
        bound = std::max(bound, 2 * nets[i].output_dim());
        chain = dim_compose(chain, nets[i].dims());
    }
    return chain.max_width() <= bound;
}

namespace {

void write_double(std::ostream& out, double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    out << buf;
}

double read_double(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("load_network: truncated input");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw std::runtime_error("load_network: bad float token '" + tok + "'");
    return v;
}

}  // namespace

void save_network(std::ostream& out, const ReluNetwork& net) {
    const DimVector dv = net.dims();
    out << "relunet 1\n";
    out << "dims";
    for (std::int64_t k : dv.dims) out << ' ' << k;
    out << '\n';
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const Layer& layer = net.layers()[l];
        out << "layer " << (l + 1) << '\n';
        for (std::size_t i = 0; i < layer.weight.rows(); ++i) {
            out << "w";
            for (std::size_t j = 0; j < layer.weight.cols(); ++j) {
                out << ' ';
                write_double(out, layer.weight(i, j));
            }
            out << '\n';
        }
        out << "b";
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            out << ' ';
            write_double(out, layer.bias[i]);
        }
        out << '\n';
    }
}

ReluNetwork load_network(std::istream& in) {
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "relunet" || version != 1)
        throw std::runtime_error("load_network: bad header");
    if (!(in >> tag) || tag != "dims")
        throw std::runtime_error("load_network: missing dims");
    std::string line;
    std::getline(in, line);
    std::istringstream dims_in(line);
    std::vector<std::int64_t> dims;
    std::int64_t k;
    while (dims_in >> k) dims.push_back(k);
    if (dims.size() < 2) throw std::runtime_error("load_network: need >= 2 dims");
    std::vector<Layer> layers;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        std::size_t idx;
        if (!(in >> tag >> idx) || tag != "layer" || idx != l)
            throw std::runtime_error("load_network: missing layer " + std::to_string(l));
        const auto rows = static_cast<std::size_t>(dims[l]);
        const auto cols = static_cast<std::size_t>(dims[l - 1]);
        Matrix w(rows, cols);
        for (std::size_t i = 0; i < rows; ++i) {
            if (!(in >> tag) || tag != "w")
                throw std::runtime_error("load_network: missing weight row");
            for (std::size_t j = 0; j < cols; ++j) w(i, j) = read_double(in);
        }
        if (!(in >> tag) || tag != "b")
            throw std::runtime_error("load_network: missing bias row");
        Vec b(rows);
        for (std::size_t i = 0; i < rows; ++i) b[i] = read_double(in);
        layers.push_back({std::move(w), std::move(b)});
    }
    return ReluNetwork(std::move(layers));
}

}  // namespace picardnet
