#pragma once

#include <fstream>
#include <string>

#include "magnn/bytesio.hpp"
#include "magnn/errors.hpp"
#include "magnn/model.hpp"

namespace magnn {

inline constexpr char kCheckpointMagic[9] = "MAGNNCK1";

namespace detail {

template <typename S>
void write_scalar(std::ostream& os, S x) {
    if constexpr (sizeof(S) == 8)
        write_f64(os, static_cast<double>(x));
    else
        write_f32(os, static_cast<float>(x));
}

template <typename S>
S read_scalar(std::istream& is, const char* what) {
    if constexpr (sizeof(S) == 8)
        return static_cast<S>(read_f64(is, what));
    else
        return static_cast<S>(read_f32(is, what));
}

}  // namespace detail

/// Writes config plus every tensor (name, shape, precision header; row-major
/// data in declared order, little-endian). Round-trips are bit-exact in the
/// stored precision.
template <typename S>
void save_checkpoint(const ModelParams<S>& params, const ModelConfig& cfg,
                     const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
    os.write(kCheckpointMagic, 8);
    write_u32(os, static_cast<uint32_t>(cfg.dim));
    write_u32(os, static_cast<uint32_t>(cfg.attn_dims));
    write_u32(os, static_cast<uint32_t>(cfg.memory_units));
    write_u32(os, static_cast<uint32_t>(cfg.window));
    write_u32(os, static_cast<uint32_t>(cfg.targets));
    write_u32(os, static_cast<uint32_t>(cfg.history_cap));
    write_u32(os, static_cast<uint32_t>(cfg.variant));
    write_u32(os, static_cast<uint32_t>(sizeof(S)));
    write_u64(os, cfg.seed);
    write_u64(os, static_cast<uint64_t>(params.num_users));
    write_u64(os, static_cast<uint64_t>(params.num_items));

    const auto tensors = params.tensors();
    write_u32(os, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, mat] : tensors) {
        write_str(os, name);
        write_u64(os, static_cast<uint64_t>(mat->rows));
        write_u64(os, static_cast<uint64_t>(mat->cols));
        write_u32(os, static_cast<uint32_t>(sizeof(S)));
    }
    for (const auto& [name, mat] : tensors)
        for (const S& x : mat->v) detail::write_scalar(os, x);
    if (!os) throw ConfigError("write failed for checkpoint: " + path);
}

/// Reads only the stored precision, so the caller can dispatch the scalar
/// type before loading tensors.
inline Precision checkpoint_precision(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint: " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::string(magic, 8) != kCheckpointMagic)
        throw ParseError("bad checkpoint magic (expected MAGNNCK1): " + path);
    for (int i = 0; i < 7; ++i) read_u32(is, "checkpoint header");
    const uint32_t prec = read_u32(is, "checkpoint precision");
    if (prec == 4) return Precision::f32;
    if (prec == 8) return Precision::f64;
    throw ParseError("checkpoint declares unsupported precision");
}

template <typename S>
std::pair<ModelParams<S>, ModelConfig> load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint: " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::string(magic, 8) != kCheckpointMagic)
        throw ParseError("bad checkpoint magic (expected MAGNNCK1): " + path);

    ModelConfig cfg;
    cfg.dim = static_cast<int>(read_u32(is, "dim"));
    cfg.attn_dims = static_cast<int>(read_u32(is, "attn_dims"));
    cfg.memory_units = static_cast<int>(read_u32(is, "memory_units"));
    cfg.window = static_cast<int>(read_u32(is, "window"));
    cfg.targets = static_cast<int>(read_u32(is, "targets"));
    cfg.history_cap = static_cast<int>(read_u32(is, "history_cap"));
    const uint32_t variant_code = read_u32(is, "variant");
    if (variant_code > static_cast<uint32_t>(Variant::FULL))
        throw ParseError("checkpoint declares unknown variant code");
    cfg.variant = static_cast<Variant>(variant_code);
    const uint32_t prec = read_u32(is, "precision");
    if (prec != sizeof(S))
        throw ParseError("checkpoint precision (" + std::to_string(prec * 8) +
                         "-bit) does not match the requested scalar type");
    cfg.precision = prec == 8 ? Precision::f64 : Precision::f32;
    cfg.seed = read_u64(is, "seed");
    const auto num_users = static_cast<int32_t>(read_u64(is, "num_users"));
    const auto num_items = static_cast<int32_t>(read_u64(is, "num_items"));

    Rng dummy(0);
    ModelParams<S> params = init_params<S>(cfg, num_users, num_items, dummy);

    const uint32_t count = read_u32(is, "tensor count");
    auto tensors = params.tensors();
    if (count != tensors.size())
        throw ParseError("checkpoint tensor count does not match the declared variant");
    for (auto& [name, mat] : tensors) {
        const std::string stored = read_str(is, "tensor name");
        if (stored != name)
            throw ParseError("checkpoint tensor order mismatch: expected '" +
                             std::string(name) + "', found '" + stored + "'");
        const auto rows = static_cast<int>(read_u64(is, "tensor rows"));
        const auto cols = static_cast<int>(read_u64(is, "tensor cols"));
        if (rows != mat->rows || cols != mat->cols)
            throw ParseError("checkpoint shape mismatch for '" + stored + "': stored " +
                             std::to_string(rows) + "x" + std::to_string(cols) +
                             ", config implies " + mat->shape_str());
        if (read_u32(is, "tensor dtype") != sizeof(S))
            throw ParseError("checkpoint tensor dtype mismatch for '" + stored + "'");
    }
    for (auto& [name, mat] : tensors)
        for (S& x : mat->v) x = detail::read_scalar<S>(is, name);
    return {std::move(params), cfg};
}

}  // namespace magnn
