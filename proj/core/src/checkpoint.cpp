#include "minirank/checkpoint.hpp"

#include "minirank/util.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace minirank {

namespace {

constexpr uint32_t kMagic = 0x4d52434bu;  // "MRCK"
constexpr uint32_t kVersion = 1;
constexpr uint32_t kEndianTag = 0x01020304u;

void write_tensor(std::ostream& os, const std::string& name, const double* data,
                  long rows, long cols, bool col_major) {
    io::write_string(os, name);
    io::write_u64(os, static_cast<uint64_t>(rows));
    io::write_u64(os, static_cast<uint64_t>(cols));
    // stored row-major regardless of in-memory layout
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c)
            io::write_f64(os, col_major ? data[c * rows + r] : data[r * cols + c]);
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
    io::write_u32(os, kMagic);
    io::write_u32(os, kVersion);
    io::write_u32(os, kEndianTag);
    const ModelConfig& c = ckpt.config;
    io::write_u32(os, static_cast<uint32_t>(c.vocab_size));
    io::write_u32(os, static_cast<uint32_t>(c.d_model));
    io::write_u32(os, static_cast<uint32_t>(c.n_heads));
    io::write_u32(os, static_cast<uint32_t>(c.n_layers));
    io::write_u32(os, static_cast<uint32_t>(c.d_ff));
    io::write_u32(os, static_cast<uint32_t>(c.max_seq_len));
    io::write_u32(os, c.attention_mode == AttentionMode::kCausal ? 0u : 1u);
    io::write_u64(os, c.seed);

    auto refs = tensor_refs(ckpt.params);
    io::write_u32(os, static_cast<uint32_t>(refs.size() + ckpt.extra.size()));
    for (const auto& ref : refs)
        write_tensor(os, ref.name, ref.data, ref.rows, ref.cols, /*col_major=*/true);
    for (const auto& [name, m] : ckpt.extra)
        write_tensor(os, name, m.data(), m.rows(), m.cols(), /*col_major=*/true);
    if (!os) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
    if (io::read_u32(is) != kMagic) throw std::runtime_error("bad checkpoint magic: " + path);
    if (io::read_u32(is) != kVersion)
        throw std::runtime_error("unsupported checkpoint version: " + path);
    if (io::read_u32(is) != kEndianTag)
        throw std::runtime_error("checkpoint endianness mismatch: " + path);

    Checkpoint ckpt;
    ModelConfig& c = ckpt.config;
    c.vocab_size = static_cast<int>(io::read_u32(is));
    c.d_model = static_cast<int>(io::read_u32(is));
    c.n_heads = static_cast<int>(io::read_u32(is));
    c.n_layers = static_cast<int>(io::read_u32(is));
    c.d_ff = static_cast<int>(io::read_u32(is));
    c.max_seq_len = static_cast<int>(io::read_u32(is));
    c.attention_mode = io::read_u32(is) == 0 ? AttentionMode::kCausal
                                             : AttentionMode::kBidirectional;
    c.seed = io::read_u64(is);
    c.validate();

    ckpt.params = init_params(c);  // allocate shapes; values overwritten below
    auto refs = tensor_refs(ckpt.params);
    std::map<std::string, TensorRef*> by_name;
    for (auto& ref : refs) by_name[ref.name] = &ref;

    uint32_t n_tensors = io::read_u32(is);
    for (uint32_t t = 0; t < n_tensors; ++t) {
        std::string name = io::read_string(is);
        long rows = static_cast<long>(io::read_u64(is));
        long cols = static_cast<long>(io::read_u64(is));
        auto it = by_name.find(name);
        if (it != by_name.end()) {
            TensorRef* ref = it->second;
            if (ref->rows != rows || ref->cols != cols)
                throw std::runtime_error("tensor shape mismatch for '" + name + "' in " + path);
            for (long r = 0; r < rows; ++r)
                for (long c2 = 0; c2 < cols; ++c2)
                    ref->data[c2 * rows + r] = io::read_f64(is);
        } else {
            Eigen::MatrixXd m(rows, cols);
            for (long r = 0; r < rows; ++r)
                for (long c2 = 0; c2 < cols; ++c2) m(r, c2) = io::read_f64(is);
            ckpt.extra.emplace(std::move(name), std::move(m));
        }
    }
    return ckpt;
}

uint64_t checkpoint_fingerprint(const Checkpoint& ckpt) {
    std::ostringstream ss;
    const ModelConfig& c = ckpt.config;
    ss << c.vocab_size << '|' << c.d_model << '|' << c.n_heads << '|' << c.n_layers << '|'
       << c.d_ff << '|' << c.max_seq_len << '|' << to_string(c.attention_mode) << '|' << c.seed;
    std::string header = ss.str();
    uint64_t h = fnv1a(header);
    auto mix = [&h](const double* data, long n) {
        for (long i = 0; i < n; ++i) {
            uint64_t bits;
            std::memcpy(&bits, &data[i], sizeof(bits));
            h ^= bits;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& ref : tensor_refs(ckpt.params)) mix(ref.data, ref.size());
    for (const auto& [name, m] : ckpt.extra) {
        h ^= fnv1a(name);
        mix(m.data(), m.size());
    }
    return h;
}

} // namespace minirank
