#include "lrinfer/model_io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "lrinfer/common.hpp"
#include "lrinfer/dataset_io.hpp"

static_assert(std::endian::native == std::endian::little,
              "model container I/O assumes a little-endian host");
static_assert(sizeof(double) == 8, "model container assumes 64-bit doubles");

namespace lrinfer {

namespace {

constexpr char kMagic[4] = {'R', 'L', 'R', 'N'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t kind_tag(ModelKind kind) {
    return static_cast<std::uint32_t>(kind);
}

ModelKind kind_from_tag(std::uint32_t tag, const std::string& path) {
    if (tag > static_cast<std::uint32_t>(ModelKind::REINFORCE_HISTORY))
        throw ConfigError(path + ": unknown model kind tag " +
                          std::to_string(tag));
    return static_cast<ModelKind>(tag);
}

W0Mode w0_mode_from_tag(std::uint32_t tag, const std::string& path) {
    if (tag > static_cast<std::uint32_t>(W0Mode::Value))
        throw ConfigError(path + ": unknown initial-weight mode tag " +
                          std::to_string(tag));
    return static_cast<W0Mode>(tag);
}

struct Writer {
    std::vector<unsigned char> bytes;

    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void vec(const Vec& v) {
        for (double x : v) f64(x);
    }
};

struct Reader {
    const unsigned char* p;
    std::size_t left;
    const std::string& path;

    void raw(void* out, std::size_t n) {
        if (n > left)
            throw ConfigError(path + ": model file truncated");
        std::memcpy(out, p, n);
        p += n;
        left -= n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, 8);
        return v;
    }
    double f64() {
        double v;
        raw(&v, 8);
        return v;
    }
    Vec vec(std::size_t n) {
        Vec v(n);
        for (double& x : v) x = f64();
        return v;
    }
};

std::vector<unsigned char> serialize_body(const FittedModel& m) {
    Writer w;
    w.raw(kMagic, 4);
    w.u32(kVersion);
    w.u32(kind_tag(m.kind));
    w.u32(static_cast<std::uint32_t>(m.d));
    w.u32(static_cast<std::uint32_t>(m.n_inputs));
    w.u32(static_cast<std::uint32_t>(m.hidden));
    w.u32(static_cast<std::uint32_t>(m.w0_mode));
    w.u8(m.w0_trainable ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(m.psychometric_trials));
    w.f64(m.w0_offset_stim);
    w.u64(m.params.size());
    w.vec(m.params);
    w.u32(static_cast<std::uint32_t>(m.norm.mean.size()));
    w.vec(m.norm.mean);
    w.vec(m.norm.stdv);
    w.u64(m.w0_value.size());
    w.vec(m.w0_value);
    w.u64(m.w0.size());
    for (const auto& [id, w0] : m.w0) {  // std::map: deterministic order
        w.u64(id.size());
        w.raw(id.data(), id.size());
        if (w0.size() != static_cast<std::size_t>(m.d))
            throw DataError("initial weights for '" + id +
                            "' have the wrong dimension");
        w.vec(w0);
    }
    return std::move(w.bytes);
}

std::string body_hash(const std::vector<unsigned char>& body) {
    return sha256_hex(body.data(), body.size());
}

}  // namespace

void save_model(const std::string& path, const FittedModel& model) {
    const std::vector<unsigned char> body = serialize_body(model);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(body.data(), body.size(), digest, &len, EVP_sha256(),
                   nullptr) != 1 ||
        len != 32)
        throw NumericError("SHA-256 digest failed");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(body.data()),
              static_cast<std::streamsize>(body.size()));
    out.write(reinterpret_cast<const char*>(digest), 32);
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

FittedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    std::vector<unsigned char> bytes(
        (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 4 + 32 ||
        std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ConfigError(path + ": not a model file (bad magic)");

    const std::size_t body_size = bytes.size() - 32;
    const std::string actual = sha256_hex(bytes.data(), body_size);
    std::string stored;
    static const char* hex = "0123456789abcdef";
    for (std::size_t i = body_size; i < bytes.size(); ++i) {
        stored.push_back(hex[bytes[i] >> 4]);
        stored.push_back(hex[bytes[i] & 0xf]);
    }
    if (actual != stored)
        throw ConfigError(path + ": checksum mismatch (file corrupt)");

    Reader r{bytes.data() + 4, body_size - 4, path};
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw ConfigError(path + ": unsupported model format version " +
                          std::to_string(version));

    FittedModel m;
    m.kind = kind_from_tag(r.u32(), path);
    m.d = static_cast<int>(r.u32());
    m.n_inputs = static_cast<int>(r.u32());
    m.hidden = static_cast<int>(r.u32());
    m.w0_mode = w0_mode_from_tag(r.u32(), path);
    m.w0_trainable = r.u8() != 0;
    m.psychometric_trials = static_cast<int>(r.u32());
    m.w0_offset_stim = r.f64();
    m.params = r.vec(r.u64());
    const std::size_t n_norm = r.u32();
    m.norm.mean = r.vec(n_norm);
    m.norm.stdv = r.vec(n_norm);
    m.w0_value = r.vec(r.u64());
    const std::uint64_t n_animals = r.u64();
    for (std::uint64_t i = 0; i < n_animals; ++i) {
        const std::uint64_t id_len = r.u64();
        std::string id(id_len, '\0');
        r.raw(id.data(), id_len);
        m.w0[id] = r.vec(static_cast<std::size_t>(m.d));
    }
    if (r.left != 0)
        throw ConfigError(path + ": trailing bytes after model body");

    if (m.d != glm_dim(m.kind) || m.n_inputs != network_inputs(m.kind))
        throw ConfigError(path + ": architecture fields inconsistent with "
                                 "the model kind");
    if (m.norm.mean.size() != static_cast<std::size_t>(m.n_inputs))
        throw ConfigError(path + ": normalization block has wrong size");
    return m;
}

std::string model_content_hash(const FittedModel& model) {
    return body_hash(serialize_body(model));
}

}  // namespace lrinfer
