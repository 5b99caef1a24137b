#include "hysec/sealvault.hpp"

#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/rand.h>

#include <atomic>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <sys/stat.h>
#include <vector>

#include "hysec/binio.hpp"

namespace hysec::sealvault {

namespace {

constexpr std::string_view kMagic = "HSSB";
constexpr std::uint16_t kFormatVersion = 1;
constexpr std::size_t kNonceSize = 12;
constexpr std::size_t kTagSize = 16;
constexpr std::size_t kChunkFraming = kNonceSize + kTagSize;
constexpr std::uint32_t kMaxChunkSize = 256u << 20;

struct EvpCtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using EvpCtx = std::unique_ptr<EVP_CIPHER_CTX, EvpCtxDeleter>;

struct Nonce {
    std::array<std::uint8_t, kNonceSize> bytes;
};

// Per-process random prefix plus a counter; no nonce repeats under one
// derived key within a process lifetime.
Nonce next_nonce() {
    static const std::uint32_t prefix = [] {
        std::uint32_t p = 0;
        if (RAND_bytes(reinterpret_cast<unsigned char*>(&p), sizeof(p)) != 1) {
            throw SealFailure("RAND_bytes failed for nonce prefix");
        }
        return p;
    }();
    static std::atomic<std::uint64_t> counter{0};
    std::uint64_t c = counter.fetch_add(1, std::memory_order_relaxed);
    Nonce n;
    std::memcpy(n.bytes.data(), &prefix, 4);
    for (int i = 0; i < 8; ++i) n.bytes[4 + i] = static_cast<std::uint8_t>(c >> (8 * i));
    return n;
}

std::string header_bytes(const KeyPolicy& policy, std::uint32_t chunk_size) {
    std::ostringstream out;
    binio::put_magic(out, kMagic);
    binio::put_le<std::uint16_t>(out, kFormatVersion);
    binio::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(policy.kind));
    binio::put_bytes(out, policy.digest.data(), policy.digest.size());
    binio::put_le<std::uint32_t>(out, policy.version);
    binio::put_le<std::uint32_t>(out, chunk_size);
    return out.str();
}

constexpr std::size_t kHeaderSize = 4 + 2 + 1 + 32 + 4 + 4;

std::string chunk_aad(const std::string& header, std::uint64_t index, bool last) {
    std::string aad = header;
    for (int i = 0; i < 8; ++i) aad.push_back(static_cast<char>(index >> (8 * i)));
    aad.push_back(last ? '\x01' : '\x00');
    return aad;
}

void gcm_encrypt_chunk(const Key256& key, const Nonce& nonce, std::string_view aad, std::string_view plaintext,
                       std::vector<unsigned char>& ciphertext, std::array<std::uint8_t, kTagSize>& tag) {
    EvpCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw SealFailure("cipher context allocation failed");
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce.bytes.data()) != 1) {
        throw SealFailure("AES-256-GCM init failed");
    }
    int len = 0;
    if (!aad.empty() &&
        EVP_EncryptUpdate(ctx.get(), nullptr, &len, reinterpret_cast<const unsigned char*>(aad.data()),
                          static_cast<int>(aad.size())) != 1) {
        throw SealFailure("AAD absorb failed");
    }
    ciphertext.resize(plaintext.size());
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), ciphertext.data(), &len, reinterpret_cast<const unsigned char*>(plaintext.data()),
                          static_cast<int>(plaintext.size())) != 1) {
        throw SealFailure("encrypt failed");
    }
    if (EVP_EncryptFinal_ex(ctx.get(), ciphertext.data() + plaintext.size(), &len) != 1) {
        throw SealFailure("encrypt finalization failed");
    }
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagSize, tag.data()) != 1) {
        throw SealFailure("tag extraction failed");
    }
}

void gcm_decrypt_chunk(const Key256& key, const unsigned char* nonce, std::string_view aad,
                       const unsigned char* ciphertext, std::size_t ct_len, const unsigned char* tag,
                       std::vector<unsigned char>& plaintext, const char* context) {
    EvpCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw SealFailure("cipher context allocation failed");
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, key.data(), nonce) != 1) {
        throw SealFailure("AES-256-GCM init failed");
    }
    int len = 0;
    if (!aad.empty() &&
        EVP_DecryptUpdate(ctx.get(), nullptr, &len, reinterpret_cast<const unsigned char*>(aad.data()),
                          static_cast<int>(aad.size())) != 1) {
        throw SealFailure("AAD absorb failed");
    }
    plaintext.resize(ct_len);
    if (ct_len > 0 && EVP_DecryptUpdate(ctx.get(), plaintext.data(), &len, ciphertext, static_cast<int>(ct_len)) != 1) {
        throw SealFailure("decrypt failed");
    }
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagSize, const_cast<unsigned char*>(tag)) != 1) {
        throw SealFailure("tag set failed");
    }
    if (EVP_DecryptFinal_ex(ctx.get(), plaintext.data() + ct_len, &len) != 1) {
        throw AuthFailure(context);
    }
}

}  // namespace

const char* policy_kind_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::enclave_identity: return "enclave_identity";
        case PolicyKind::signing_identity: return "signing_identity";
        case PolicyKind::user_key: return "user_key";
    }
    return "unknown";
}

KeyVault KeyVault::from_secrets(std::optional<Key256> platform_root, std::optional<Key256> user_key) {
    KeyVault v;
    v.root_ = platform_root;
    v.user_key_ = user_key;
    return v;
}

KeyVault KeyVault::from_files(const std::filesystem::path& root_key_file,
                              const std::filesystem::path& user_key_file) {
    KeyVault v;
    if (!root_key_file.empty()) v.root_ = load_key_file(root_key_file);
    if (!user_key_file.empty()) v.user_key_ = load_key_file(user_key_file);
    return v;
}

KeyPolicy KeyVault::normalize(const KeyPolicy& policy) const {
    if (policy.kind != PolicyKind::user_key) return policy;
    if (!user_key_) throw MissingRoot("user key required for user_key policy");
    KeyPolicy p = policy;
    Sha256 h;
    h.update("hysec-user-key-id\0", 18);
    h.update(user_key_->data(), user_key_->size());
    p.digest = h.finish();
    p.version = 0;
    return p;
}

Key256 KeyVault::derive_key(const KeyPolicy& policy) const {
    const KeyPolicy p = normalize(policy);
    const std::optional<Key256>& ikm = p.kind == PolicyKind::user_key ? user_key_ : root_;
    if (!ikm) {
        throw MissingRoot(p.kind == PolicyKind::user_key ? "user key not loaded"
                                                         : "platform root secret not loaded");
    }

    // info = policy serialization, so every policy field is a derivation input
    std::string info;
    info.push_back(static_cast<char>(p.kind));
    info.append(reinterpret_cast<const char*>(p.digest.data()), p.digest.size());
    for (int i = 0; i < 4; ++i) info.push_back(static_cast<char>(p.version >> (8 * i)));

    static constexpr char kSalt[] = "hysec-sealvault-v1";
    Key256 out{};
    std::unique_ptr<EVP_PKEY_CTX, decltype(&EVP_PKEY_CTX_free)> ctx(
        EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr), EVP_PKEY_CTX_free);
    if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1 ||
        EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()) != 1 ||
        EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), reinterpret_cast<const unsigned char*>(kSalt), sizeof(kSalt) - 1) != 1 ||
        EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ikm->data(), static_cast<int>(ikm->size())) != 1 ||
        EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), reinterpret_cast<const unsigned char*>(info.data()),
                                    static_cast<int>(info.size())) != 1) {
        throw SealFailure("HKDF setup failed");
    }
    std::size_t out_len = out.size();
    if (EVP_PKEY_derive(ctx.get(), out.data(), &out_len) != 1 || out_len != out.size()) {
        throw SealFailure("HKDF derive failed");
    }
    return out;
}

Key256 load_key_file(const std::filesystem::path& path) {
    struct stat st{};
    if (::stat(path.c_str(), &st) != 0) throw KeyFileError("cannot stat " + path.string());
    if ((st.st_mode & 077) != 0) {
        throw KeyFileError(path.string() + " is readable by group/other; expected mode 0600");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw KeyFileError("cannot open " + path.string());
    Key256 key{};
    in.read(reinterpret_cast<char*>(key.data()), key.size());
    if (static_cast<std::size_t>(in.gcount()) != key.size() || in.peek() != EOF) {
        throw KeyFileError(path.string() + " must contain exactly 32 raw bytes");
    }
    return key;
}

void write_key_file(const std::filesystem::path& path, const Key256& key) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw KeyFileError("cannot write " + path.string());
        out.write(reinterpret_cast<const char*>(key.data()), key.size());
    }
    std::filesystem::permissions(path, std::filesystem::perms::owner_read | std::filesystem::perms::owner_write,
                                 std::filesystem::perm_options::replace);
}

Key256 random_key() {
    Key256 key{};
    if (RAND_bytes(key.data(), static_cast<int>(key.size())) != 1) {
        throw SealFailure("RAND_bytes failed");
    }
    return key;
}

void seal_stream(std::istream& plaintext, std::ostream& out, const KeyVault& vault, const KeyPolicy& policy,
                 std::uint32_t chunk_size) {
    if (chunk_size < 1 || chunk_size > kMaxChunkSize) throw SealFailure("chunk size out of range");
    const KeyPolicy norm = vault.normalize(policy);
    const Key256 key = vault.derive_key(norm);
    const std::string header = header_bytes(norm, chunk_size);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));

    std::string current(chunk_size, '\0'), pending(chunk_size, '\0');
    auto read_chunk = [&](std::string& buf) -> std::size_t {
        plaintext.read(buf.data(), chunk_size);
        return static_cast<std::size_t>(plaintext.gcount());
    };

    std::size_t current_len = read_chunk(current);
    std::uint64_t index = 0;
    std::vector<unsigned char> ciphertext;
    std::array<std::uint8_t, kTagSize> tag{};
    while (true) {
        std::size_t pending_len = current_len == chunk_size ? read_chunk(pending) : 0;
        const bool last = pending_len == 0;
        Nonce nonce = next_nonce();
        gcm_encrypt_chunk(key, nonce, chunk_aad(header, index, last),
                          std::string_view(current.data(), current_len), ciphertext, tag);
        binio::put_bytes(out, nonce.bytes.data(), nonce.bytes.size());
        binio::put_bytes(out, ciphertext.data(), ciphertext.size());
        binio::put_bytes(out, tag.data(), tag.size());
        if (last) break;
        current.swap(pending);
        current_len = pending_len;
        ++index;
    }
    if (!out) throw SealFailure("write failed");
}

namespace {

BlobHeader parse_header(std::istream& in) {
    if (!binio::check_magic(in, kMagic)) throw AuthFailure("missing HSSB magic");
    auto version = binio::get_le<std::uint16_t>(in, "version");
    if (version != kFormatVersion) throw AuthFailure("unsupported format version " + std::to_string(version));
    BlobHeader h{};
    auto kind = binio::get_le<std::uint8_t>(in, "policy kind");
    if (kind < 1 || kind > 3) throw AuthFailure("unknown policy kind " + std::to_string(kind));
    h.kind = static_cast<PolicyKind>(kind);
    binio::get_bytes(in, h.policy_digest.data(), h.policy_digest.size(), "policy digest");
    h.policy_version = binio::get_le<std::uint32_t>(in, "policy version");
    h.chunk_size = binio::get_le<std::uint32_t>(in, "chunk size");
    if (h.chunk_size < 1 || h.chunk_size > kMaxChunkSize) throw AuthFailure("chunk size out of range");
    return h;
}

}  // namespace

void unseal_stream(std::istream& sealed, std::uint64_t sealed_size, std::ostream& out, const KeyVault& vault,
                   const KeyPolicy& policy) {
    const BlobHeader h = parse_header(sealed);
    const KeyPolicy requested = vault.normalize(policy);
    if (h.kind != requested.kind || h.policy_digest != requested.digest || h.policy_version != requested.version) {
        throw PolicyMismatch(std::string("blob sealed under ") + policy_kind_name(h.kind) +
                             ", requested " + policy_kind_name(requested.kind));
    }
    const Key256 key = vault.derive_key(requested);
    const std::string header = header_bytes(requested, h.chunk_size);

    if (sealed_size < kHeaderSize + kChunkFraming) throw AuthFailure("sealed stream shorter than one chunk");
    const std::uint64_t body = sealed_size - kHeaderSize;
    const std::uint64_t full_chunk = static_cast<std::uint64_t>(h.chunk_size) + kChunkFraming;
    const std::uint64_t n_chunks = (body + full_chunk - 1) / full_chunk;
    if (n_chunks * kChunkFraming > body) throw AuthFailure("sealed stream has malformed chunk framing");
    const std::uint64_t plain_total = body - n_chunks * kChunkFraming;
    if (plain_total < (n_chunks - 1) * static_cast<std::uint64_t>(h.chunk_size) ||
        plain_total > n_chunks * static_cast<std::uint64_t>(h.chunk_size)) {
        throw AuthFailure("sealed stream has malformed chunk framing");
    }

    std::vector<unsigned char> buf(h.chunk_size + kChunkFraming);
    std::vector<unsigned char> plain;
    std::uint64_t remaining_plain = plain_total;
    for (std::uint64_t index = 0; index < n_chunks; ++index) {
        const bool last = index + 1 == n_chunks;
        const std::size_t ct_len =
            last ? static_cast<std::size_t>(remaining_plain) : static_cast<std::size_t>(h.chunk_size);
        binio::get_bytes(sealed, buf.data(), kNonceSize + ct_len + kTagSize, "sealed chunk");
        const std::string context = "chunk " + std::to_string(index);
        gcm_decrypt_chunk(key, buf.data(), chunk_aad(header, index, last), buf.data() + kNonceSize, ct_len,
                          buf.data() + kNonceSize + ct_len, plain, context.c_str());
        out.write(reinterpret_cast<const char*>(plain.data()), static_cast<std::streamsize>(plain.size()));
        remaining_plain -= ct_len;
    }
    if (sealed.peek() != EOF) throw AuthFailure("trailing bytes after final chunk");
    if (!out) throw SealFailure("write failed");
}

std::string seal_bytes(std::string_view plaintext, const KeyVault& vault, const KeyPolicy& policy,
                       std::uint32_t chunk_size) {
    std::istringstream in{std::string(plaintext)};
    std::ostringstream out;
    seal_stream(in, out, vault, policy, chunk_size);
    return out.str();
}

std::string unseal_bytes(std::string_view sealed, const KeyVault& vault, const KeyPolicy& policy) {
    std::istringstream in{std::string(sealed)};
    std::ostringstream out;
    unseal_stream(in, sealed.size(), out, vault, policy);
    return out.str();
}

void seal_file(const std::filesystem::path& plaintext, const std::filesystem::path& out, const KeyVault& vault,
               const KeyPolicy& policy, std::uint32_t chunk_size) {
    std::ifstream in(plaintext, std::ios::binary);
    if (!in) throw SealFailure("cannot open " + plaintext.string());
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    if (!os) throw SealFailure("cannot write " + out.string());
    seal_stream(in, os, vault, policy, chunk_size);
}

void unseal_file(const std::filesystem::path& sealed, const std::filesystem::path& out, const KeyVault& vault,
                 const KeyPolicy& policy) {
    std::ifstream in(sealed, std::ios::binary);
    if (!in) throw AuthFailure("cannot open " + sealed.string());
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    if (!os) throw SealFailure("cannot write " + out.string());
    unseal_stream(in, std::filesystem::file_size(sealed), os, vault, policy);
}

std::string unseal_file_to_string(const std::filesystem::path& sealed, const KeyVault& vault,
                                  const KeyPolicy& policy) {
    std::ifstream in(sealed, std::ios::binary);
    if (!in) throw AuthFailure("cannot open " + sealed.string());
    std::ostringstream out;
    unseal_stream(in, std::filesystem::file_size(sealed), out, vault, policy);
    return out.str();
}

BlobHeader read_blob_header(const std::filesystem::path& sealed) {
    std::ifstream in(sealed, std::ios::binary);
    if (!in) throw AuthFailure("cannot open " + sealed.string());
    return parse_header(in);
}

bool looks_sealed(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    return binio::check_magic(in, kMagic);
}

void verify_sealed(const std::filesystem::path& sealed, const KeyVault& vault, const KeyPolicy& policy) {
    std::ifstream in(sealed, std::ios::binary);
    if (!in) throw AuthFailure("cannot open " + sealed.string());
    std::ostringstream discard;
    unseal_stream(in, std::filesystem::file_size(sealed), discard, vault, policy);
}

}  // namespace hysec::sealvault
