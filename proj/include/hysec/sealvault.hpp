// SGX-style sealing: AES-256-GCM over 1 MiB chunks with the header and chunk
// index bound into each chunk's AAD, keys derived by HKDF-SHA-256 from a
// platform root secret (standing in for the fuse-array key) under
// MRENCLAVE-like / MRSIGNER-like policies, or from a pre-shared user key.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hysec/digest.hpp"

namespace hysec::sealvault {

struct MissingRoot : std::runtime_error {
    explicit MissingRoot(const std::string& what) : std::runtime_error("missing key material: " + what) {}
};
struct AuthFailure : std::runtime_error {
    explicit AuthFailure(const std::string& what) : std::runtime_error("unseal authentication failure: " + what) {}
};
struct PolicyMismatch : std::runtime_error {
    explicit PolicyMismatch(const std::string& what) : std::runtime_error("sealing policy mismatch: " + what) {}
};
struct SealFailure : std::runtime_error {
    explicit SealFailure(const std::string& what) : std::runtime_error("seal failure: " + what) {}
};
struct KeyFileError : std::runtime_error {
    explicit KeyFileError(const std::string& what) : std::runtime_error("key file error: " + what) {}
};

using Key256 = std::array<std::uint8_t, 32>;

enum class PolicyKind : std::uint8_t {
    enclave_identity = 1,  // MRENCLAVE-like: bound to one enclave measurement
    signing_identity = 2,  // MRSIGNER-like: shared across enclaves of one signer, version-aware
    user_key = 3,          // pre-shared user key (final input/output)
};

const char* policy_kind_name(PolicyKind kind);

struct KeyPolicy {
    PolicyKind kind = PolicyKind::user_key;
    Digest32 digest{};          // enclave measure, signer id, or user-key id
    std::uint32_t version = 0;  // derivation input for signing_identity

    static KeyPolicy enclave(const Digest32& measure) { return {PolicyKind::enclave_identity, measure, 0}; }
    static KeyPolicy signer(const Digest32& signer_id, std::uint32_t version) {
        return {PolicyKind::signing_identity, signer_id, version};
    }
    // The key-id digest is filled in by the vault holding the user key.
    static KeyPolicy user() { return {PolicyKind::user_key, {}, 0}; }

    bool operator==(const KeyPolicy&) const = default;
};

// Holds the platform root secret and/or the user's shared key and derives
// per-policy sealing keys.
class KeyVault {
public:
    static KeyVault from_secrets(std::optional<Key256> platform_root, std::optional<Key256> user_key);
    static KeyVault from_files(const std::filesystem::path& root_key_file,
                               const std::filesystem::path& user_key_file);

    Key256 derive_key(const KeyPolicy& policy) const;

    // Fills the user-key id digest on user_key policies.
    KeyPolicy normalize(const KeyPolicy& policy) const;

    bool has_root() const { return root_.has_value(); }
    bool has_user_key() const { return user_key_.has_value(); }

private:
    std::optional<Key256> root_;
    std::optional<Key256> user_key_;
};

Key256 load_key_file(const std::filesystem::path& path);
void write_key_file(const std::filesystem::path& path, const Key256& key);
Key256 random_key();

inline constexpr std::uint32_t kDefaultChunkSize = 1u << 20;

struct BlobHeader {
    PolicyKind kind;
    Digest32 policy_digest;
    std::uint32_t policy_version;
    std::uint32_t chunk_size;
};

void seal_stream(std::istream& plaintext, std::ostream& out, const KeyVault& vault, const KeyPolicy& policy,
                 std::uint32_t chunk_size = kDefaultChunkSize);
// `sealed_size` is the total byte length of the sealed stream (chunk
// boundaries are recovered from it; the format carries no length fields).
void unseal_stream(std::istream& sealed, std::uint64_t sealed_size, std::ostream& out, const KeyVault& vault,
                   const KeyPolicy& policy);

std::string seal_bytes(std::string_view plaintext, const KeyVault& vault, const KeyPolicy& policy,
                       std::uint32_t chunk_size = kDefaultChunkSize);
std::string unseal_bytes(std::string_view sealed, const KeyVault& vault, const KeyPolicy& policy);

void seal_file(const std::filesystem::path& plaintext, const std::filesystem::path& out, const KeyVault& vault,
               const KeyPolicy& policy, std::uint32_t chunk_size = kDefaultChunkSize);
void unseal_file(const std::filesystem::path& sealed, const std::filesystem::path& out, const KeyVault& vault,
                 const KeyPolicy& policy);
std::string unseal_file_to_string(const std::filesystem::path& sealed, const KeyVault& vault,
                                  const KeyPolicy& policy);

BlobHeader read_blob_header(const std::filesystem::path& sealed);
bool looks_sealed(const std::filesystem::path& path);

// Unseals and discards, throwing on any authentication or policy failure.
void verify_sealed(const std::filesystem::path& sealed, const KeyVault& vault, const KeyPolicy& policy);

}  // namespace hysec::sealvault
