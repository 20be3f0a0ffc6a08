#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>

struct evp_md_ctx_st;

namespace cityio {

// 32-byte SHA-256 digest. Textual form is 64 lowercase hex characters.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  bool is_zero() const noexcept;

  // Accepts lowercase hex only, so every digest has exactly one spelling.
  static std::optional<Digest> from_hex(std::string_view text);

  friend bool operator==(const Digest&, const Digest&) = default;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

// Incremental hasher for multi-part inputs (commit hashes).
class Sha256 {
 public:
  Sha256();

  Sha256& update(std::span<const std::uint8_t> data);
  Sha256& update(std::string_view data);
  Digest finish();

 private:
  std::unique_ptr<evp_md_ctx_st, void (*)(evp_md_ctx_st*)> ctx_;
};

}  // namespace cityio
