#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cityio {

enum class Errc {
  invalid_spec,
  index_out_of_range,
  unknown_type_id,
  invalid_rotation,
  illegal_floors_override,
  length_mismatch,
  malformed_encoding,
  spec_mismatch,
  out_of_extent,
  unknown_table,
  table_exists,
  unknown_version,
  empty_history,
  invalid_grid,
  invalid_edit,
  storage_failure,
  chain_broken,
  conflict,
  stale_layer,
  unauthorized,
  empty_text,
  text_too_long,
  invalid_author,
  invalid_anchor,
  unknown_comment,
  invalid_sun,
  invalid_speeds,
  invalid_layer,
  unknown_layer,
  bad_request,
  range_too_large,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Raised by verify/replay paths; `record` is the 1-based record index.
class ChainBrokenError : public Error {
 public:
  ChainBrokenError(std::size_t record, const std::string& reason)
      : Error(Errc::chain_broken, "chain broken at record " + std::to_string(record) + ": " + reason),
        record_(record),
        reason_(reason) {}

  std::size_t record() const noexcept { return record_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t record_;
  std::string reason_;
};

}  // namespace cityio
