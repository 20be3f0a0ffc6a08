#include "cityio/error.hpp"

namespace cityio {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_spec: return "invalid_spec";
    case Errc::index_out_of_range: return "index_out_of_range";
    case Errc::unknown_type_id: return "unknown_type_id";
    case Errc::invalid_rotation: return "invalid_rotation";
    case Errc::illegal_floors_override: return "illegal_floors_override";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::malformed_encoding: return "malformed_encoding";
    case Errc::spec_mismatch: return "spec_mismatch";
    case Errc::out_of_extent: return "out_of_extent";
    case Errc::unknown_table: return "unknown_table";
    case Errc::table_exists: return "table_exists";
    case Errc::unknown_version: return "unknown_version";
    case Errc::empty_history: return "empty_history";
    case Errc::invalid_grid: return "invalid_grid";
    case Errc::invalid_edit: return "invalid_edit";
    case Errc::storage_failure: return "storage_failure";
    case Errc::chain_broken: return "chain_broken";
    case Errc::conflict: return "conflict";
    case Errc::stale_layer: return "stale_layer";
    case Errc::unauthorized: return "unauthorized";
    case Errc::empty_text: return "empty_text";
    case Errc::text_too_long: return "text_too_long";
    case Errc::invalid_author: return "invalid_author";
    case Errc::invalid_anchor: return "invalid_anchor";
    case Errc::unknown_comment: return "unknown_comment";
    case Errc::invalid_sun: return "invalid_sun";
    case Errc::invalid_speeds: return "invalid_speeds";
    case Errc::invalid_layer: return "invalid_layer";
    case Errc::unknown_layer: return "unknown_layer";
    case Errc::bad_request: return "bad_request";
    case Errc::range_too_large: return "range_too_large";
  }
  return "unknown";
}

}  // namespace cityio
