#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace minicits {

enum class Errc {
  invalid_pose,
  missing_position,
  range,
  length,
  unsupported_message,
  unsupported_version,
  unsupported_type,
  inconsistent_length,
  size,
  invalid_window,
  registration,
  ordering,
  step,
  geometry,
  validation,
  schema,
  io,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_pose: return "invalid_pose";
    case Errc::missing_position: return "missing_position";
    case Errc::range: return "range";
    case Errc::length: return "length";
    case Errc::unsupported_message: return "unsupported_message";
    case Errc::unsupported_version: return "unsupported_version";
    case Errc::unsupported_type: return "unsupported_type";
    case Errc::inconsistent_length: return "inconsistent_length";
    case Errc::size: return "size";
    case Errc::invalid_window: return "invalid_window";
    case Errc::registration: return "registration";
    case Errc::ordering: return "ordering";
    case Errc::step: return "step";
    case Errc::geometry: return "geometry";
    case Errc::validation: return "validation";
    case Errc::schema: return "schema";
    case Errc::io: return "io";
  }
  return "unknown";
}

// Every failure raised by the library carries a machine-readable code and,
// where it makes sense, the offending field (or "line N" for file loaders).
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string field, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + (field.empty() ? "" : " [" + field + "]") +
                           ": " + message),
        code_(code),
        field_(std::move(field)) {}

  Errc code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  Errc code_;
  std::string field_;
};

}  // namespace minicits
