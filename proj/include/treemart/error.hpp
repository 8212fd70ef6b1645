#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace treemart {

enum class Errc {
  invalid_combination,
  saturation_violation,
  domain_error,
  cap_exceeded,
  resource_limit,
  invalid_config,
  degenerate_normalizer,
  empty_sample,
  unsupported_model,
  usage,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_combination: return "invalid-combination";
    case Errc::saturation_violation: return "saturation-violation";
    case Errc::domain_error: return "domain-error";
    case Errc::cap_exceeded: return "cap-exceeded";
    case Errc::resource_limit: return "resource-limit";
    case Errc::invalid_config: return "invalid-config";
    case Errc::degenerate_normalizer: return "degenerate-normalizer";
    case Errc::empty_sample: return "empty-sample";
    case Errc::unsupported_model: return "unsupported-model";
    case Errc::usage: return "usage";
  }
  return "unknown";
}

/// All library failures are reported through this exception; `code()` is the
/// machine-readable kind that the CLI forwards on stderr.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace treemart
