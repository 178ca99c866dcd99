#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace tsdm {

using WarningHandler = std::function<void(std::string_view)>;

/// Routes a non-fatal warning to the installed handler (stderr by default).
void warn(std::string_view message);

/// Installs a new handler and returns the previous one. Passing an empty
/// function restores the stderr default.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace tsdm
