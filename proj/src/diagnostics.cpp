#include "tsdm/diagnostics.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace tsdm {
namespace {

std::mutex handler_mutex;

void default_handler(std::string_view message) { std::cerr << "warning: " << message << '\n'; }

WarningHandler& current_handler() {
  static WarningHandler handler = default_handler;
  return handler;
}

}  // namespace

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex);
  current_handler()(message);
}

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex);
  if (!handler) handler = default_handler;
  return std::exchange(current_handler(), std::move(handler));
}

}  // namespace tsdm
