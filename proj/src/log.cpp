#include "xanchor/log.hpp"

#include <iostream>
#include <mutex>

namespace xanchor {
namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler() {
  static WarningHandler h;
  return h;
}

}  // namespace

void warn(const std::string& message) {
  std::lock_guard lock(handler_mutex());
  if (handler()) {
    handler()(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

WarningHandler set_warning_handler(WarningHandler h) {
  std::lock_guard lock(handler_mutex());
  auto previous = std::move(handler());
  handler() = std::move(h);
  return previous;
}

WarningCapture::WarningCapture() {
  previous_ = set_warning_handler(
      [this](const std::string& m) { messages_.push_back(m); });
}

WarningCapture::~WarningCapture() { set_warning_handler(std::move(previous_)); }

bool WarningCapture::contains(const std::string& needle) const {
  for (const auto& m : messages_) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace xanchor
