#pragma once

#include <functional>
#include <string>
#include <vector>

namespace xanchor {

using WarningHandler = std::function<void(const std::string&)>;

/// Emits a warning through the installed handler (stderr by default).
void warn(const std::string& message);

/// Installs a handler and returns the previous one. Passing an empty
/// function restores the stderr default.
WarningHandler set_warning_handler(WarningHandler handler);

/// Captures warnings for the lifetime of the object (tests, CLI summaries).
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(const std::string& needle) const;

 private:
  std::vector<std::string> messages_;
  WarningHandler previous_;
};

}  // namespace xanchor
