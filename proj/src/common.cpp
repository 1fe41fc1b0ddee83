#include "rfgap/common.hpp"

#include <charconv>
#include <iostream>
#include <mutex>
#include <utility>

namespace rfgap {
namespace {

std::mutex sink_mutex;

WarningSink& current_sink() {
  static WarningSink sink;
  return sink;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(sink_mutex);
  current_sink() = std::move(sink);
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex);
  if (current_sink()) {
    current_sink()(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

ScopedWarningSink::ScopedWarningSink(WarningSink sink) {
  std::lock_guard lock(sink_mutex);
  previous_ = std::exchange(current_sink(), std::move(sink));
}

ScopedWarningSink::~ScopedWarningSink() {
  std::lock_guard lock(sink_mutex);
  current_sink() = std::move(previous_);
}

}  // namespace rfgap
