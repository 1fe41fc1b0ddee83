#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <string_view>

namespace rfgap {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

// Warnings are routed through a process-wide sink so that tests and the CLI
// can capture them. The default sink writes to stderr.
using WarningSink = std::function<void(std::string_view)>;

void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

// Installs a sink for the lifetime of the object and restores the previous
// one afterwards.
class ScopedWarningSink {
 public:
  explicit ScopedWarningSink(WarningSink sink);
  ~ScopedWarningSink();
  ScopedWarningSink(const ScopedWarningSink&) = delete;
  ScopedWarningSink& operator=(const ScopedWarningSink&) = delete;

 private:
  WarningSink previous_;
};

}  // namespace rfgap
