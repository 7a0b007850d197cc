#pragma once

#include <functional>
#include <string>

namespace powertrain {

// Warnings go to stderr unless a sink is installed (tests silence them).
using WarningSink = std::function<void(const std::string&)>;

void set_warning_sink(WarningSink sink);
void warn(const std::string& message);

}  // namespace powertrain
