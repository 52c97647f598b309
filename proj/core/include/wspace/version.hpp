#pragma once

#include <string>

namespace wspace {

std::string version();

}  // namespace wspace
