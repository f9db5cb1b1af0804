#pragma once

#include <string_view>

#include "greenspoof/classifiers.hpp"

namespace greenspoof::detail {

double parse_real(std::string_view key, std::string_view text);
long parse_int(std::string_view key, std::string_view text);
std::string_view get(const Hyperparameters& hp, std::string_view key, std::string_view fallback);

}  // namespace greenspoof::detail
