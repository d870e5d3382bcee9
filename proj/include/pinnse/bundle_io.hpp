#pragma once

#include <string>

#include "pinnse/model.hpp"

namespace pinnse::nn {

std::string bundle_spec_to_json(const BundleSpec& spec);
BundleSpec bundle_spec_from_json(const std::string& text);

}  // namespace pinnse::nn
