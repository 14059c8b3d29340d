#pragma once

#include <string>

#include "losstopo/models.hpp"

namespace losstopo {

// Text format: one JSON header line {"layout":[{"name","rows","cols"}...],
// "size":N,"meta":{...}} followed by N decimal values, one per line.
void save_params(const std::string& path, const ParameterVector& params,
                 const std::string& meta_json = {});
ParameterVector load_params(const std::string& path, std::string* meta_json = nullptr);

}  // namespace losstopo
