#pragma once

#include <string>

#include "scriptid/classify.hpp"

namespace scriptid::cls {

/// Binary one-vs-all model container ("MDSV"): header, shared
/// standardizer and support matrix, then one record per script slot.
/// All numeric payloads are little-endian f64, so a load reproduces the
/// saved model bit for bit.
void save_model(const std::string& path, const MultiModel& m);
MultiModel load_model(const std::string& path);

}  // namespace scriptid::cls
