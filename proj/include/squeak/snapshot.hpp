#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "squeak/dataset.hpp"
#include "squeak/dictionary.hpp"
#include "squeak/error.hpp"

namespace squeak {

/// JSON array of {index, multiplicity, probability}. Points are not written;
/// they are reloaded from the dataset by index.
inline nlohmann::json dictionary_to_json(const Dictionary& dict) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : dict.entries()) {
    out.push_back({{"index", e.index}, {"multiplicity", e.multiplicity}, {"probability", e.probability}});
  }
  return out;
}

inline Dictionary dictionary_from_json(const nlohmann::json& snapshot, std::uint64_t qbar, Index step,
                                       const Dataset& data) {
  if (!snapshot.is_array()) throw input_error("dictionary snapshot must be a JSON array");
  std::vector<DictEntry> entries;
  entries.reserve(snapshot.size());
  try {
    for (const auto& item : snapshot) {
      DictEntry e;
      e.index = item.at("index").get<Index>();
      e.multiplicity = item.at("multiplicity").get<std::uint64_t>();
      e.probability = item.at("probability").get<double>();
      if (e.index < 1 || e.index > data.size()) {
        throw input_error("snapshot index " + std::to_string(e.index) + " not in dataset");
      }
      e.point = data.at(e.index);
      entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw input_error(std::string("malformed dictionary snapshot: ") + ex.what());
  }
  return Dictionary(qbar, step, std::move(entries));
}

}  // namespace squeak
