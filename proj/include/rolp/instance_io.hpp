#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include <nlohmann/json.hpp>

#include "rolp/errors.hpp"
#include "rolp/instance.hpp"

// JSON instance formats:
//   {"name": str, "capacities": [num...],
//    "requests": [{"options": [{"profit": num, "consumption": {"<resource>": num}}]}]}
//   {"name": str, "bin_capacities": [num...],
//    "items": [{"<bin>": {"profit": num, "size": num}}]}

namespace rolp {

namespace detail {

using json = nlohmann::json;

inline const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + ": missing field '" + key + "'");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path + ": expected a number");
  return v.get<double>();
}

inline std::size_t index_key(const std::string& key, const std::string& path) {
  std::size_t value = 0;
  const auto* first = key.data();
  const auto* last = key.data() + key.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (key.empty() || ec != std::errc{} || ptr != last)
    throw ParseError(path + ": key '" + key + "' is not a non-negative integer index");
  return value;
}

inline std::vector<double> number_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError(path + ": expected an array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace detail

inline nlohmann::json to_json(const PackingInstance& inst) {
  nlohmann::json requests = nlohmann::json::array();
  for (const auto& req : inst.requests) {
    nlohmann::json options = nlohmann::json::array();
    for (const auto& opt : req.options) {
      nlohmann::json consumption = nlohmann::json::object();
      for (const auto& e : opt.consumption) consumption[std::to_string(e.resource)] = e.amount;
      options.push_back({{"profit", opt.profit}, {"consumption", consumption}});
    }
    requests.push_back({{"options", options}});
  }
  return {{"name", inst.name}, {"capacities", inst.capacities}, {"requests", requests}};
}

inline nlohmann::json to_json(const GapInstance& gap) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : gap.items) {
    nlohmann::json bins = nlohmann::json::object();
    for (const auto& e : item.bins) bins[std::to_string(e.bin)] = {{"profit", e.profit}, {"size", e.size}};
    items.push_back(bins);
  }
  return {{"name", gap.name}, {"bin_capacities", gap.bin_capacities}, {"items", items}};
}

inline PackingInstance packing_from_json(const nlohmann::json& doc, const std::string& source = "instance") {
  using detail::field;
  PackingInstance inst;
  const auto& name = field(doc, "name", source);
  if (!name.is_string()) throw ParseError(source + ".name: expected a string");
  inst.name = name.get<std::string>();
  inst.capacities = detail::number_array(field(doc, "capacities", source), source + ".capacities");
  const auto& requests = field(doc, "requests", source);
  if (!requests.is_array()) throw ParseError(source + ".requests: expected an array");
  for (std::size_t j = 0; j < requests.size(); ++j) {
    const std::string rpath = source + ".requests[" + std::to_string(j) + "]";
    const auto& options = field(requests[j], "options", rpath);
    if (!options.is_array()) throw ParseError(rpath + ".options: expected an array");
    Request req;
    for (std::size_t k = 0; k < options.size(); ++k) {
      const std::string opath = rpath + ".options[" + std::to_string(k) + "]";
      Option opt;
      opt.profit = detail::number(field(options[k], "profit", opath), opath + ".profit");
      const auto& consumption = field(options[k], "consumption", opath);
      if (!consumption.is_object()) throw ParseError(opath + ".consumption: expected an object");
      for (const auto& [key, value] : consumption.items()) {
        const std::string cpath = opath + ".consumption." + key;
        opt.consumption.push_back({detail::index_key(key, cpath), detail::number(value, cpath)});
      }
      std::sort(opt.consumption.begin(), opt.consumption.end(),
                [](const Entry& a, const Entry& b) { return a.resource < b.resource; });
      req.options.push_back(std::move(opt));
    }
    inst.requests.push_back(std::move(req));
  }
  return inst;
}

inline GapInstance gap_from_json(const nlohmann::json& doc, const std::string& source = "instance") {
  using detail::field;
  GapInstance gap;
  const auto& name = field(doc, "name", source);
  if (!name.is_string()) throw ParseError(source + ".name: expected a string");
  gap.name = name.get<std::string>();
  gap.bin_capacities = detail::number_array(field(doc, "bin_capacities", source), source + ".bin_capacities");
  const auto& items = field(doc, "items", source);
  if (!items.is_array()) throw ParseError(source + ".items: expected an array");
  for (std::size_t j = 0; j < items.size(); ++j) {
    const std::string ipath = source + ".items[" + std::to_string(j) + "]";
    if (!items[j].is_object()) throw ParseError(ipath + ": expected an object");
    GapItem item;
    for (const auto& [key, value] : items[j].items()) {
      const std::string bpath = ipath + "." + key;
      GapEntry e;
      e.bin = detail::index_key(key, bpath);
      e.profit = detail::number(field(value, "profit", bpath), bpath + ".profit");
      e.size = detail::number(field(value, "size", bpath), bpath + ".size");
      item.bins.push_back(e);
    }
    std::sort(item.bins.begin(), item.bins.end(), [](const GapEntry& a, const GapEntry& b) { return a.bin < b.bin; });
    gap.items.push_back(std::move(item));
  }
  return gap;
}

/// True if the document uses the GAP schema.
inline bool is_gap_document(const nlohmann::json& doc) { return doc.is_object() && doc.contains("bin_capacities"); }

inline nlohmann::json load_json_document(const std::string& path) {
  return detail::parse_text(detail::read_file(path), path);
}

inline PackingInstance load_json(const std::string& path) { return packing_from_json(load_json_document(path), path); }

inline GapInstance load_gap_json(const std::string& path) { return gap_from_json(load_json_document(path), path); }

inline void save_json(const PackingInstance& inst, const std::string& path) {
  detail::write_file(path, to_json(inst).dump(2) + "\n");
}

inline void save_json(const GapInstance& gap, const std::string& path) {
  detail::write_file(path, to_json(gap).dump(2) + "\n");
}

}  // namespace rolp
