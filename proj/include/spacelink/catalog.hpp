#ifndef SPACELINK_CATALOG_HPP
#define SPACELINK_CATALOG_HPP

// Ground-station catalog: one record per line, `name,lat_deg,lon_deg,alt_km`,
// `#` starts a comment, blank lines ignored.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spacelink/geometry.hpp"

namespace spacelink {

inline constexpr std::string_view kDefaultStationCatalog =
    "# name,lat_deg,lon_deg,alt_km\n"
    "Tenerife,28.2994,-16.5097,2.393\n"
    "Calar Alto,37.2236,-2.5463,2.168\n"
    "Matera,40.6486,16.7046,0.536\n"
    "Sierra Nevada,37.0642,-3.3847,2.896\n";

namespace detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view field, const std::string& context) {
  const std::string t = trim(field);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw DomainError(context + ": not a number: '" + t + "'");
  }
  return v;
}

// Lowercase with spaces, underscores and dashes removed: "Calar Alto" == "calar_alto".
inline std::string name_key(std::string_view s) {
  std::string k;
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return k;
}

}  // namespace detail

inline std::vector<GroundStation> parse_station_catalog(std::istream& in) {
  std::vector<GroundStation> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    const std::string ctx = "station catalog line " + std::to_string(lineno);
    if (fields.size() != 4) throw DomainError(ctx + ": expected 4 fields");
    GroundStation s{detail::trim(fields[0]), detail::parse_double(fields[1], ctx),
                    detail::parse_double(fields[2], ctx), detail::parse_double(fields[3], ctx)};
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<GroundStation> default_station_catalog() {
  std::istringstream in{std::string(kDefaultStationCatalog)};
  return parse_station_catalog(in);
}

inline std::vector<GroundStation> load_station_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open station catalog: " + path);
  return parse_station_catalog(in);
}

inline std::optional<GroundStation> find_station(const std::vector<GroundStation>& catalog, std::string_view name) {
  const auto key = detail::name_key(name);
  auto it = std::find_if(catalog.begin(), catalog.end(),
                         [&](const GroundStation& s) { return detail::name_key(s.name) == key; });
  if (it == catalog.end()) return std::nullopt;
  return *it;
}

}  // namespace spacelink

#endif  // SPACELINK_CATALOG_HPP
