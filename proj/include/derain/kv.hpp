#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "derain/error.hpp"

namespace derain {

/// Plain-text `key = value` settings. Blank lines and `#` comments are
/// ignored; later keys override earlier ones. Keys keep insertion order on
/// output so written files diff cleanly.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, const std::string& origin = "<stream>") {
    KeyValueFile kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw UsageError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = trim(line.substr(0, eq));
      if (key.empty()) throw UsageError(origin + ":" + std::to_string(lineno) + ": empty key");
      kv.set(key, trim(line.substr(eq + 1)));
    }
    return kv;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  void set(const std::string& key, const std::string& value) {
    if (values_.find(key) == values_.end()) order_.push_back(key);
    values_[key] = value;
  }
  template <typename T>
  void set(const std::string& key, const T& value) {
    std::ostringstream os;
    os.precision(17);
    os << value;
    set(key, os.str());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("missing key '" + key + "'");
    return it->second;
  }
  double get_double(const std::string& key) const { return to_double(get(key), key); }
  long get_int(const std::string& key) const {
    const std::string& s = get(key);
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError("key '" + key + "': not an integer: " + s);
    return v;
  }
  bool get_bool(const std::string& key) const {
    const std::string& s = get(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw UsageError("key '" + key + "': not a boolean: " + s);
  }
  std::vector<double> get_list(const std::string& key) const {
    return parse_list(get(key), key);
  }

  const std::vector<std::string>& keys() const { return order_; }

  void write(std::ostream& out) const {
    for (const auto& k : order_) out << k << " = " << values_.at(k) << "\n";
  }
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    write(out);
  }

  static double to_double(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw UsageError(what + ": not a number: '" + s + "'");
    return v;
  }

  /// Comma separated numbers.
  static std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), what));
    return out;
  }

  static std::string trim(const std::string& s) {
    auto b = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
    auto e = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); }).base();
    return b < e ? std::string(b, e) : std::string();
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

}  // namespace derain
