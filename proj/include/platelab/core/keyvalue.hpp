#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace platelab {

// Flat `key = value` document with dotted keys. A `[section]` line prefixes
// the keys that follow it with `section.`. `#` starts a comment.
class KeyValueDocument {
 public:
  KeyValueDocument() = default;

  static KeyValueDocument parse(const std::string& text, const std::string& source = "<string>");
  static KeyValueDocument load(const std::filesystem::path& path);

  std::string serialize() const;

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void erase(const std::string& key);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  std::vector<std::string> keys() const;
  std::vector<std::string> keys_with_prefix(const std::string& prefix) const;
  const std::string& source() const { return source_; }
  bool operator==(const KeyValueDocument& other) const { return entries_ == other.entries_; }

 private:
  std::map<std::string, std::string> entries_;
  std::string source_ = "<string>";
};

std::string format_double(double value);

}  // namespace platelab
