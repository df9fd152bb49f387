// Command-line front end: train, eval, bench, gen.

#ifndef LFM_TOOLS_CLI_HPP
#define LFM_TOOLS_CLI_HPP

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace lfm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Layered key=value settings. Lookup order: command-line flag, the
// LFM_THREADS environment variable (for "threads" only), config file.
class Settings {
 public:
  void load_file(const std::string& path);
  void set_config(const std::string& key, const std::string& value);
  void set_flag(const std::string& key, const std::string& value);
  // Rejects config-file keys outside `known`.
  void check_keys(const std::set<std::string>& known) const;

  std::optional<std::string> raw(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  long long integer(const std::string& key, long long fallback, long long min) const;
  double real(const std::string& key, double fallback) const;
  bool boolean(const std::string& key, bool fallback) const;

 private:
  std::map<std::string, std::string> flags_;
  std::map<std::string, std::string> config_;
};

int run(int argc, char** argv);

}  // namespace lfm::cli

#endif  // LFM_TOOLS_CLI_HPP
