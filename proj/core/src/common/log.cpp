#include "locjepa/common/log.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace locjepa::log {
namespace {

Level from_env() {
  const char* env = std::getenv("LOCJEPA_LOG");
  if (env == nullptr) return Level::info;
  const std::string v(env);
  if (v == "quiet" || v == "0") return Level::quiet;
  if (v == "debug" || v == "2") return Level::debug;
  return Level::info;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(from_env())};
  return lvl;
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }
void set_level(Level lvl) { current().store(static_cast<int>(lvl)); }

}  // namespace locjepa::log
