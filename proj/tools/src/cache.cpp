#include "renyiqkd/cli/cache.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace renyiqkd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json key_json(const BoundKey& k) {
  return {{"p", k.p},
          {"q", k.q},
          {"alpha", k.alpha},
          {"tol", k.tol},
          {"max_iter", k.max_iter},
          {"random_restarts", k.random_restarts},
          {"seed", k.seed}};
}

BoundKey key_from_json(const json& j) {
  BoundKey k;
  k.p = j.at("p").get<double>();
  k.q = j.at("q").get<double>();
  k.alpha = j.at("alpha").get<double>();
  k.tol = j.at("tol").get<double>();
  k.max_iter = j.at("max_iter").get<int>();
  k.random_restarts = j.at("random_restarts").get<int>();
  k.seed = j.at("seed").get<std::uint64_t>();
  return k;
}

}  // namespace

DiskCache::DiskCache(fs::path dir, WarningSink warn) : dir_(std::move(dir)), warn_(std::move(warn)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_)) {
    throw std::runtime_error("cannot create cache directory " + dir_.string());
  }
}

fs::path DiskCache::entry_path(const BoundKey& k) const {
  std::ostringstream name;
  name << "p=" << exact(k.p) << "_q=" << exact(k.q) << "_a=" << exact(k.alpha)
       << "_tol=" << exact(k.tol) << "_it=" << k.max_iter << "_rs=" << k.random_restarts
       << "_seed=" << k.seed << ".json";
  return dir_ / name.str();
}

std::optional<DivergenceBound> DiskCache::lookup(const BoundKey& key) {
  const fs::path path = entry_path(key);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    if (!(key_from_json(j.at("key")) == key)) throw std::runtime_error("key mismatch");
    const json& b = j.at("bound");
    DivergenceBound out;
    out.upper = b.at("upper").get<double>();
    out.lower = b.at("lower").get<double>();
    out.gap = b.at("gap").get<double>();
    out.iterations = b.at("iterations").get<int>();
    out.converged = b.at("converged").get<bool>();
    out.wall_time = b.at("wall_time").get<double>();
    if (!(out.gap >= 0.0) || out.lower > out.upper) throw std::runtime_error("inconsistent bound");
    return out;
  } catch (const std::exception& e) {
    if (warn_) warn_("ignoring corrupt cache entry " + path.string() + ": " + e.what());
    return std::nullopt;
  }
}

void DiskCache::store(const BoundKey& key, const DivergenceBound& bound) {
  static std::atomic<unsigned long> counter{0};
  const json j = {{"key", key_json(key)},
                  {"bound",
                   {{"upper", bound.upper},
                    {"lower", bound.lower},
                    {"gap", bound.gap},
                    {"iterations", bound.iterations},
                    {"converged", bound.converged},
                    {"wall_time", bound.wall_time}}}};
  const fs::path target = entry_path(key);
  std::ostringstream suffix;
  suffix << ".tmp." << ::getpid() << '.' << std::hash<std::thread::id>{}(std::this_thread::get_id())
         << '.' << counter.fetch_add(1);
  const fs::path temp = target.string() + suffix.str();
  {
    std::ofstream out(temp);
    out << j.dump(2) << '\n';
    if (!out) {
      if (warn_) warn_("cannot write cache entry " + temp.string());
      return;
    }
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    if (warn_) warn_("cannot publish cache entry " + target.string());
  }
}

}  // namespace renyiqkd::cli
