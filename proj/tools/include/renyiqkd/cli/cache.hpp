#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "renyiqkd/keyrate.hpp"

namespace renyiqkd::cli {

/// One JSON file per parameter tuple under a directory. Stores go through a
/// temporary file and a rename, so readers never observe partial entries.
class DiskCache : public BoundStore {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  explicit DiskCache(std::filesystem::path dir, WarningSink warn = {});

  std::optional<DivergenceBound> lookup(const BoundKey& key) override;
  void store(const BoundKey& key, const DivergenceBound& bound) override;

  std::filesystem::path entry_path(const BoundKey& key) const;
  const std::filesystem::path& directory() const { return dir_; }

 private:
  std::filesystem::path dir_;
  WarningSink warn_;
};

}  // namespace renyiqkd::cli
