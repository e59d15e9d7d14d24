#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bricklab/datagen.hpp"

namespace bricklab {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> Manifest::paths(const std::string& split) const {
  std::vector<std::string> out;
  for (const ManifestEntry& e : entries) {
    if (!split.empty() && e.split != split) continue;
    out.push_back(directory.empty() ? e.path : (fs::path(directory) / e.path).string());
  }
  return out;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t item_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + index + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string split_for(int index, int count) {
  if (index < (count * 8 + 9) / 10) return "train";
  if (index < (count * 9 + 9) / 10) return "val";
  return "test";
}

Assembly generate_item(const Catalog& catalog, const DatasetSpec& spec, int index) {
  const std::uint64_t seed = item_seed(spec.seed, static_cast<std::uint64_t>(index));
  if (spec.kind == "rc") {
    RandomConstructionConfig c;
    c.bricks = spec.n;
    c.seed = seed;
    return generate_random_construction(catalog, c);
  }
  if (spec.kind == "vehicles") {
    VehicleGrammarConfig c = VehicleGrammarConfig::defaults();
    c.seed = seed;
    return generate_vehicle(catalog, c);
  }
  throw Error("unknown dataset kind '" + spec.kind + "'");
}

Manifest generate_dataset(const Catalog& catalog, const DatasetSpec& spec, const std::string& out_dir) {
  if (spec.count < 0) throw Error("dataset count must be non-negative");
  fs::create_directories(out_dir);
  Manifest m;
  m.kind = spec.kind;
  json cfg{{"kind", spec.kind}, {"count", spec.count}, {"seed", spec.seed}};
  if (spec.kind == "rc") cfg["n"] = spec.n;
  m.config = cfg.dump();
  m.config_hash = fnv1a_hex(m.config);
  m.directory = out_dir;
  for (int i = 0; i < spec.count; ++i) {
    const Assembly a = generate_item(catalog, spec, i);
    char name[32];
    std::snprintf(name, sizeof name, "%05d.json", i);
    save_assembly(catalog, a, (fs::path(out_dir) / name).string());
    m.entries.push_back({name, split_for(i, spec.count), static_cast<int>(a.size())});
  }
  save_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
  json j{{"version", 1}, {"kind", m.kind}, {"config", json::parse(m.config)}, {"config_hash", m.config_hash}};
  j["entries"] = json::array();
  for (const ManifestEntry& e : m.entries) j["entries"].push_back({{"path", e.path}, {"split", e.split}, {"bricks", e.bricks}});
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path);
  out << j.dump(1) << '\n';
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path);
  Manifest m;
  try {
    const json j = json::parse(in);
    if (j.at("version").get<int>() != 1) throw Error("unsupported manifest version");
    m.kind = j.at("kind").get<std::string>();
    m.config = j.at("config").dump();
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& e : j.at("entries")) {
      m.entries.push_back({e.at("path").get<std::string>(), e.at("split").get<std::string>(), e.value("bricks", 0)});
    }
  } catch (const json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  if (fnv1a_hex(m.config) != m.config_hash) throw Error("manifest config hash mismatch in " + path);
  m.directory = fs::path(path).parent_path().string();
  return m;
}

DatasetReport validate_dataset(const Catalog& catalog, const std::vector<std::string>& paths, const Camera& camera) {
  DatasetReport r;
  long total = 0;
  int loaded = 0;
  for (const std::string& p : paths) {
    ++r.files;
    Assembly a;
    try {
      a = load_assembly(catalog, p);
    } catch (const Error& e) {
      r.violations.push_back(p + ": " + e.what());
      continue;
    }
    for (const std::string& v : validate_assembly(catalog, a, camera)) r.violations.push_back(p + ": " + v);
    ++r.size_histogram[static_cast<int>(a.size())];
    total += static_cast<long>(a.size());
    ++loaded;
  }
  r.mean_bricks = loaded ? static_cast<double>(total) / loaded : 0.0;
  return r;
}

}  // namespace bricklab
