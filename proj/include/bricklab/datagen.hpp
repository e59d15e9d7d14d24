#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bricklab/core.hpp"
#include "bricklab/render.hpp"

namespace bricklab {

struct RandomConstructionConfig {
  int bricks = 2;
  std::vector<std::string> shapes = {"brick1x1", "brick1x2", "brick2x2", "brick2x4", "plate1x2",
                                     "plate2x2", "plate2x4", "slope2x2", "headlight1x1", "round1x1"};
  std::vector<int> colors;  // empty = whole palette
  std::uint64_t seed = 0;
  int max_attempts = 1000;  // per brick
  Camera camera;            // every brick must show a snap under this camera
};

/// n bricks grown from a brick at the origin by random compatible snap pairs.
Assembly generate_random_construction(const Catalog& catalog, const RandomConstructionConfig& config);

/// A categorical choice of the vehicle grammar.
struct Choice {
  std::string name;
  std::vector<std::string> options;
  std::vector<double> weights;  // normalised on use
  bool affects_color = false;
};

struct VehicleGrammarConfig {
  std::vector<Choice> choices;
  std::uint64_t seed = 0;
  int min_bricks = 19;
  int max_bricks = 73;

  static VehicleGrammarConfig defaults();
  const Choice& choice(const std::string& name) const;
};

Assembly generate_vehicle(const Catalog& catalog, const VehicleGrammarConfig& config);

struct EntropyBits {
  double shape = 0;
  double color = 0;
};
double shannon_bits(const std::vector<double>& weights);
EntropyBits grammar_entropy(const VehicleGrammarConfig& config);

struct DatasetReport {
  int files = 0;
  std::vector<std::string> violations;  // "path: reason"
  std::map<int, int> size_histogram;    // brick count -> files
  double mean_bricks = 0;
};

/// Occupancy, connectivity and per-brick snap visibility for each file.
DatasetReport validate_dataset(const Catalog& catalog, const std::vector<std::string>& paths, const Camera& camera = {});
/// Violations of a single assembly, empty when valid.
std::vector<std::string> validate_assembly(const Catalog& catalog, const Assembly& assembly, const Camera& camera = {});

struct ManifestEntry {
  std::string path;   // relative to the manifest's directory
  std::string split;  // train, val or test
  int bricks = 0;
};

struct Manifest {
  std::string kind;         // rc or vehicles
  std::string config;       // generator config as compact JSON
  std::string config_hash;  // 64-bit FNV-1a of `config`, hex
  std::vector<ManifestEntry> entries;
  std::string directory;    // set on load; entry paths resolve against it

  std::vector<std::string> paths(const std::string& split = "") const;
};

struct DatasetSpec {
  std::string kind = "rc";
  int n = 2;       // bricks per RC assembly, ignored for vehicles
  int count = 100;
  std::uint64_t seed = 0;
};

std::string fnv1a_hex(std::string_view text);
/// Seed of item `index` in a dataset built from `seed`.
std::uint64_t item_seed(std::uint64_t seed, std::uint64_t index);
/// Split tag by position: first 80% train, next 10% val, rest test.
std::string split_for(int index, int count);

Assembly generate_item(const Catalog& catalog, const DatasetSpec& spec, int index);
/// Writes `count` assemblies plus manifest.json into `out_dir`.
Manifest generate_dataset(const Catalog& catalog, const DatasetSpec& spec, const std::string& out_dir);

void save_manifest(const Manifest& manifest, const std::string& path);
Manifest load_manifest(const std::string& path);

}  // namespace bricklab
