#include "burgan/oracle/dataset.hpp"

#include "burgan/common/binary_io.hpp"
#include "burgan/common/errors.hpp"
#include "burgan/common/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>

namespace burgan {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr char kFieldMagic[] = "BRGF";
constexpr std::size_t kTrainCount = 85;
constexpr std::size_t kValCount = 15;

}  // namespace

std::string field_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "field_%03zu.brg", index);
  return buf;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

void write_field(const fs::path& path, const SolutionField& field) {
  BinaryWriter w;
  w.magic(kFieldMagic);
  w.u32(kFieldFormatVersion);
  w.u32(static_cast<std::uint32_t>(field.grid.nx));
  w.u32(static_cast<std::uint32_t>(field.grid.nt));
  w.f64(field.ic.a);
  w.f64(field.ic.b);
  w.f64(field.ic.c);
  w.f64(field.ic.d);
  w.f64(field.nu);
  w.f64s(std::span<const double>(field.u.data(), static_cast<std::size_t>(field.u.size())));
  w.commit(path);
}

SolutionField read_field(const fs::path& path) {
  BinaryReader r(path);
  r.expect_magic(kFieldMagic);
  const std::uint32_t version = r.u32();
  if (version != kFieldFormatVersion) {
    throw IoError(path.string() + ": unsupported field version " + std::to_string(version));
  }
  SolutionField field;
  field.grid.nx = r.u32();
  field.grid.nt = r.u32();
  field.ic.a = r.f64();
  field.ic.b = r.f64();
  field.ic.c = r.f64();
  field.ic.d = r.f64();
  field.nu = r.f64();
  field.grid.validate();
  field.u.resize(static_cast<Eigen::Index>(field.grid.nt), static_cast<Eigen::Index>(field.grid.nx));
  r.f64s(std::span<double>(field.u.data(), static_cast<std::size_t>(field.u.size())));
  if (!r.at_end()) throw IoError(path.string() + ": trailing bytes after payload");
  return field;
}

SplitIds split_dataset(std::uint64_t seed) {
  SplitIds ids;
  ids.test = test_indices();
  const std::set<std::size_t> test(ids.test.begin(), ids.test.end());
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < kDatasetSize; ++i)
    if (!test.contains(i)) rest.push_back(i);

  std::mt19937_64 rng(seed);
  std::shuffle(rest.begin(), rest.end(), rng);
  ids.train.assign(rest.begin(), rest.begin() + kTrainCount);
  ids.val.assign(rest.begin() + kTrainCount, rest.end());
  std::sort(ids.train.begin(), ids.train.end());
  std::sort(ids.val.begin(), ids.val.end());
  static_assert(kTrainCount + kValCount + kTestSize == kDatasetSize);
  return ids;
}

void Dataset::validate() const {
  if (fields.empty()) throw ConfigError("dataset has no fields");
  std::set<std::size_t> seen;
  for (const auto* split : {&splits.train, &splits.val, &splits.test}) {
    for (std::size_t id : *split) {
      if (id >= fields.size()) throw ConfigError("split id " + std::to_string(id) + " out of range");
      if (!seen.insert(id).second) throw ConfigError("field " + std::to_string(id) + " is in two splits");
    }
  }
  for (const SolutionField& f : fields) {
    if (!(f.grid == fields.front().grid)) throw ConfigError("dataset fields use different grids");
  }
}

Dataset generate_dataset(std::uint64_t seed, const fs::path& out_dir, const DatasetOptions& options) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Dataset ds;
  ds.seed = seed;
  ds.options = options;
  ds.splits = split_dataset(seed);
  const std::vector<ICParams> ics = dataset_ics();
  Grid grid;
  grid.nt = options.nt;
  grid.validate();

  ds.fields.resize(ics.size());
  parallel_for(ics.size(), options.threads, [&](std::size_t i) {
    ds.fields[i] = integrate(ics[i], grid, options.nu, options.dt_max);
    write_field(out_dir / field_file_name(i), ds.fields[i]);
  });
  write_file(out_dir / "manifest.json", manifest_json(ds));
  return ds;
}

std::string manifest_json(const Dataset& ds) {
  const Grid& g = ds.grid();
  std::vector<std::string> split_of(ds.fields.size(), "unused");
  for (std::size_t id : ds.splits.train) split_of[id] = "train";
  for (std::size_t id : ds.splits.val) split_of[id] = "val";
  for (std::size_t id : ds.splits.test) split_of[id] = "test";

  ordered_json j;
  j["format"] = "burgan-dataset";
  j["version"] = kManifestVersion;
  j["seed"] = ds.seed;
  j["solver"] = {
      {"method", "fourier-pseudospectral-rk4"},
      {"nx", g.nx},
      {"nt", g.nt},
      {"x_min", g.x_min},
      {"x_max", g.x_max()},
      {"t_end", g.t_end},
      {"nu", ds.options.nu},
      {"dt_max", ds.options.dt_max},
      {"substeps_per_snapshot", substeps_per_snapshot(g, ds.options.dt_max)},
      {"dealias", "2/3"},
      {"boundary", "periodic"},
  };
  j["splits"] = {{"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}};
  ordered_json fields = ordered_json::array();
  for (std::size_t i = 0; i < ds.fields.size(); ++i) {
    const ICParams& ic = ds.fields[i].ic;
    fields.push_back({{"index", i},
                      {"file", field_file_name(i)},
                      {"a", ic.a},
                      {"b", ic.b},
                      {"c", ic.c},
                      {"d", ic.d},
                      {"split", split_of[i]}});
  }
  j["fields"] = std::move(fields);
  return j.dump(2) + "\n";
}

Dataset load_dataset(const fs::path& dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(read_file(dir / "manifest.json"));
  } catch (const ordered_json::parse_error& e) {
    throw IoError((dir / "manifest.json").string() + ": " + e.what());
  }
  try {
    if (j.at("format") != "burgan-dataset") throw IoError("not a dataset manifest: " + dir.string());
    Dataset ds;
    ds.seed = j.at("seed").get<std::uint64_t>();
    const auto& solver = j.at("solver");
    ds.options.nt = solver.at("nt").get<std::size_t>();
    ds.options.nu = solver.at("nu").get<double>();
    ds.options.dt_max = solver.at("dt_max").get<double>();
    ds.splits.train = j.at("splits").at("train").get<std::vector<std::size_t>>();
    ds.splits.val = j.at("splits").at("val").get<std::vector<std::size_t>>();
    ds.splits.test = j.at("splits").at("test").get<std::vector<std::size_t>>();
    for (const auto& f : j.at("fields")) {
      SolutionField field = read_field(dir / f.at("file").get<std::string>());
      const ICParams listed{f.at("a").get<double>(), f.at("b").get<double>(), f.at("c").get<double>(),
                            f.at("d").get<double>()};
      if (!(listed == field.ic)) throw IoError(f.at("file").get<std::string>() + ": IC does not match manifest");
      ds.fields.push_back(std::move(field));
    }
    ds.validate();
    return ds;
  } catch (const ordered_json::exception& e) {
    throw IoError((dir / "manifest.json").string() + ": " + e.what());
  }
}

}  // namespace burgan
