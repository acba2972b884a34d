// Copyright 2026 The KART Harness Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "kart/model_io.h"

#include <bit>
#include <cstring>
#include <sstream>

#include <fmt/format.h>

#include "kart/count_scorer.h"
#include "kart/error.h"
#include "kart/io.h"
#include "kart/tiny_mlm.h"
#include "toml_util.h"

namespace kart {
namespace {

static_assert(std::endian::native == std::endian::little, "params.bin assumes a little-endian host");

constexpr std::string_view kMagic{"KARTM\0", 6};
constexpr std::string_view kManifestFormat = "kart-model/1";

template <typename T>
void Put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T Take() {
    T value;
    std::memcpy(&value, Bytes(sizeof(T)).data(), sizeof(T));
    return value;
  }

  std::string_view Bytes(size_t n) {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::kDataIntegrity,
                  fmt::format("params.bin truncated at byte {}", pos_));
    }
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  size_t pos_ = 0;
};

template <typename T>
std::vector<T> TakeArray(Reader& r, uint64_t count) {
  if (count > (uint64_t{1} << 40) / sizeof(T)) {
    throw Error(ErrorKind::kDataIntegrity, "params.bin array length is implausible");
  }
  std::string_view raw = r.Bytes(count * sizeof(T));
  std::vector<T> v(count);
  if (count > 0) std::memcpy(v.data(), raw.data(), raw.size());
  return v;
}

std::string ManifestText(const ScorerModel& model, std::string_view params_sha) {
  const ModelProvenance& p = model.provenance();
  toml::table root{
      {"format", std::string(kManifestFormat)},
      {"kind", std::string(ModelKindName(model.kind()))},
      {"model_id", p.model_id},
      {"vocab_size", static_cast<int64_t>(model.vocabulary().size())},
      {"params_sha256", std::string(params_sha)},
      {"provenance", toml::table{{"corpus_hash", p.corpus_hash},
                                 {"anonymizer", p.anonymizer},
                                 {"trained", p.trained},
                                 {"training_mode", p.training_mode}}},
      {"config", TrainingConfigTable(p.config)},
  };
  std::ostringstream out;
  out << root << '\n';
  return out.str();
}

}  // namespace

std::string EncodeParams(const std::vector<ParamArray>& arrays) {
  std::string out(kMagic);
  Put<uint16_t>(out, kParamsVersion);
  Put<uint32_t>(out, static_cast<uint32_t>(arrays.size()));
  for (const ParamArray& a : arrays) {
    if (a.name.size() > 0xffff) {
      throw Error(ErrorKind::kConfiguration, "parameter array name is too long");
    }
    Put<uint16_t>(out, static_cast<uint16_t>(a.name.size()));
    out += a.name;
    std::visit(
        [&](const auto& v) {
          using T = typename std::decay_t<decltype(v)>::value_type;
          Put<uint8_t>(out, std::is_same_v<T, float> ? 0 : 1);
          Put<uint64_t>(out, v.size());
          out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
        },
        a.data);
  }
  return out;
}

std::vector<ParamArray> DecodeParams(std::string_view bytes) {
  Reader r(bytes);
  if (bytes.size() < kMagic.size() || r.Bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorKind::kDataIntegrity, "params.bin has a bad magic header");
  }
  const auto version = r.Take<uint16_t>();
  if (version != kParamsVersion) {
    throw Error(ErrorKind::kDataIntegrity,
                fmt::format("params.bin version {} is not supported (expected {})", version,
                            kParamsVersion));
  }
  const auto n = r.Take<uint32_t>();
  std::vector<ParamArray> arrays;
  for (uint32_t i = 0; i < n; ++i) {
    ParamArray a;
    a.name = std::string(r.Bytes(r.Take<uint16_t>()));
    const auto dtype = r.Take<uint8_t>();
    const auto count = r.Take<uint64_t>();
    if (dtype == 0) {
      a.data = TakeArray<float>(r, count);
    } else if (dtype == 1) {
      a.data = TakeArray<int32_t>(r, count);
    } else {
      throw Error(ErrorKind::kDataIntegrity,
                  fmt::format("array '{}' has unknown dtype {}", a.name, dtype));
    }
    arrays.push_back(std::move(a));
  }
  if (!r.done()) throw Error(ErrorKind::kDataIntegrity, "params.bin has trailing bytes");
  return arrays;
}

void SaveModel(const ScorerModel& model, const std::filesystem::path& dir) {
  std::vector<ParamArray> arrays;
  if (model.kind() != ModelKind::kUniform) arrays = model.ExportParams();
  const std::string params = EncodeParams(arrays);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorKind::kIo, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  }
  WriteFileAtomic(dir / "params.bin", params);
  WriteFileAtomic(dir / "vocab.txt", model.vocabulary().ToText());
  WriteFileAtomic(dir / "manifest.toml", ManifestText(model, Sha256Hex(params)));
}

std::unique_ptr<ScorerModel> LoadModel(const std::filesystem::path& dir) {
  using R = TomlReader;
  const toml::table root = ParseToml(ReadFile(dir / "manifest.toml"), "model manifest");
  R::CheckKeys(root, "model manifest",
               {"format", "kind", "model_id", "vocab_size", "params_sha256", "provenance", "config"});
  if (R::Get<std::string>(root, "format") != std::string(kManifestFormat)) {
    throw Error(ErrorKind::kDataIntegrity,
                fmt::format("{} is not a {} manifest", (dir / "manifest.toml").string(),
                            kManifestFormat));
  }
  const std::string kind_name = R::Get<std::string>(root, "kind").value_or("");
  const auto kind = ParseModelKind(kind_name);
  if (!kind || *kind == ModelKind::kExternal) {
    throw Error(ErrorKind::kDataIntegrity, fmt::format("cannot load model kind '{}'", kind_name));
  }

  ModelProvenance prov;
  prov.model_id = R::Get<std::string>(root, "model_id").value_or("");
  if (const toml::table* t = root["provenance"].as_table()) {
    R::CheckKeys(*t, "[provenance]", {"corpus_hash", "anonymizer", "trained", "training_mode"});
    prov.corpus_hash = R::Get<std::string>(*t, "corpus_hash").value_or("");
    prov.anonymizer = R::Get<std::string>(*t, "anonymizer").value_or("id");
    prov.trained = R::Get<bool>(*t, "trained").value_or(true);
    prov.training_mode = R::Get<std::string>(*t, "training_mode").value_or("serial");
  }
  if (const toml::table* t = root["config"].as_table()) ReadTrainingConfig(*t, "[config]", prov.config);

  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::FromText(ReadFile(dir / "vocab.txt")));
  if (R::Get<int64_t>(root, "vocab_size") != static_cast<int64_t>(vocab->size())) {
    throw Error(ErrorKind::kDataIntegrity, "vocab.txt size disagrees with the manifest");
  }
  const std::string params = ReadFile(dir / "params.bin");
  if (R::Get<std::string>(root, "params_sha256") != Sha256Hex(params)) {
    throw Error(ErrorKind::kDataIntegrity, "params.bin checksum does not match the manifest");
  }
  const std::vector<ParamArray> arrays = DecodeParams(params);

  switch (*kind) {
    case ModelKind::kCountNb:
      return std::make_unique<CountScorer>(vocab, CountScorer::TablesFromParams(arrays, vocab->size()),
                                           std::move(prov));
    case ModelKind::kTinyMlm:
      return std::make_unique<TinyMlm>(
          vocab, TinyMlm::ParamsFromArrays(arrays, vocab->size(), prov.config), std::move(prov));
    default:
      return std::make_unique<UniformScorer>(vocab);
  }
}

}  // namespace kart
