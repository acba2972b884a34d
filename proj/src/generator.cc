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

#include "kart/generator.h"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "kart/error.h"
#include "kart/io.h"
#include "kart/random.h"
#include "toml_util.h"

namespace kart {
namespace {

// Stream tags mixed into DeriveSeed so each attribute has its own stream.
enum StreamTag : uint64_t {
  kTagNames = 1,
  kTagDemographics,
  kTagContact,
  kTagIdentifiers,
  kTagClinical,
  kTagPlant,
  kTagDocCount,
  kTagDocument,
};

constexpr std::array<std::string_view, 16> kStreets = {
    "elmwood",   "birchfield", "cedarline", "dunmore",    "ashgrove",  "fernhill",
    "larchmont", "maplecrest", "aspenwood", "willowbend", "quailrun",  "heronway",
    "saltmarsh", "foxglove",   "tidewater", "brackenway",
};
constexpr std::array<std::string_view, 5> kStreetSuffixes = {"st", "ave", "rd", "blvd", "ct"};
constexpr std::array<std::string_view, 14> kCities = {
    "corvallen", "dunmere",  "eastwick",   "fallbrook", "highmoor", "kingsport", "millbrook",
    "norwood",   "pembrook", "redhaven",   "sunderby",  "tamworth", "westfield", "yorkvale",
};

std::string Digits(Rng& rng, int n) {
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.Below(10)));
  return s;
}

std::string Hex(Rng& rng, int n) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back(kHex[rng.Below(16)]);
  return s;
}

std::string Alnum(Rng& rng, int n) {
  static constexpr char kChars[] = "abcdefghjklmnprstuvwxyz0123456789";
  std::string s;
  for (int i = 0; i < n; ++i) s.push_back(kChars[rng.Below(sizeof(kChars) - 1)]);
  return s;
}

std::string PhoneNumber(Rng& rng) {
  return fmt::format("{}-{}-{}", rng.Between(201, 989), rng.Between(200, 999), Digits(rng, 4));
}

const WeightedName& SampleByWeight(const std::vector<WeightedName>& names,
                                   const std::vector<double>& cumulative, Rng& rng) {
  const double u = rng.Uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  size_t i = static_cast<size_t>(it - cumulative.begin());
  return names[std::min(i, names.size() - 1)];
}

std::vector<double> Cumulative(const std::vector<WeightedName>& names) {
  std::vector<double> c(names.size());
  double acc = 0.0;
  for (size_t i = 0; i < names.size(); ++i) c[i] = acc += names[i].weight;
  return c;
}

// Draws `count` distinct items from `pool` in draw order.
std::vector<std::string> SampleDistinct(const std::vector<std::string>& pool, size_t count,
                                        Rng& rng) {
  std::vector<size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  count = std::min(count, pool.size());
  std::vector<std::string> out;
  for (size_t i = 0; i < count; ++i) {
    size_t j = i + rng.Below(idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(pool[idx[i]]);
  }
  return out;
}

template <typename T>
void Shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.Below(i)]);
}

std::string JoinList(const std::vector<std::string>& items) {
  if (items.empty()) return "none";
  if (items.size() == 1) return items[0];
  std::string out;
  for (size_t i = 0; i + 1 < items.size(); ++i) {
    if (i > 0) out += ", ";
    out += items[i];
  }
  return out + " and " + items.back();
}

struct Segment {
  bool slot = false;
  std::string text;
};

const std::set<std::string, std::less<>>& PlainSlots() {
  static const std::set<std::string, std::less<>> kSlots = {
      "age", "sex", "pmh_list", "pmh_item", "medication_list", "medication_item"};
  return kSlots;
}

std::vector<Segment> ParseTemplate(std::string_view tmpl) {
  std::vector<Segment> out;
  size_t pos = 0;
  while (pos < tmpl.size()) {
    size_t open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.push_back({false, std::string(tmpl.substr(pos))});
      break;
    }
    if (open > pos) out.push_back({false, std::string(tmpl.substr(pos, open - pos))});
    size_t close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      throw Error(ErrorKind::kTemplate, fmt::format("unterminated slot in template '{}'", tmpl));
    }
    std::string name(tmpl.substr(open + 1, close - open - 1));
    if (!ParsePhiField(name) && !PlainSlots().contains(name)) {
      throw Error(ErrorKind::kTemplate,
                  fmt::format("template '{}' references unknown attribute '{}'", tmpl, name));
    }
    out.push_back({true, std::move(name)});
    pos = close + 1;
  }
  return out;
}

class DocumentBuilder {
 public:
  DocumentBuilder(const PhiRecord& record, std::string_view mask_token, Rng& rng)
      : record_(record), mask_token_(mask_token), rng_(rng) {}

  void AddSentence(const std::vector<Segment>& segments) {
    if (!text_.empty()) text_.push_back(' ');
    for (const Segment& seg : segments) {
      if (!seg.slot) {
        text_ += seg.text;
        continue;
      }
      if (auto field = ParsePhiField(seg.text)) {
        if (record_.Values(*field).empty()) {
          throw Error(ErrorKind::kTemplate,
                      fmt::format("patient {} has no value for template attribute '{}'",
                                  record_.patient_id, seg.text));
        }
        PhiSpan span;
        span.start = text_.size();
        text_ += PlaceholderToken(CategoryOf(*field), mask_token_);
        span.end = text_.size();
        span.field = *field;
        span.patient_id = record_.patient_id;
        spans_.push_back(std::move(span));
      } else {
        text_ += Plain(seg.text);
      }
    }
  }

  Document Finish(std::string doc_id, NoteCategory category) {
    Document d;
    d.doc_id = std::move(doc_id);
    d.patient_id = record_.patient_id;
    d.category = category;
    d.text = std::move(text_);
    d.phi_spans = std::move(spans_);
    return d;
  }

 private:
  std::string Plain(const std::string& slot) {
    if (slot == "age") {
      if (!record_.age) Missing(slot);
      return std::to_string(*record_.age);
    }
    if (slot == "sex") {
      if (!record_.sex) Missing(slot);
      return std::string(SexName(*record_.sex));
    }
    if (slot == "pmh_list") return JoinList(record_.pmh);
    if (slot == "medication_list") return JoinList(record_.medications);
    const auto& pool = slot == "pmh_item" ? record_.pmh : record_.medications;
    if (pool.empty()) Missing(slot);
    return rng_.Pick(pool);
  }

  [[noreturn]] void Missing(const std::string& slot) const {
    throw Error(ErrorKind::kTemplate, fmt::format("patient {} has no value for template attribute '{}'",
                                                  record_.patient_id, slot));
  }

  const PhiRecord& record_;
  std::string_view mask_token_;
  Rng& rng_;
  std::string text_;
  std::vector<PhiSpan> spans_;
};

struct CompiledTemplates {
  std::vector<Segment> mention;
  std::vector<std::vector<Segment>> followups, always, identifiers, diagnoses, medications;
  std::map<NoteCategory, std::vector<std::vector<Segment>>> categories;
};

std::vector<std::vector<Segment>> CompileAll(const std::vector<std::string>& templates) {
  std::vector<std::vector<Segment>> out;
  for (const std::string& t : templates) out.push_back(ParseTemplate(t));
  return out;
}

CompiledTemplates Compile(const TemplateConfig& config) {
  CompiledTemplates c;
  c.mention = ParseTemplate(config.mention);
  c.followups = CompileAll(config.mention_followups);
  c.always = CompileAll(config.always);
  c.identifiers = CompileAll(config.identifier_sentences);
  c.diagnoses = CompileAll(config.diagnosis_sentences);
  c.medications = CompileAll(config.medication_sentences);
  for (const auto& [cat, sentences] : config.category_sentences) {
    c.categories[cat] = CompileAll(sentences);
  }
  return c;
}

}  // namespace

PopulationSources LoadDefaultPopulationSources() {
  PopulationSources s;
  s.clinical = LoadDefaultClinicalLexicon();
  s.hospitals = LoadWordList(DataDirectory() / "hospitals.txt");
  return s;
}

PhiTable GeneratePhiTable(int n_patients, uint64_t seed, const NameLexicon& names,
                          const PopulationSources& sources) {
  if (n_patients < 0) {
    throw Error(ErrorKind::kConfiguration, fmt::format("n_patients {} is negative", n_patients));
  }
  PhiTable table;
  table.role = TableRole::kGold;
  if (n_patients == 0) return table;
  if (names.first_names().empty() || names.last_names().empty()) {
    throw Error(ErrorKind::kConfiguration, "name lexicon is empty");
  }
  if (sources.clinical.conditions.empty() || sources.clinical.medications.empty() ||
      sources.hospitals.empty()) {
    throw Error(ErrorKind::kConfiguration, "condition, medication and hospital lists must be non-empty");
  }

  std::vector<std::string> condition_pool = sources.clinical.conditions;
  std::vector<bool> planted(static_cast<size_t>(n_patients), false);
  if (sources.planted_condition) {
    auto it = std::find(condition_pool.begin(), condition_pool.end(), *sources.planted_condition);
    if (it == condition_pool.end()) {
      throw Error(ErrorKind::kConfiguration,
                  fmt::format("planted condition '{}' is not in the condition lexicon",
                              *sources.planted_condition));
    }
    condition_pool.erase(it);
    if (sources.planted_patients < 0 || sources.planted_patients > n_patients) {
      throw Error(ErrorKind::kConfiguration,
                  fmt::format("cannot plant into {} of {} patients", sources.planted_patients,
                              n_patients));
    }
    std::vector<int> ids(static_cast<size_t>(n_patients));
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(DeriveSeed(seed, {kTagPlant}));
    Shuffle(ids, rng);
    for (int i = 0; i < sources.planted_patients; ++i) planted[static_cast<size_t>(ids[i])] = true;
  }

  const std::vector<double> first_cum = Cumulative(names.first_names());
  const std::vector<double> last_cum = Cumulative(names.last_names());
  table.rows.resize(static_cast<size_t>(n_patients));

#pragma omp parallel for schedule(static)
  for (int p = 0; p < n_patients; ++p) {
    const uint64_t pid = static_cast<uint64_t>(p);
    PhiRecord& r = table.rows[static_cast<size_t>(p)];
    r.patient_id = p;
    {
      Rng rng(DeriveSeed(seed, {pid, kTagNames}));
      r.first_name = SampleByWeight(names.first_names(), first_cum, rng).name;
      r.last_name = SampleByWeight(names.last_names(), last_cum, rng).name;
    }
    {
      Rng rng(DeriveSeed(seed, {pid, kTagDemographics}));
      r.age = static_cast<int>(rng.Between(18, 89));
      r.sex = rng.Bernoulli(0.5) ? Sex::kMale : Sex::kFemale;
      for (int i = 0; i < 3; ++i) {
        r.dates.push_back(fmt::format("{}-{:02d}-{:02d}", rng.Between(2100, 2199),
                                      rng.Between(1, 12), rng.Between(1, 28)));
      }
    }
    {
      Rng rng(DeriveSeed(seed, {pid, kTagContact}));
      r.phone = PhoneNumber(rng);
      r.address = fmt::format("{} {} {}, {}", rng.Between(10, 9899), rng.Pick(kStreets),
                              rng.Pick(kStreetSuffixes), rng.Pick(kCities));
      r.email = fmt::format("{}{}{}@mailbox.example", r.first_name.substr(0, 1), r.last_name,
                            Digits(rng, 3));
      r.url = fmt::format("https://portal.example.org/p/{}", Hex(rng, 12));
      r.ip = fmt::format("10.{}.{}.{}", rng.Below(256), rng.Below(256), rng.Between(1, 254));
      r.other_ids["fax"] = "+1-" + PhoneNumber(rng);
    }
    {
      Rng rng(DeriveSeed(seed, {pid, kTagIdentifiers}));
      r.mrn = Digits(rng, 8);
      r.other_ids["ssn"] = fmt::format("{}-{}-{}", Digits(rng, 3), Digits(rng, 2), Digits(rng, 4));
      r.other_ids["health_plan"] = "hp" + Digits(rng, 9);
      r.other_ids["account"] = "acct-" + Digits(rng, 8);
      r.other_ids["license"] = "dl-" + Alnum(rng, 8);
      r.other_ids["vehicle"] = "vin-" + Alnum(rng, 13);
      r.other_ids["device"] = "sn-" + Hex(rng, 10);
      r.other_ids["biometric"] = fmt::format("fingerprint_{}.dat", Hex(rng, 8));
      r.other_ids["photo"] = fmt::format("photo_{}.jpg", Hex(rng, 8));
      r.other_ids["other_id"] = "id-" + Digits(rng, 9);
    }
    {
      Rng rng(DeriveSeed(seed, {pid, kTagClinical}));
      r.other_ids["hospital"] = rng.Pick(sources.hospitals);
      if (planted[static_cast<size_t>(p)]) {
        r.pmh = {*sources.planted_condition};
      } else {
        r.pmh = SampleDistinct(condition_pool, static_cast<size_t>(rng.Between(2, 4)), rng);
      }
      r.medications =
          SampleDistinct(sources.clinical.medications, static_cast<size_t>(rng.Between(2, 4)), rng);
    }
  }
  table.Validate();
  return table;
}

TemplateConfig TemplateConfig::Default() {
  TemplateConfig c;
  c.mention = "{first_name} {last_name} is a {age} year old {sex}.";
  c.mention_followups = {
      "past medical history includes {pmh_list}.",
      "current medications include {medication_list}.",
  };
  c.always = {
      "contact phone {phone}.",
      "admitted to {hospital} on {date}.",
  };
  c.identifier_sentences = {
      "the patient lives at {address}.",
      "medical record number {mrn}.",
      "email on file is {email}.",
      "fax records to {fax}.",
      "social security number {ssn} verified.",
      "insurance member id {health_plan}.",
      "billing account {account}.",
      "driver license {license} recorded.",
      "vehicle {vehicle} parked in visitor lot.",
      "pacemaker serial {device} interrogated.",
      "patient portal {url} activated.",
      "telehealth session from {ip}.",
      "biometric file {biometric} on record.",
      "image {photo} attached to chart.",
      "external identifier {other_id} assigned.",
      "prior visit on {date}.",
  };
  c.diagnosis_sentences = {
      "history of {pmh_item} noted.",
      "{pmh_item} remains stable.",
      "known {pmh_item} followed by the primary team.",
  };
  c.medication_sentences = {
      "continue {medication_item} as prescribed.",
      "patient reports taking {medication_item} daily.",
      "{medication_item} was reconciled on admission.",
  };
  using N = NoteCategory;
  c.category_sentences = {
      {N::kCaseManagement,
       {"discharge planning started.", "home services were arranged.",
        "insurance authorization pending."}},
      {N::kConsult,
       {"consult requested for further evaluation.", "recommendations discussed with the team.",
        "no acute intervention advised."}},
      {N::kDischargeSummary,
       {"discharged home in stable condition.", "follow up with primary care in two weeks.",
        "hospital course was uncomplicated."}},
      {N::kEcg,
       {"sinus rhythm at a normal rate.", "no acute st changes.", "qt interval within limits."}},
      {N::kEcho,
       {"left ventricular function is preserved.", "no pericardial effusion seen.",
        "valves appear structurally normal."}},
      {N::kGeneral,
       {"patient seen and examined.", "questions answered at bedside.",
        "plan reviewed with the patient."}},
      {N::kNursing,
       {"patient resting comfortably.", "vital signs stable overnight.",
        "pain controlled on current regimen."}},
      {N::kNursingOther,
       {"skin intact without breakdown.", "tolerating oral intake.", "ambulating with assistance."}},
      {N::kNutrition,
       {"diet advanced as tolerated.", "caloric intake adequate.", "weight stable since admission."}},
      {N::kPharmacy,
       {"medication list reviewed.", "no drug interactions identified.",
        "dosing adjusted for renal function."}},
      {N::kProgressNote,
       {"afebrile overnight with stable vitals.", "plan discussed with the team.",
        "labs reviewed this morning."}},
      {N::kRadiology,
       {"chest film shows no acute process.", "no focal consolidation.",
        "lines and tubes in expected position."}},
      {N::kRehabServices,
       {"gait training performed.", "strength improving in lower extremities.",
        "home exercise program provided."}},
      {N::kRespiratory,
       {"breath sounds clear bilaterally.", "oxygen weaned to room air.",
        "nebulizer treatment given."}},
      {N::kSocialWork,
       {"family meeting held.", "support resources discussed.", "coping well with diagnosis."}},
  };
  return c;
}

void TemplateConfig::Validate() const {
  if (mention_fraction < 0.0 || mention_fraction > 1.0) {
    throw Error(ErrorKind::kConfiguration, "mention_fraction must lie in [0, 1]");
  }
  if (docs_per_patient_min < 0 || docs_per_patient_max < docs_per_patient_min) {
    throw Error(ErrorKind::kConfiguration, "invalid docs_per_patient range");
  }
  if (identifier_sentences_min < 0 || identifier_sentences_max < identifier_sentences_min) {
    throw Error(ErrorKind::kConfiguration, "invalid identifier_sentences range");
  }
  Compile(*this);
  for (NoteCategory cat : kAllNoteCategories) {
    auto it = category_sentences.find(cat);
    if (it == category_sentences.end() || it->second.empty()) {
      throw Error(ErrorKind::kTemplate,
                  fmt::format("note category {} has no sentences", NoteCategoryName(cat)));
    }
  }
}

Corpus SynthesizeDocuments(const PhiTable& table, const TemplateConfig& config, uint64_t seed) {
  if (table.role != TableRole::kGold) {
    throw Error(ErrorKind::kConfiguration, "documents can only be synthesized from a gold table");
  }
  config.Validate();
  const CompiledTemplates tmpl = Compile(config);
  const size_t n = table.rows.size();

  std::vector<std::vector<Document>> per_patient(n);
#pragma omp parallel for schedule(dynamic)
  for (size_t p = 0; p < n; ++p) {
    const PhiRecord& record = table.rows[p];
    const uint64_t pid = static_cast<uint64_t>(record.patient_id);
    Rng count_rng(DeriveSeed(seed, {pid, kTagDocCount}));
    const int n_docs = static_cast<int>(
        count_rng.Between(config.docs_per_patient_min, config.docs_per_patient_max));
    for (int d = 0; d < n_docs; ++d) {
      Rng rng(DeriveSeed(seed, {pid, kTagDocument, static_cast<uint64_t>(d)}));
      const NoteCategory category = rng.Pick(kAllNoteCategories);
      const bool mention = d == 0 || rng.Bernoulli(config.mention_fraction);

      std::vector<const std::vector<Segment>*> body;
      for (const auto& s : tmpl.always) body.push_back(&s);
      const size_t n_ids = static_cast<size_t>(
          rng.Between(config.identifier_sentences_min, config.identifier_sentences_max));
      std::vector<size_t> order(tmpl.identifiers.size());
      std::iota(order.begin(), order.end(), 0);
      Shuffle(order, rng);
      for (size_t i = 0; i < std::min(n_ids, order.size()); ++i) {
        body.push_back(&tmpl.identifiers[order[i]]);
      }
      if (!tmpl.diagnoses.empty()) body.push_back(&rng.Pick(tmpl.diagnoses));
      if (!tmpl.medications.empty()) body.push_back(&rng.Pick(tmpl.medications));
      const auto& cat_sentences = tmpl.categories.at(category);
      std::vector<size_t> cat_order(cat_sentences.size());
      std::iota(cat_order.begin(), cat_order.end(), 0);
      Shuffle(cat_order, rng);
      const size_t n_cat =
          std::min(cat_order.size(), static_cast<size_t>(config.category_sentences_per_doc));
      for (size_t i = 0; i < n_cat; ++i) body.push_back(&cat_sentences[cat_order[i]]);
      Shuffle(body, rng);

      DocumentBuilder builder(record, config.mask_token, rng);
      if (mention) {
        builder.AddSentence(tmpl.mention);
        for (const auto& s : tmpl.followups) builder.AddSentence(s);
      }
      for (const auto* s : body) builder.AddSentence(*s);
      per_patient[p].push_back(
          builder.Finish(fmt::format("p{:05d}-d{:03d}", record.patient_id, d), category));
    }
  }

  Corpus corpus;
  corpus.split = Split::kTrain;
  corpus.provenance.seed = seed;
  corpus.provenance.generator_version = std::string(kGeneratorVersion);
  corpus.provenance.fill_rate = 0.0;
  for (auto& docs : per_patient) {
    for (Document& d : docs) corpus.documents.push_back(std::move(d));
  }
  return corpus;
}

Corpus FillPlaceholders(const Corpus& corpus, const PhiTable& table, double fill_rate,
                        uint64_t seed) {
  if (fill_rate < 0.0 || fill_rate > 1.0) {
    throw Error(ErrorKind::kConfiguration, fmt::format("fill_rate {} outside [0, 1]", fill_rate));
  }
  Corpus out;
  out.split = corpus.split;
  out.provenance = corpus.provenance;
  out.provenance.fill_rate = fill_rate;
  out.documents.resize(corpus.documents.size());
  const auto n = static_cast<int64_t>(corpus.documents.size());

  // Exceptions may not leave an OpenMP region; the first failure is kept and
  // rethrown after the loop.
  std::vector<std::string> failures(corpus.documents.size());
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    const Document& in = corpus.documents[static_cast<size_t>(i)];
    Document& doc = out.documents[static_cast<size_t>(i)];
    doc.doc_id = in.doc_id;
    doc.patient_id = in.patient_id;
    doc.category = in.category;
    const uint64_t doc_key = StableHash(in.doc_id);
    size_t cursor = 0;
    for (size_t s = 0; s < in.phi_spans.size(); ++s) {
      const PhiSpan& span = in.phi_spans[s];
      doc.text.append(in.text, cursor, span.start - cursor);
      cursor = span.end;
      PhiSpan next = span;
      next.start = doc.text.size();
      std::string_view original = in.SpanText(span);
      if (!span.surrogate) {
        Rng rng(DeriveSeed(seed, {doc_key, static_cast<uint64_t>(s)}));
        if (rng.Bernoulli(fill_rate)) {
          const PhiRecord* record = table.Find(span.patient_id);
          if (record == nullptr) {
            failures[static_cast<size_t>(i)] = fmt::format(
                "document {}: span references unknown patient_id {}", in.doc_id, span.patient_id);
            break;
          }
          std::vector<std::string> values = record->Values(span.field);
          if (values.empty()) {
            failures[static_cast<size_t>(i)] =
                fmt::format("document {}: patient {} has no {} value", in.doc_id,
                            span.patient_id, PhiFieldName(span.field));
            break;
          }
          next.surrogate = values.size() == 1 ? values[0] : rng.Pick(values);
          original = *next.surrogate;
        }
      }
      doc.text.append(original);
      next.end = doc.text.size();
      doc.phi_spans.push_back(std::move(next));
    }
    doc.text.append(in.text, std::min(cursor, in.text.size()), std::string::npos);
  }
  for (const std::string& f : failures) {
    if (!f.empty()) throw Error(ErrorKind::kDataIntegrity, f);
  }
  return out;
}

std::optional<SubsetMode> ParseSubsetMode(std::string_view name) {
  if (name == "large_like") return SubsetMode::kLargeLike;
  if (name == "small_like") return SubsetMode::kSmallLike;
  return std::nullopt;
}

std::pair<Corpus, Corpus> SelectSubset(const Corpus& corpus, SubsetMode mode, size_t train_size,
                                       size_t val_size, uint64_t seed) {
  std::vector<size_t> eligible;
  for (size_t i = 0; i < corpus.documents.size(); ++i) {
    const NoteCategory c = corpus.documents[i].category;
    if (mode == SubsetMode::kSmallLike && c != NoteCategory::kDischargeSummary &&
        c != NoteCategory::kProgressNote) {
      continue;
    }
    eligible.push_back(i);
  }
  if (train_size + val_size > eligible.size()) {
    throw Error(ErrorKind::kSize,
                fmt::format("requested {} train + {} val documents but only {} are eligible",
                            train_size, val_size, eligible.size()));
  }
  Rng rng(seed);
  Shuffle(eligible, rng);
  std::vector<size_t> train(eligible.begin(), eligible.begin() + static_cast<ptrdiff_t>(train_size));
  std::vector<size_t> val(eligible.begin() + static_cast<ptrdiff_t>(train_size),
                          eligible.begin() + static_cast<ptrdiff_t>(train_size + val_size));
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());

  auto build = [&](const std::vector<size_t>& idx, Split split) {
    Corpus c;
    c.split = split;
    c.provenance = corpus.provenance;
    for (size_t i : idx) c.documents.push_back(corpus.documents[i]);
    return c;
  };
  return {build(train, Split::kTrain), build(val, Split::kVal)};
}

GeneratorConfig ParseGeneratorConfig(std::string_view toml_text) {
  toml::table root = ParseToml(toml_text, "generator config");
  TomlReader::CheckKeys(root, "generator config",
                        {"seed", "population", "templates", "fill", "sizes", "plant"});
  GeneratorConfig c;
  using R = TomlReader;
  if (auto seed = R::Get<int64_t>(root, "seed")) c.seed = static_cast<uint64_t>(*seed);
  if (const toml::table* t = root["population"].as_table()) {
    R::CheckKeys(*t, "[population]", {"patients"});
    if (auto v = R::Get<int>(*t, "patients")) c.patients = *v;
  }
  if (const toml::table* t = root["templates"].as_table()) {
    R::CheckKeys(*t, "[templates]",
                 {"mention_fraction", "docs_per_patient", "docs_per_patient_min",
                  "docs_per_patient_max", "identifier_sentences_min", "identifier_sentences_max",
                  "category_sentences_per_doc", "mention", "mention_followups", "always",
                  "identifier_sentences", "diagnosis_sentences", "medication_sentences",
                  "mask_token", "categories"});
    TemplateConfig& tc = c.templates;
    if (auto v = R::Get<double>(*t, "mention_fraction")) tc.mention_fraction = *v;
    if (auto v = R::Get<int>(*t, "docs_per_patient")) tc.docs_per_patient_min = tc.docs_per_patient_max = *v;
    if (auto v = R::Get<int>(*t, "docs_per_patient_min")) tc.docs_per_patient_min = *v;
    if (auto v = R::Get<int>(*t, "docs_per_patient_max")) tc.docs_per_patient_max = *v;
    if (auto v = R::Get<int>(*t, "identifier_sentences_min")) tc.identifier_sentences_min = *v;
    if (auto v = R::Get<int>(*t, "identifier_sentences_max")) tc.identifier_sentences_max = *v;
    if (auto v = R::Get<int>(*t, "category_sentences_per_doc")) tc.category_sentences_per_doc = *v;
    if (auto v = R::Get<std::string>(*t, "mention")) tc.mention = *v;
    if (auto v = R::Get<std::string>(*t, "mask_token")) tc.mask_token = *v;
    if (t->contains("mention_followups")) tc.mention_followups = R::Strings(*t, "mention_followups");
    if (t->contains("always")) tc.always = R::Strings(*t, "always");
    if (t->contains("identifier_sentences")) tc.identifier_sentences = R::Strings(*t, "identifier_sentences");
    if (t->contains("diagnosis_sentences")) tc.diagnosis_sentences = R::Strings(*t, "diagnosis_sentences");
    if (t->contains("medication_sentences")) tc.medication_sentences = R::Strings(*t, "medication_sentences");
    if (const toml::table* cats = (*t)["categories"].as_table()) {
      for (const auto& [key, value] : *cats) {
        auto cat = ParseNoteCategory(key.str());
        if (!cat) {
          throw Error(ErrorKind::kConfiguration,
                      fmt::format("unknown note category '{}' in [templates.categories]", key.str()));
        }
        tc.category_sentences[*cat] = R::Strings(*cats, key.str());
      }
    }
  }
  if (const toml::table* t = root["fill"].as_table()) {
    R::CheckKeys(*t, "[fill]", {"rate"});
    if (auto v = R::Get<double>(*t, "rate")) c.fill_rate = *v;
  }
  if (const toml::table* t = root["sizes"].as_table()) {
    R::CheckKeys(*t, "[sizes]", {"mode", "train", "val"});
    if (auto v = R::Get<std::string>(*t, "mode")) {
      auto mode = ParseSubsetMode(*v);
      if (!mode) throw Error(ErrorKind::kConfiguration, fmt::format("unknown subset mode '{}'", *v));
      c.subset_mode = *mode;
    }
    auto train = R::Get<int64_t>(*t, "train");
    auto val = R::Get<int64_t>(*t, "val");
    if (train.has_value() != val.has_value()) {
      throw Error(ErrorKind::kConfiguration, "[sizes] needs both train and val");
    }
    if (train) {
      if (*train < 0 || *val < 0) throw Error(ErrorKind::kConfiguration, "[sizes] must be non-negative");
      c.sizes = {static_cast<size_t>(*train), static_cast<size_t>(*val)};
    }
  }
  if (const toml::table* t = root["plant"].as_table()) {
    R::CheckKeys(*t, "[plant]", {"condition", "patients"});
    c.planted_condition = R::Get<std::string>(*t, "condition");
    c.planted_patients = R::Get<int>(*t, "patients").value_or(1);
  }
  if (c.patients < 0) throw Error(ErrorKind::kConfiguration, "patients must be non-negative");
  if (c.fill_rate < 0.0 || c.fill_rate > 1.0) {
    throw Error(ErrorKind::kConfiguration, "fill rate must lie in [0, 1]");
  }
  c.templates.Validate();
  return c;
}

GeneratorConfig LoadGeneratorConfig(const std::filesystem::path& path) {
  return ParseGeneratorConfig(ReadFile(path));
}

GeneratedWorld GenerateWorld(const GeneratorConfig& config, const NameLexicon& names,
                             const PopulationSources& sources) {
  PopulationSources src = sources;
  if (config.planted_condition) {
    src.planted_condition = config.planted_condition;
    src.planted_patients = config.planted_patients;
  }
  GeneratedWorld w;
  w.gold = GeneratePhiTable(config.patients, DeriveSeed(config.seed, {1}), names, src);
  w.unfilled = SynthesizeDocuments(w.gold, config.templates, DeriveSeed(config.seed, {2}));
  w.filled = FillPlaceholders(w.unfilled, w.gold, config.fill_rate, DeriveSeed(config.seed, {3}));
  w.unfilled.provenance.seed = w.filled.provenance.seed = config.seed;
  size_t train = w.filled.documents.size(), val = 0;
  if (config.sizes) {
    std::tie(train, val) = *config.sizes;
  } else if (config.subset_mode == SubsetMode::kSmallLike) {
    train = 0;
    for (const Document& d : w.filled.documents) {
      train += d.category == NoteCategory::kDischargeSummary ||
               d.category == NoteCategory::kProgressNote;
    }
  }
  std::tie(w.train, w.val) =
      SelectSubset(w.filled, config.subset_mode, train, val, DeriveSeed(config.seed, {4}));
  return w;
}

}  // namespace kart
