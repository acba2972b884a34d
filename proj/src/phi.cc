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

#include "kart/phi.h"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "kart/error.h"
#include "kart/io.h"

namespace kart {
namespace {

using Json = nlohmann::ordered_json;

struct CategoryInfo {
  HipaaCategory category;
  std::string_view name;
  std::string_view tag;
};

constexpr std::array<CategoryInfo, 18> kCategoryInfo = {{
    {HipaaCategory::kNames, "names", "NAME"},
    {HipaaCategory::kGeographic, "geographic", "LOCATION"},
    {HipaaCategory::kDates, "dates", "DATE"},
    {HipaaCategory::kPhone, "phone", "PHONE"},
    {HipaaCategory::kFax, "fax", "FAX"},
    {HipaaCategory::kEmail, "email", "EMAIL"},
    {HipaaCategory::kSsn, "ssn", "SSN"},
    {HipaaCategory::kMrn, "mrn", "MRN"},
    {HipaaCategory::kHealthPlan, "health_plan", "HEALTHPLAN"},
    {HipaaCategory::kAccount, "account", "ACCOUNT"},
    {HipaaCategory::kLicense, "license", "LICENSE"},
    {HipaaCategory::kVehicle, "vehicle", "VEHICLE"},
    {HipaaCategory::kDevice, "device", "DEVICE"},
    {HipaaCategory::kUrl, "url", "URL"},
    {HipaaCategory::kIp, "ip", "IP"},
    {HipaaCategory::kBiometric, "biometric", "BIOMETRIC"},
    {HipaaCategory::kPhoto, "photo", "PHOTO"},
    {HipaaCategory::kOtherId, "other_id", "ID"},
}};

struct FieldInfo {
  PhiField field;
  std::string_view name;
  HipaaCategory category;
};

constexpr std::array<FieldInfo, 20> kFieldInfo = {{
    {PhiField::kFirstName, "first_name", HipaaCategory::kNames},
    {PhiField::kLastName, "last_name", HipaaCategory::kNames},
    {PhiField::kAddress, "address", HipaaCategory::kGeographic},
    {PhiField::kHospital, "hospital", HipaaCategory::kGeographic},
    {PhiField::kDate, "date", HipaaCategory::kDates},
    {PhiField::kPhone, "phone", HipaaCategory::kPhone},
    {PhiField::kFax, "fax", HipaaCategory::kFax},
    {PhiField::kEmail, "email", HipaaCategory::kEmail},
    {PhiField::kSsn, "ssn", HipaaCategory::kSsn},
    {PhiField::kMrn, "mrn", HipaaCategory::kMrn},
    {PhiField::kHealthPlan, "health_plan", HipaaCategory::kHealthPlan},
    {PhiField::kAccount, "account", HipaaCategory::kAccount},
    {PhiField::kLicense, "license", HipaaCategory::kLicense},
    {PhiField::kVehicle, "vehicle", HipaaCategory::kVehicle},
    {PhiField::kDevice, "device", HipaaCategory::kDevice},
    {PhiField::kUrl, "url", HipaaCategory::kUrl},
    {PhiField::kIp, "ip", HipaaCategory::kIp},
    {PhiField::kBiometric, "biometric", HipaaCategory::kBiometric},
    {PhiField::kPhoto, "photo", HipaaCategory::kPhoto},
    {PhiField::kOtherId, "other_id", HipaaCategory::kOtherId},
}};

const CategoryInfo& Info(HipaaCategory c) { return kCategoryInfo[static_cast<size_t>(c)]; }
const FieldInfo& Info(PhiField f) { return kFieldInfo[static_cast<size_t>(f)]; }

std::string_view RoleName(TableRole role) {
  return role == TableRole::kGold ? "gold" : "attacker_estimate";
}

Json RecordToJson(const PhiRecord& r) {
  Json j;
  j["patient_id"] = r.patient_id;
  j["first_name"] = r.first_name;
  j["last_name"] = r.last_name;
  j["full_name"] = r.FullName();
  j["age"] = r.age ? Json(*r.age) : Json(nullptr);
  j["sex"] = r.sex ? Json(std::string(SexName(*r.sex))) : Json(nullptr);
  j["phone"] = r.phone;
  j["address"] = r.address;
  j["dates"] = r.dates;
  j["mrn"] = r.mrn;
  j["email"] = r.email;
  j["url"] = r.url;
  j["ip"] = r.ip;
  j["other_ids"] = Json::object();
  for (const auto& [k, v] : r.other_ids) j["other_ids"][k] = v;
  j["pmh"] = r.pmh;
  j["medications"] = r.medications;
  return j;
}

std::string StringOr(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return it->get<std::string>();
}

std::vector<std::string> ListOr(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  return it->get<std::vector<std::string>>();
}

PhiRecord RecordFromJson(const Json& j) {
  PhiRecord r;
  r.patient_id = j.at("patient_id").get<int>();
  r.first_name = StringOr(j, "first_name");
  r.last_name = StringOr(j, "last_name");
  if (auto it = j.find("age"); it != j.end() && !it->is_null()) r.age = it->get<int>();
  if (auto it = j.find("sex"); it != j.end() && !it->is_null()) {
    r.sex = ParseSex(it->get<std::string>());
    if (!r.sex) throw Error(ErrorKind::kValidation, fmt::format("unknown sex '{}'", it->get<std::string>()));
  }
  r.phone = StringOr(j, "phone");
  r.address = StringOr(j, "address");
  r.dates = ListOr(j, "dates");
  r.mrn = StringOr(j, "mrn");
  r.email = StringOr(j, "email");
  r.url = StringOr(j, "url");
  r.ip = StringOr(j, "ip");
  if (auto it = j.find("other_ids"); it != j.end() && !it->is_null()) {
    r.other_ids = it->get<std::map<std::string, std::string>>();
  }
  r.pmh = ListOr(j, "pmh");
  r.medications = ListOr(j, "medications");
  if (auto it = j.find("full_name"); it != j.end() && !it->is_null()) {
    if (it->get<std::string>() != r.FullName()) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("patient {}: full_name '{}' is not \"first last\"", r.patient_id,
                              it->get<std::string>()));
    }
  }
  return r;
}

}  // namespace

std::string_view HipaaCategoryName(HipaaCategory category) { return Info(category).name; }

std::optional<HipaaCategory> ParseHipaaCategory(std::string_view name) {
  for (const auto& info : kCategoryInfo) {
    if (info.name == name) return info.category;
  }
  return std::nullopt;
}

std::string_view PlaceholderTag(HipaaCategory category) { return Info(category).tag; }

std::set<HipaaCategory> AllHipaaCategorySet() {
  return {kAllHipaaCategories.begin(), kAllHipaaCategories.end()};
}

std::string_view PhiFieldName(PhiField field) { return Info(field).name; }

std::optional<PhiField> ParsePhiField(std::string_view name) {
  for (const auto& info : kFieldInfo) {
    if (info.name == name) return info.field;
  }
  return std::nullopt;
}

HipaaCategory CategoryOf(PhiField field) { return Info(field).category; }

std::string_view SexName(Sex sex) { return sex == Sex::kMale ? "male" : "female"; }

std::optional<Sex> ParseSex(std::string_view name) {
  if (name == "male") return Sex::kMale;
  if (name == "female") return Sex::kFemale;
  return std::nullopt;
}

std::string PhiRecord::FullName() const {
  if (first_name.empty() && last_name.empty()) return {};
  return first_name + " " + last_name;
}

std::vector<std::string> PhiRecord::Values(PhiField field) const {
  auto one = [](const std::string& s) {
    return s.empty() ? std::vector<std::string>{} : std::vector<std::string>{s};
  };
  switch (field) {
    case PhiField::kFirstName: return one(first_name);
    case PhiField::kLastName: return one(last_name);
    case PhiField::kAddress: return one(address);
    case PhiField::kDate: return dates;
    case PhiField::kPhone: return one(phone);
    case PhiField::kEmail: return one(email);
    case PhiField::kMrn: return one(mrn);
    case PhiField::kUrl: return one(url);
    case PhiField::kIp: return one(ip);
    default: {
      auto it = other_ids.find(std::string(PhiFieldName(field)));
      return it == other_ids.end() ? std::vector<std::string>{} : one(it->second);
    }
  }
}

const PhiRecord* PhiTable::Find(int patient_id) const {
  if (patient_id < 0 || static_cast<size_t>(patient_id) >= rows.size()) return nullptr;
  const PhiRecord& r = rows[static_cast<size_t>(patient_id)];
  return r.patient_id == patient_id ? &r : nullptr;
}

void PhiTable::Validate() const {
  for (size_t i = 0; i < rows.size(); ++i) {
    const PhiRecord& r = rows[i];
    if (r.patient_id != static_cast<int>(i)) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("patient_id {} at row {}: ids must be unique and dense in [0, {})",
                              r.patient_id, i, rows.size()));
    }
    if (r.age && (*r.age < 0 || *r.age > 120)) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("patient {}: age {} outside [0, 120]", r.patient_id, *r.age));
    }
    if (role == TableRole::kGold && (r.first_name.empty() || r.last_name.empty())) {
      throw Error(ErrorKind::kValidation,
                  fmt::format("patient {}: gold rows need first and last names", r.patient_id));
    }
  }
}

void WritePhiTable(const PhiTable& table, std::ostream& out) {
  Json header;
  header["role"] = std::string(RoleName(table.role));
  out << header.dump() << '\n';
  for (const PhiRecord& r : table.rows) out << RecordToJson(r).dump() << '\n';
}

PhiTable ReadPhiTable(std::istream& in) {
  PhiTable table;
  ForEachLine(in, [&](std::string_view line, size_t number) {
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, fmt::format("line {}: {}", number, e.what()));
    }
    if (!j.is_object()) throw Error(ErrorKind::kParse, fmt::format("line {}: expected an object", number));
    if (!j.contains("patient_id")) {
      std::string role = StringOr(j, "role");
      if (role == "gold") {
        table.role = TableRole::kGold;
      } else if (role == "attacker_estimate") {
        table.role = TableRole::kAttackerEstimate;
      } else {
        throw Error(ErrorKind::kParse, fmt::format("line {}: record without patient_id", number));
      }
      return;
    }
    try {
      table.rows.push_back(RecordFromJson(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kParse, fmt::format("line {}: {}", number, e.what()));
    }
  });
  table.Validate();
  return table;
}

void SavePhiTable(const PhiTable& table, const std::filesystem::path& path) {
  WriteFileAtomic(path, [&](std::ostream& out) { WritePhiTable(table, out); });
}

PhiTable LoadPhiTable(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  return ReadPhiTable(in);
}

}  // namespace kart
