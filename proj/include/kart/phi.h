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

#ifndef KART_PHI_H_
#define KART_PHI_H_

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace kart {

// The eighteen HIPAA Safe Harbor identifier categories.
enum class HipaaCategory {
  kNames,
  kGeographic,
  kDates,
  kPhone,
  kFax,
  kEmail,
  kSsn,
  kMrn,
  kHealthPlan,
  kAccount,
  kLicense,
  kVehicle,
  kDevice,
  kUrl,
  kIp,
  kBiometric,
  kPhoto,
  kOtherId,
};

inline constexpr std::array<HipaaCategory, 18> kAllHipaaCategories = {
    HipaaCategory::kNames,     HipaaCategory::kGeographic, HipaaCategory::kDates,
    HipaaCategory::kPhone,     HipaaCategory::kFax,        HipaaCategory::kEmail,
    HipaaCategory::kSsn,       HipaaCategory::kMrn,        HipaaCategory::kHealthPlan,
    HipaaCategory::kAccount,   HipaaCategory::kLicense,    HipaaCategory::kVehicle,
    HipaaCategory::kDevice,    HipaaCategory::kUrl,        HipaaCategory::kIp,
    HipaaCategory::kBiometric, HipaaCategory::kPhoto,      HipaaCategory::kOtherId,
};

std::string_view HipaaCategoryName(HipaaCategory category);
std::optional<HipaaCategory> ParseHipaaCategory(std::string_view name);
// Upper-case tag used inside placeholder tokens, e.g. "NAME" in "[PH-NAME]".
std::string_view PlaceholderTag(HipaaCategory category);
std::set<HipaaCategory> AllHipaaCategorySet();

// Fine-grained identifier slot. Every field belongs to exactly one HIPAA
// category; the field tells the filler which PhiRecord attribute to use.
enum class PhiField {
  kFirstName,
  kLastName,
  kAddress,
  kHospital,
  kDate,
  kPhone,
  kFax,
  kEmail,
  kSsn,
  kMrn,
  kHealthPlan,
  kAccount,
  kLicense,
  kVehicle,
  kDevice,
  kUrl,
  kIp,
  kBiometric,
  kPhoto,
  kOtherId,
};

inline constexpr std::array<PhiField, 20> kAllPhiFields = {
    PhiField::kFirstName, PhiField::kLastName,  PhiField::kAddress,
    PhiField::kHospital,  PhiField::kDate,      PhiField::kPhone,
    PhiField::kFax,       PhiField::kEmail,     PhiField::kSsn,
    PhiField::kMrn,       PhiField::kHealthPlan, PhiField::kAccount,
    PhiField::kLicense,   PhiField::kVehicle,   PhiField::kDevice,
    PhiField::kUrl,       PhiField::kIp,        PhiField::kBiometric,
    PhiField::kPhoto,     PhiField::kOtherId,
};

std::string_view PhiFieldName(PhiField field);
std::optional<PhiField> ParsePhiField(std::string_view name);
HipaaCategory CategoryOf(PhiField field);

enum class Sex { kMale, kFemale };
std::string_view SexName(Sex sex);
std::optional<Sex> ParseSex(std::string_view name);

struct PhiRecord {
  int patient_id = 0;
  std::string first_name;
  std::string last_name;
  std::optional<int> age;
  std::optional<Sex> sex;
  std::string phone;
  std::string address;
  std::vector<std::string> dates;  // ISO yyyy-mm-dd
  std::string mrn;
  std::string email;
  std::string url;
  std::string ip;
  // Identifiers without a dedicated column, keyed by field name
  // ("fax", "ssn", "hospital", ...).
  std::map<std::string, std::string> other_ids;
  std::vector<std::string> pmh;
  std::vector<std::string> medications;

  std::string FullName() const;
  // Gold strings stored for `field`; empty when the attribute is unknown.
  std::vector<std::string> Values(PhiField field) const;

  bool operator==(const PhiRecord&) const = default;
};

enum class TableRole { kGold, kAttackerEstimate };

struct PhiTable {
  TableRole role = TableRole::kGold;
  std::vector<PhiRecord> rows;

  // Rows are dense by patient_id, so lookup is positional.
  const PhiRecord* Find(int patient_id) const;
  void Validate() const;

  bool operator==(const PhiTable&) const = default;
};

void WritePhiTable(const PhiTable& table, std::ostream& out);
PhiTable ReadPhiTable(std::istream& in);
void SavePhiTable(const PhiTable& table, const std::filesystem::path& path);
PhiTable LoadPhiTable(const std::filesystem::path& path);

}  // namespace kart

#endif  // KART_PHI_H_
