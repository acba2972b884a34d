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

#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "kart/error.h"
#include "test_support.h"

namespace kart {
namespace {

PhiRecord Sample(int id) {
  PhiRecord r;
  r.patient_id = id;
  r.first_name = "mary";
  r.last_name = "smith";
  r.age = 54;
  r.sex = Sex::kFemale;
  r.phone = "555-123-4567";
  r.dates = {"2101-02-03", "2101-05-06"};
  r.other_ids = {{"fax", "+1-555-000-1111"}, {"hospital", "northgate medical center"}};
  r.pmh = {"asthma"};
  return r;
}

TEST(PhiTest, EighteenCategoriesRoundTripByName) {
  std::set<std::string> names;
  for (HipaaCategory c : kAllHipaaCategories) {
    const auto name = std::string(HipaaCategoryName(c));
    names.insert(name);
    EXPECT_EQ(ParseHipaaCategory(name), c);
  }
  EXPECT_EQ(names.size(), 18u);
  EXPECT_EQ(AllHipaaCategorySet().size(), 18u);
  EXPECT_FALSE(ParseHipaaCategory("pmh").has_value());
}

TEST(PhiTest, EveryFieldBelongsToOneCategoryAndAllCategoriesAreCovered) {
  std::set<HipaaCategory> covered;
  for (PhiField f : kAllPhiFields) {
    EXPECT_EQ(ParsePhiField(PhiFieldName(f)), f);
    covered.insert(CategoryOf(f));
  }
  EXPECT_EQ(covered, AllHipaaCategorySet());
  EXPECT_EQ(CategoryOf(PhiField::kFirstName), HipaaCategory::kNames);
  EXPECT_EQ(CategoryOf(PhiField::kLastName), HipaaCategory::kNames);
  EXPECT_EQ(CategoryOf(PhiField::kHospital), HipaaCategory::kGeographic);
}

TEST(PhiTest, ValuesReadTheMatchingAttribute) {
  const PhiRecord r = Sample(0);
  EXPECT_EQ(r.FullName(), "mary smith");
  EXPECT_EQ(r.Values(PhiField::kFirstName), std::vector<std::string>{"mary"});
  EXPECT_EQ(r.Values(PhiField::kDate).size(), 2u);
  EXPECT_EQ(r.Values(PhiField::kFax), std::vector<std::string>{"+1-555-000-1111"});
  EXPECT_TRUE(r.Values(PhiField::kEmail).empty());
}

TEST(PhiTest, TableRoundTripsThroughJsonLines) {
  PhiTable t;
  t.rows = {Sample(0), Sample(1)};
  t.rows[1].age.reset();
  t.rows[1].sex.reset();
  std::stringstream buf;
  WritePhiTable(t, buf);
  EXPECT_EQ(ReadPhiTable(buf), t);
}

TEST(PhiTest, FindIsPositional) {
  PhiTable t;
  t.rows = {Sample(0), Sample(1)};
  ASSERT_NE(t.Find(1), nullptr);
  EXPECT_EQ(t.Find(1)->patient_id, 1);
  EXPECT_EQ(t.Find(2), nullptr);
  EXPECT_EQ(t.Find(-1), nullptr);
}

TEST(PhiTest, ValidateRejectsSparseIdsBadAgesAndNamelessGoldRows) {
  PhiTable t;
  t.rows = {Sample(0), Sample(2)};
  EXPECT_THROW(t.Validate(), Error);
  t.rows[1].patient_id = 1;
  t.rows[1].age = 130;
  EXPECT_THROW(t.Validate(), Error);
  t.rows[1].age = 30;
  t.rows[1].last_name.clear();
  EXPECT_THROW(t.Validate(), Error);
  t.role = TableRole::kAttackerEstimate;
  EXPECT_NO_THROW(t.Validate());
}

TEST(PhiTest, MalformedLinesReportTheirNumber) {
  std::istringstream in("{\"role\":\"gold\"}\n{\"patient_id\": 0, \"sex\": \"other\"}\n");
  try {
    ReadPhiTable(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("other"), std::string::npos);
  }
  std::istringstream bad("{\"role\":\"gold\"}\nnot json\n");
  try {
    ReadPhiTable(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

}  // namespace
}  // namespace kart
