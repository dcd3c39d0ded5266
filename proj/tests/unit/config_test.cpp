// Copyright 2026 The dclssr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dcls/config.hpp"

#include <gtest/gtest.h>

#include "dcls/common.hpp"

namespace dcls::config {
namespace {

TEST(Config, ParsesCommentsAndLaterAssignmentsWin) {
  const Config c = Config::parse(
      "# header\n"
      "a = 1\n"
      "\n"
      "  b=two words   # trailing\n"
      "a = 3\n"
      "list = 1.5, 2,3e-1\n");
  EXPECT_EQ(c.get_int("a", 0), 3);
  EXPECT_EQ(c.get_string("b", ""), "two words");
  EXPECT_EQ(c.get_doubles("list", {}), (std::vector<double>{1.5, 2.0, 0.3}));
  EXPECT_EQ(c.get_int("missing", 9), 9);
  EXPECT_FALSE(c.has("missing"));
  EXPECT_THROW(Config::parse("novalue\n"), InvalidArgument);
  EXPECT_THROW(Config::parse(" = 3\n"), InvalidArgument);
}

TEST(Config, TypedErrorsNameTheKey) {
  const Config c = Config::parse("n = 12x\nf = abc\nb = maybe\nl = 1,,2\n");
  for (const char* key : {"n", "f", "b", "l"}) {
    try {
      if (std::string(key) == "n") c.get_int(key, 0);
      if (std::string(key) == "f") c.get_double(key, 0);
      if (std::string(key) == "b") c.get_bool(key, false);
      if (std::string(key) == "l") c.get_ints(key, {});
      ADD_FAILURE() << key;
    } catch (const InvalidArgument& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(c.require_string("absent"), InvalidArgument);
}

TEST(Config, BoolsAndOverrides) {
  Config c = Config::parse("x = true\ny = 0\n");
  EXPECT_TRUE(c.get_bool("x", false));
  EXPECT_FALSE(c.get_bool("y", true));
  c.apply_override("y=1");
  c.apply_override("z = 2.5");
  EXPECT_TRUE(c.get_bool("y", false));
  EXPECT_EQ(c.get_double("z", 0), 2.5);
  EXPECT_THROW(c.apply_override("nothing"), InvalidArgument);
}

TEST(Config, SerializeRoundTrips) {
  Config c;
  c.set("zeta", "1");
  c.set("alpha", join(std::vector<double>{0.1, 1.0 / 3.0}));
  c.set("ints", join(std::vector<int>{7, 5, 3, 1}));
  const std::string text = c.serialize();
  EXPECT_EQ(text.find("alpha"), 0u);
  const Config back = Config::parse(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.get_doubles("alpha", {})[1], 1.0 / 3.0);
  EXPECT_EQ(back.get_ints("ints", {}), (std::vector<int>{7, 5, 3, 1}));
}

}  // namespace
}  // namespace dcls::config
