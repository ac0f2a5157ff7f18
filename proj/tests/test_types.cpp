#include <gtest/gtest.h>

#include <cmath>

#include "subfair/types.hpp"

using namespace subfair;

TEST(SubgroupKey, ParseSortsAndPrints) {
    const auto k = SubgroupKey::parse("sex=F&race=white");
    EXPECT_EQ(k.str(), "race=white&sex=F");
    EXPECT_EQ(k, SubgroupKey::parse("race=white&sex=F"));
    ASSERT_NE(k.category_of("sex"), nullptr);
    EXPECT_EQ(*k.category_of("sex"), "F");
    EXPECT_EQ(k.category_of("age"), nullptr);
    EXPECT_TRUE(k.matches(std::map<std::string, std::string>{{"sex", "F"}, {"race", "white"}, {"age", "old"}}));
    EXPECT_FALSE(k.matches(std::map<std::string, std::string>{{"sex", "F"}}));
}

TEST(SubgroupKey, Invalid) {
    EXPECT_THROW(SubgroupKey(std::vector<SubgroupKey::Constraint>{}), std::invalid_argument);
    EXPECT_THROW(SubgroupKey::parse("sex=F&sex=M"), std::invalid_argument);
    EXPECT_THROW(SubgroupKey::parse("sex"), std::invalid_argument);
    EXPECT_THROW(SubgroupKey::parse(""), std::invalid_argument);
}

TEST(GroupRef, PopulationIsDistinct) {
    EXPECT_TRUE(std::holds_alternative<Population>(parse_group("population")));
    EXPECT_TRUE(std::holds_alternative<Population>(parse_group("*")));
    EXPECT_EQ(to_string(parse_group("*")), "population");
    const ScoreRecord r{"i", "p", 0.1, Label::normal, {{"sex", "M"}}};
    EXPECT_TRUE(matches(Population{}, r));
    EXPECT_FALSE(matches(parse_group("sex=F"), r));
}

TEST(Cohort, Validate) {
    Cohort c;
    c.schema = {"sex"};
    c.records = {{"i", "p", 0.1, Label::normal, {{"sex", "M"}}}};
    EXPECT_NO_THROW(c.validate());
    c.records[0].score = std::nan("");
    EXPECT_THROW(c.validate(), InputError);
    c.records[0].score = 0.1;
    c.records[0].attributes.clear();
    EXPECT_THROW(c.validate(), InputError);
}
