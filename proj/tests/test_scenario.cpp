#include <gtest/gtest.h>
TEST(Placeholder, test_scenario) { SUCCEED(); }
