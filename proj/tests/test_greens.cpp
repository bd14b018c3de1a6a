#include <gtest/gtest.h>
TEST(Placeholder, test_greens) { SUCCEED(); }
