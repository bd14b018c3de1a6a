#include <gtest/gtest.h>
TEST(Placeholder, test_apodization) { SUCCEED(); }
