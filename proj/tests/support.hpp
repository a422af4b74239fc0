#pragma once

#include <gtest/gtest.h>

#include "reference.hpp"
