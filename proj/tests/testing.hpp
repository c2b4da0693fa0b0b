#pragma once

#include <doctest.h>

#include "support.hpp"

// Fails unless `expr` throws emgds::Error with the given code.
#define CHECK_ERROR_CODE(expr, expected)                                  \
  do {                                                                    \
    bool thrown_ = false;                                                 \
    try {                                                                 \
      (void)(expr);                                                       \
    } catch (const emgds::Error& e_) {                                    \
      thrown_ = true;                                                     \
      CHECK_MESSAGE(e_.code() == (expected), "got " << e_.what());        \
    }                                                                     \
    CHECK_MESSAGE(thrown_, "expected " << emgds::to_string(expected));    \
  } while (0)
