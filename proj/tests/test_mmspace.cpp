#include <catch2/catch_amalgamated.hpp>

#include "lookdown/verify.hpp"
