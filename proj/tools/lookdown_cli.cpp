#include "lookdown/verify.hpp"
#include "lookdown/version.hpp"
#include <cstdio>
int main(){ std::puts(lookdown::kVersion); return 0; }
