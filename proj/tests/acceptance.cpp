#include "lookdown/verify.hpp"
int main(){ return 0; }
