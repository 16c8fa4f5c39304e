#include <cstdio>
int main(){ std::puts("oscillab cli placeholder"); return 0; }
