#include <stddef.h>

size_t sa_index(unsigned int count, unsigned int width);
void copy_name(char *dst, const char *src);
