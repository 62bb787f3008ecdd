#include <stddef.h>
#include "stat.h"

/* Scale a sample count into a buffer index. */
size_t sa_index(unsigned int count, unsigned int width)
{
	unsigned int n = count * width;
	return (size_t)n;
}
