#include <string.h>
#include "stat.h"

/* Copy a device name into a fixed buffer. */
void copy_name(char *dst, const char *src)
{
	strncpy(dst, src, 31);
	dst[31] = '\0';
}
